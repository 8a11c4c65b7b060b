// One line per acceptance criterion. Exit status is non-zero when a
// criterion fails that is not listed with --known-fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "rh/catastrophe.hpp"
#include "rh/detection.hpp"
#include "rh/hjb.hpp"
#include "rh/policy.hpp"
#include "rh/sde.hpp"
#include "rh/sequential.hpp"

#ifndef RHSIM_PATH
#define RHSIM_PATH "rhsim"
#endif
#ifndef RH_CONFIG_DIR
#define RH_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace rh;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double mean_of(const std::vector<std::optional<double>>& v, std::size_t* missing = nullptr) {
  double s = 0.0;
  std::size_t n = 0, miss = 0;
  for (const auto& x : v) {
    if (x) {
      s += *x;
      ++n;
    } else {
      ++miss;
    }
  }
  if (missing) *missing = miss;
  return n ? s / static_cast<double>(n) : std::nan("");
}

Verdict criterion1() {
  double worst = 0.0;
  bool delay_ok = true;
  std::ostringstream d;
  for (double lam : {-0.5, -1.5, -2.5}) {
    for (double T : {10.0, 50.0}) {
      const double nu = solve_threshold(lam, T);
      const double lhs = 2.0 / (lam * lam) * std::expm1(nu) - 2.0 / (lam * lam) * nu;
      worst = std::max(worst, std::abs(lhs - T));
      const double delay = expected_delay(lam, nu);
      delay_ok = delay_ok && delay < T;
    }
  }
  d << "max |equation residual| = " << num(worst, 3) << " (tol 1e-8), delay < T in all 6 cases: "
    << (delay_ok ? "yes" : "no");
  return {worst < 1e-8 && delay_ok, d.str()};
}

McScenario detection_scenario(double lambda, double nu) {
  McScenario sc;
  sc.natural_drift = 0.0;
  sc.sigma = 1.0;
  sc.x0 = 1e6;
  sc.absorbing = false;
  sc.horizon = 1500.0;
  sc.detector = std::make_pair(lambda, nu);
  sc.stop_at_alarm = true;
  return sc;
}

Verdict criterion2() {
  const double lam = -1.5, T = 50.0, dt = 1e-2;
  SimConfig cfg;
  cfg.dt = dt;
  cfg.seed = 20260101;
  cfg.n_paths = 5000;
  auto sc = detection_scenario(lam, calibrated_threshold(lam, T, dt));
  const auto res = monte_carlo(sc, cfg);
  std::size_t missing = 0;
  const double m = mean_of(res.alarm_times, &missing);
  const double rel = std::abs(m - T) / T;
  return {missing == 0 && rel <= 0.05,
          "mean false-alarm time " + num(m) + " vs T = 50 (rel err " + num(rel, 3) +
              ", tol 0.05), paths without alarm: " + std::to_string(missing)};
}

Verdict criterion3() {
  const double lam = -1.5, T = 50.0, dt = 1e-2;
  SimConfig cfg;
  cfg.dt = dt;
  cfg.seed = 20260102;
  cfg.n_paths = 10000;
  auto sc = detection_scenario(lam, calibrated_threshold(lam, T, dt));
  sc.change = ChangePoint::fixed;
  sc.theta = 0.0;
  sc.post_change_lambda = lam;
  const auto res = monte_carlo(sc, cfg);
  std::size_t missing = 0;
  const double m = mean_of(res.alarm_times, &missing);
  const double target = expected_delay(lam, solve_threshold(lam, T));
  const double rel = std::abs(m - target) / target;
  return {missing == 0 && rel <= 0.05, "mean detection time " + num(m) + " vs " + num(target) +
                                           " (rel err " + num(rel, 3) + ", tol 0.05)"};
}

Verdict criterion4() {
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.seed = 20260103;
  cfg.n_paths = 10000;
  cfg.stepper = Stepper::euler;
  McScenario sc;
  sc.natural_drift = -2.0;
  sc.sigma = 3.0;
  sc.x0 = 10.0;
  sc.horizon = 60.0;
  sc.stop_at_alarm = true;  // per-path outcomes only
  const auto res = monte_carlo(sc, cfg);
  std::vector<double> hits;
  for (const auto& h : res.hit_times) {
    if (h) hits.push_back(*h);
  }
  std::sort(hits.begin(), hits.end());
  double mean = 0.0;
  for (double h : hits) mean += h;
  mean /= static_cast<double>(hits.size());
  const auto ig = ig_first_passage(10.0, -2.0, 3.0);
  double ks = 0.0;
  const double n = static_cast<double>(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const double F = ig.cdf(hits[i]);
    ks = std::max({ks, std::abs(F - static_cast<double>(i) / n),
                   std::abs(static_cast<double>(i + 1) / n - F)});
  }
  const double rel = std::abs(mean - 5.0) / 5.0;
  const bool all_hit = hits.size() == res.hit_times.size();
  return {all_hit && rel <= 0.03 && ks < 0.05,
          "mean hit time " + num(mean) + " (rel err " + num(rel, 3) + ", tol 0.03), KS = " +
              num(ks, 3) + " (tol 0.05), hit " + std::to_string(hits.size()) + "/10000"};
}

Verdict criterion5() {
  const double x0 = 10.0, d = -2.0, s = 3.0, H = 40.0;
  const auto k = solve_kfe(nullptr, d, s, x0, H, default_kfe_x_max(x0, d, s, H), 400, 4000);
  const double rel = std::abs(k.numeric_mean_hit_time - 5.0) / 5.0;
  double sup = 0.0;
  for (std::size_t i = 1; i < k.nx(); ++i) {
    const double x = k.x_grid[i];
    sup = std::max(sup, std::abs(k.at(0, i) - ig_first_passage(x, d, s).cdf(H)));
  }
  const double at_x0 = std::abs(k.phi_at(0, x0) - ig_first_passage(x0, d, s).cdf(H));
  return {rel <= 0.02 && sup <= 1e-3,
          "mean " + num(k.numeric_mean_hit_time) + " (rel err " + num(rel, 3) +
              ", tol 0.02), |phi(x0,0) - IG cdf| = " + num(at_x0, 3) +
              ", sup over grid = " + num(sup, 3) + " (tol 1e-3)"};
}

const MarketParams kSmoothMarket{5.0, 0.75, 1.25, 0.5, 0.02};
const ResourceParams kSmoothResource{6.0, 3.25, 10.0};

Verdict criterion6() {
  const auto sol = solve_hjb(kSmoothMarket, kSmoothResource, 0.0, 10.0, 40.0, 400, 1000);
  bool monotone = true;
  for (std::size_t n = 0; n < sol.nt(); ++n) {
    for (std::size_t i = 1; i < sol.nx(); ++i) {
      if (sol.value(n, i) < sol.value(n, i - 1) - 1e-12) monotone = false;
    }
  }
  const auto longer = solve_hjb(kSmoothMarket, kSmoothResource, 0.0, 400.0, 40.0, 200, 2000);
  const double qm = kSmoothMarket.monopoly_quantity();
  const double h = longer.x_grid[1];
  double worst = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 20; i < 180; ++i) {
    const double vx = (longer.value(0, i + 1) - longer.value(0, i)) / h;
    if (std::abs(vx) > 1e-3) continue;
    worst = std::max(worst, std::abs(longer.policy(0, i) - qm));
    ++used;
  }
  return {sol.pde_residual < 1e-4 && monotone && used > 0 && worst <= 1e-3,
          "residual " + num(sol.pde_residual, 3) + " (tol 1e-4), V nondecreasing: " +
              (monotone ? "yes" : "no") + ", max |q - qm| = " + num(worst, 3) + " over " +
              std::to_string(used) + " nodes with V_x ~ 0 (tol 1e-3)"};
}

Verdict criterion7() {
  const double qm = kSmoothMarket.monopoly_quantity();
  std::ostringstream d;
  bool ok = true;

  double q_end = 0.0;
  for (double lam : {0.0, -2.5}) {
    for (double h : {2.0, 10.0, 40.0}) {
      q_end = std::max(q_end, std::abs(
          optimal_extraction(build_policy(kSmoothMarket, kSmoothResource, lam, h), h, 0.0)));
    }
  }
  ok = ok && q_end == 0.0;
  d << "q*(h,0) = " << q_end;

  const auto far = build_policy(kSmoothMarket, kSmoothResource, 0.0, 5000.0);
  double lim_gap = 0.0;
  for (double x : {0.5, 1.0, 5.0, 10.0}) {
    lim_gap = std::max(lim_gap, std::abs(optimal_extraction(far, 0.0, x) - qm));
  }
  ok = ok && lim_gap <= 1e-6;
  d << ", |q* - qm| at h=5000: " << num(lim_gap, 3);

  double fd_worst = 0.0;
  for (double lam : {0.0, -2.5}) {
    const auto spec = build_policy(kSmoothMarket, kSmoothResource, lam, 10.0);
    for (double x : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0}) {
      const auto s = extraction_at(spec, 1.0, x, spec.horizon());
      if (s.q == 0.0) continue;
      const double e = 1e-5;
      const double fd = (extraction_at(spec, 1.0, x + e, spec.horizon()).q -
                         extraction_at(spec, 1.0, x - e, spec.horizon()).q) /
                        (2.0 * e);
      fd_worst = std::max(fd_worst, std::abs(fd - s.q_x) / std::max(std::abs(s.q_x), 1e-3));
    }
  }
  ok = ok && fd_worst <= 1e-6;
  d << ", q_x vs FD rel " << num(fd_worst, 3);

  const std::vector<double> horizons{2.0, 5.0, 10.0, 20.0, 40.0};
  bool precaution = true;
  for (double h : horizons) {
    const double q0 = optimal_extraction(build_policy(kSmoothMarket, kSmoothResource, 0.0, h), 0.0, 1.0);
    const double q1 =
        optimal_extraction(build_policy(kSmoothMarket, kSmoothResource, -2.5, h), 0.0, 1.0);
    precaution = precaution && q1 < q0;
  }
  const double hs = horizons.front();
  const double a0 = optimal_extraction(build_policy(kSmoothMarket, kSmoothResource, 0.0, hs), 0.0, 10.0);
  const double a1 =
      optimal_extraction(build_policy(kSmoothMarket, kSmoothResource, -2.5, hs), 0.0, 10.0);
  ok = ok && precaution && a1 > a0;
  d << ", precaution at x=1: " << (precaution ? "yes" : "no") << ", aggression at x=10, h=2: "
    << num(a1, 4) << " vs " << num(a0, 4);
  return {ok, d.str()};
}

Verdict criterion8() {
  const MarketParams m{3.0, 0.1, 0.5, 0.25, 0.02};
  const ResourceParams r{5.0, 3.0, 10.0};
  EpisodeConfig cfg;
  cfg.n_periods = 4;
  cfg.lambda0 = -1.5;
  cfg.detection = {50.0};
  const double expected = std::min(50.0, 25.0 + expected_delay(-1.5, solve_threshold(-1.5, 50.0)));
  double worst = 0.0;
  int extinct = 0, four = 0, errors = 0;
  for (int seed = 1; seed <= 100; ++seed) {
    cfg.sim.seed = static_cast<std::uint64_t>(seed);
    const auto res = run_episode(m, r, cfg);
    if (res.termination == Termination::error) ++errors;
    if (!res.periods.empty()) worst = std::max(worst, std::abs(res.periods[0].horizon - expected));
    if (res.termination == Termination::extinct) ++extinct;
    if (res.termination == Termination::completed && res.periods.size() == 4) ++four;
  }
  return {worst <= 1e-10 && extinct >= 1 && four >= 1 && errors == 0,
          "first horizon " + num(expected, 12) + ", max deviation " + num(worst, 3) +
              ", extinct " + std::to_string(extinct) + "/100, completed 4 periods " +
              std::to_string(four) + "/100, errors " + std::to_string(errors)};
}

Verdict criterion9() {
  struct Case {
    double x_start, x_end, coef, expected;
  };
  // Stocks are dyadic so every relative change is exact in binary.
  const Case cases[] = {
      {10.0, 10.0, 5.0, 0.0},     {4.0, 4.0, 3.5, 0.0},      {8.0, 6.0, 5.0, -1.25},
      {4.0, 3.0, 5.0, -1.25},     {16.0, 12.0, 2.0, -0.5},   {2.0, 1.0, 5.0, -2.5},
      {32.0, 8.0, 4.0, -3.0},     {4.0, 0.0, 5.0, -5.0},     {64.0, 63.0, 6.4, -0.1},
      {8.0, 7.0, 3.5, -0.4375},   {4.0, 5.0, 5.0, 2.5},      {16.0, 25.0, 5.0, 3.75},
      {4.0, 8.0, 5.0, 5.0},       {16.0, 17.0, 5.0, 1.25},   {64.0, 65.0, 5.0, 0.625},
      {4.0, 13.0, 5.0, 7.5},      {64.0, 100.0, 3.5, 2.625}, {256.0, 257.0, 2.0, 0.125},
      {1.0, 1.25, 6.0, 3.0},      {0.25, 0.5, 4.0, 4.0},
  };
  int exact = 0;
  for (const auto& c : cases) {
    if (lambda_update(c.x_start, c.x_end, c.coef) == c.expected) ++exact;
  }
  const bool continuity = lambda_update(10.0, 10.0 * (1.0 + 1e-12), 5.0) < 1e-5 &&
                          std::abs(lambda_update(10.0, 10.0 * (1.0 - 1e-12), 5.0)) < 1e-10;
  int violations = 0;
  double worst_delta = 0.0, worst_up = 0.0, worst_down = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double delta = k / 100.0;
    const double up = std::abs(lambda_update(1.0, 1.0 + delta, 5.0));
    const double down = std::abs(lambda_update(1.0, 1.0 - delta, 5.0));
    if (up > down) {
      ++violations;
      if (up - down > worst_up - worst_down) {
        worst_delta = delta;
        worst_up = up;
        worst_down = down;
      }
    }
  }
  std::ostringstream d;
  d << "arithmetic " << exact << "/20 exact, continuity at 0: " << (continuity ? "yes" : "no")
    << ", asymmetry |lam(D)| <= |lam(-D)| violated at " << violations
    << "/100 points of (0,1] (e.g. D=" << worst_delta << ": " << num(worst_up, 4) << " > "
    << num(worst_down, 4) << "; sqrt(D) > D on (0,1))";
  return {exact == 20 && continuity && violations == 0, d.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict criterion10() {
  const fs::path root = fs::temp_directory_path() / "rh_acceptance_determinism";
  fs::remove_all(root);
  const std::string cli = RHSIM_PATH;
  const std::string cfgdir = RH_CONFIG_DIR;
  struct Cmd {
    std::string name, config, extra;
  };
  const std::vector<Cmd> cmds{
      {"simulate", cfgdir + "/episodes.json", ""},
      {"policy-surface", cfgdir + "/policy_surface.json", ""},
      {"catastrophe", cfgdir + "/time_to_catastrophe.json", ""},
      {"detect", cfgdir + "/detect_example.json",
       " --data " + (root / "simulate_a" / "trajectory.csv").string()},
  };
  int files = 0;
  std::vector<std::string> bad;
  for (const auto& c : cmds) {
    for (const char* run : {"a", "b"}) {
      const fs::path out = root / (c.name + "_" + run);
      const std::string line = "\"" + cli + "\" " + c.name + " --config \"" + c.config +
                               "\" --seed 11 --out \"" + out.string() + "\"" + c.extra;
      if (std::system(line.c_str()) != 0) bad.push_back(c.name + " exited non-zero");
    }
    const fs::path a = root / (c.name + "_a"), b = root / (c.name + "_b");
    if (!fs::exists(a)) continue;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      if (slurp(e.path()) != slurp(b / e.path().filename())) {
        bad.push_back(c.name + "/" + e.path().filename().string());
      }
    }
  }
  std::string detail = std::to_string(files) + " CSVs compared";
  for (const auto& b : bad) detail += "; differs: " + b;
  return {bad.empty() && files >= 8, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known_fail;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-fail" && i + 1 < argc) known_fail.insert(std::atoi(argv[++i]));
    if (a == "--only" && i + 1 < argc) only.insert(std::atoi(argv[++i]));
  }
  const std::vector<std::function<Verdict()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d: %s [%.1fs]%s\n", v.pass ? "PASS" : "FAIL", id,
                v.detail.c_str(), secs,
                !v.pass && known_fail.count(id) ? " (known, documented)" : "");
    std::fflush(stdout);
    if (!v.pass && !known_fail.count(id)) ++unexpected;
    if (v.pass && known_fail.count(id)) {
      std::printf("note: criterion %d listed as a known failure but passed\n", id);
      ++unexpected;
    }
  }
  return unexpected == 0 ? 0 : 1;
}
