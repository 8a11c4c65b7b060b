// rhsim: scenario runner for the regime-shift harvesting model.
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "output.hpp"
#include "rh/catastrophe.hpp"
#include "rh/config.hpp"
#include "rh/detection.hpp"
#include "rh/error.hpp"
#include "rh/policy.hpp"
#include "rh/sequential.hpp"

namespace fs = std::filesystem;
using namespace rh;
using rhcli::Csv;

namespace {

constexpr const char* kOutEnv = "RH_OUT_DIR";

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::string data;
};

struct Run {
  ScenarioConfig cfg;
  fs::path dir;
  rhcli::Meta meta;
  bool svg = false;
};

Run prepare(const Options& opt, const char* command) {
  Run run;
  run.cfg = load_config(opt.config);
  if (opt.seed) run.cfg.sim.seed = *opt.seed;
  if (!opt.out.empty()) {
    run.dir = opt.out;
  } else if (!run.cfg.out_dir.empty()) {
    run.dir = run.cfg.out_dir;
  } else if (const char* env = std::getenv(kOutEnv); env && *env) {
    run.dir = env;
  } else {
    run.dir = "out";
  }
  fs::create_directories(run.dir);
  run.meta.command = command;
  run.meta.seed = run.cfg.sim.seed;
  run.meta.config_hash = rhcli::hex64(fnv1a(dump_config(run.cfg)));
  run.svg = opt.format == "svg";
  return run;
}

template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void cmd_simulate(const Run& run) {
  const auto& cfg = run.cfg;
  const EpisodeConfig ec = cfg.episode_config();
  const std::size_t n = static_cast<std::size_t>(cfg.sim.n_paths);
  std::vector<EpisodeResult> results(n);
  parallel_for(n, [&](std::size_t i) { results[i] = run_episode(cfg.market, cfg.resource, ec, i); });

  Csv traj("trajectory", 1, {"path", "t", "X", "q", "regime_id"});
  Csv events("events", 1,
             {"path", "period", "start_time", "horizon", "duration", "theta", "shift_time",
              "alarm_time", "lambda", "next_lambda", "natural_drift", "start_stock", "end_stock",
              "policy", "psi_form", "classification", "at_risk", "expected_hit_time",
              "hit_probability", "termination"});
  for (std::size_t p = 0; p < n; ++p) {
    const auto& r = results[p];
    const auto& tr = r.trajectory;
    std::size_t period = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      while (period + 1 < r.periods.size() &&
             tr.times[k] >= r.periods[period + 1].start_time - 0.5 * tr.dt) {
        ++period;
      }
      traj.row() << p << tr.times[k] << tr.stock[k] << tr.extraction[k] << period;
    }
    for (const auto& rec : r.periods) {
      const auto& c = rec.catastrophe;
      events.row() << p << rec.index << rec.start_time << rec.horizon << rec.duration
                   << rec.theta << rec.shift_time << rec.alarm << rec.lambda << rec.next_lambda
                   << rec.natural_drift << rec.start_stock << rec.end_stock
                   << (rec.numeric_policy ? "numeric" : "closed_form") << to_string(rec.psi_form)
                   << to_string(c.classification) << c.at_risk << c.expected_hit_time
                   << c.hit_probability << to_string(r.termination);
    }
    if (r.termination == Termination::error) {
      std::cerr << "path " << p << ": " << r.error << "\n";
    }
  }
  events.note("mode", to_string(ec.mode));
  traj.write(run.dir, run.meta);
  events.write(run.dir, run.meta);
  if (run.svg) {
    rhcli::write_svg(run.dir / "trajectory.svg", "Controlled stock", traj, "t", "X", {"path"});
  }
  for (const auto& r : results) {
    if (r.termination == Termination::error) throw Error(Errc::invalid_params, r.error);
  }
}

void cmd_policy_surface(const Run& run) {
  const auto& cfg = run.cfg;
  const auto& s = cfg.surface;
  Csv surf("policy_surface", 1,
           {"lambda", "horizon", "t", "x", "q", "V_x", "psi_form", "operating_limit"});
  Csv rent("rent", 1, {"lambda", "horizon", "x", "V_x", "q"});
  for (double lam : s.lambdas) {
    for (double h : s.horizons) {
      if (s.t > h) throw ConfigError("policy_surface.t: exceeds horizon " + rhcli::fmt(h));
      const auto spec = build_policy(cfg.market, cfg.resource, lam, h);
      const double lim = spec.operating_limit();
      for (int i = 0; i < s.nx; ++i) {
        const double x =
            s.nx == 1 ? s.x_min : s.x_min + (s.x_max - s.x_min) * i / static_cast<double>(s.nx - 1);
        auto r = surf.row();
        r << lam << h << s.t << x;
        if (x < lim) {
          r << optimal_extraction(spec, s.t, x) << resource_rent(spec, s.t, x).vx;
        } else {
          r << "" << "";
        }
        r << to_string(spec.form()) << lim;
      }
      for (double x : {1.0, 10.0}) {
        auto r = rent.row();
        r << lam << h << x;
        if (x < lim) {
          r << resource_rent(spec, s.t, x).vx << optimal_extraction(spec, s.t, x);
        } else {
          r << "" << "";
        }
      }
    }
  }
  surf.note("blank", "q and V_x are blank beyond the operating limit");
  surf.write(run.dir, run.meta);
  rent.write(run.dir, run.meta);
  if (run.svg) {
    rhcli::write_svg(run.dir / "policy_surface.svg", "Optimal extraction", surf, "x", "q",
                     {"lambda", "horizon"});
    rhcli::write_svg(run.dir / "rent.svg", "Resource rent", rent, "horizon", "V_x",
                     {"lambda", "x"});
  }
}

void cmd_catastrophe(const Run& run) {
  const auto& cfg = run.cfg;
  const auto& c = cfg.catastrophe;
  std::vector<CatastropheCase> cases = c.cases;
  if (cases.empty()) cases.push_back({"baseline", cfg.resource.x0, cfg.episode.lambda0});

  Csv dens("time_to_catastrophe", 1, {"case", "t", "density", "cdf", "kfe_cdf"});
  Csv slice("kfe_slice", 1, {"case", "x", "phi_t0", "ig_cdf_horizon"});
  Csv report("catastrophe_report", 1,
             {"case", "x0", "natural_drift", "net_drift", "at_risk", "next_horizon",
              "expected_hit_time", "hit_probability", "ig_mean", "ig_shape", "classification",
              "kfe_mean_hit_time", "kfe_hit_probability"});
  std::vector<std::optional<KfeSolution>> kfes(cases.size());
  parallel_for(cases.size(), [&](std::size_t k) {
    const double d = cfg.resource.mu + cases[k].lambda;
    if (c.kfe && d < 0.0) {
      const double x_max = default_kfe_x_max(cases[k].x0, d, cfg.resource.sigma, c.horizon);
      kfes[k] = solve_kfe(nullptr, d, cfg.resource.sigma, cases[k].x0, c.horizon, x_max,
                          c.kfe_nx, c.kfe_nt);
    }
  });

  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& cc = cases[k];
    const double d = cfg.resource.mu + cc.lambda;
    std::optional<InverseGaussian> ig;
    if (d < 0.0) ig = ig_first_passage(cc.x0, d, cfg.resource.sigma);
    const auto& kfe = kfes[k];
    for (int i = 0; i < c.n_t; ++i) {
      const double t = c.t_max * i / static_cast<double>(c.n_t - 1);
      auto r = dens.row();
      r << cc.label << t;
      if (ig) {
        r << ig->density(t) << ig->cdf(t);
      } else {
        r << "" << "";
      }
      if (kfe && t <= c.horizon) {
        const double pos = t / kfe->t_grid[1];
        const std::size_t n = std::min(static_cast<std::size_t>(pos), kfe->nt() - 2);
        const double w = std::min(pos - static_cast<double>(n), 1.0);
        r << (1.0 - w) * kfe->cdf[n] + w * kfe->cdf[n + 1];
      } else {
        r << "";
      }
    }
    if (kfe) {
      const std::size_t stride = std::max<std::size_t>(1, kfe->nx() / 200);
      for (std::size_t i = 0; i < kfe->nx(); i += stride) {
        const double x = kfe->x_grid[i];
        auto r = slice.row();
        r << cc.label << x << kfe->at(0, i);
        if (x > 0.0) {
          r << ig_first_passage(x, d, cfg.resource.sigma).cdf(c.horizon);
        } else {
          r << 1.0;
        }
      }
    }
    const double next_h = expected_detection_horizon(cc.lambda, cfg.detection);
    const auto rep = catastrophe_report(d, cfg.resource.sigma, cc.x0, 0.0, next_h, nullptr,
                                        KfeGrid{c.kfe_nx, c.kfe_nt});
    report.row() << cc.label << cc.x0 << d << rep.net_drift << rep.at_risk << next_h
                 << rep.expected_hit_time << rep.hit_probability << rep.ig_mean << rep.ig_shape
                 << to_string(rep.classification) << rep.kfe_mean_hit_time
                 << (kfe ? std::optional<double>(kfe->hit_probability) : std::nullopt);
  }
  dens.note("blank", "density and cdf are blank when the natural drift is non-negative");
  dens.write(run.dir, run.meta);
  slice.write(run.dir, run.meta);
  report.write(run.dir, run.meta);
  if (run.svg) {
    rhcli::write_svg(run.dir / "time_to_catastrophe.svg", "Time to catastrophe", dens, "t",
                     "density", {"case"});
  }
}

struct Observations {
  std::vector<double> t, x, q;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line, const std::string& col) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("data line " + std::to_string(line) + ": column " + col +
                      " is not a number");
  }
  return v;
}

// Reads t, X and optional q. A 'path' column, as written by simulate,
// restricts the input to the first path.
Observations read_observations(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(file.string() + ": cannot open data file");
  std::string line;
  std::vector<std::string> header;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  auto find = [&](const char* name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto ti = find("t"), xi = find("X"), qi = find("q"), pi = find("path");
  if (!ti) throw ConfigError("data: missing column 't'");
  if (!xi) throw ConfigError("data: missing column 'X'");
  Observations obs;
  std::optional<std::string> first_path;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ConfigError("data line " + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields");
    }
    if (pi) {
      if (!first_path) first_path = cells[*pi];
      if (cells[*pi] != *first_path) continue;
    }
    obs.t.push_back(parse_number(cells[*ti], lineno, "t"));
    obs.x.push_back(parse_number(cells[*xi], lineno, "X"));
    obs.q.push_back(qi ? parse_number(cells[*qi], lineno, "q") : 0.0);
  }
  if (obs.t.size() < 2) throw ConfigError("data: need at least two observations");
  const double dt = obs.t[1] - obs.t[0];
  if (!(dt > 0.0)) throw ConfigError("data: time must increase");
  std::vector<std::size_t> bad;
  for (std::size_t k = 1; k < obs.t.size(); ++k) {
    if (std::abs(obs.t[k] - obs.t[k - 1] - dt) > 1e-6 * dt) bad.push_back(k);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "data: non-uniform spacing at observation";
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg << ' ' << bad[i];
    if (bad.size() > 20) msg << " ... (" << bad.size() << " rows)";
    throw ConfigError(msg.str());
  }
  return obs;
}

void cmd_detect(const Run& run, const std::string& data_opt) {
  const auto& cfg = run.cfg;
  std::string data = data_opt.empty() ? cfg.detect.data : data_opt;
  if (data.empty()) throw ConfigError("detect.data: no observation file given");
  const auto obs = read_observations(data);
  const double lambda = cfg.detect.lambda != 0.0 ? cfg.detect.lambda : cfg.episode.lambda0;
  if (lambda == 0.0) throw ConfigError("detect.lambda: a non-zero shift is required");
  const double sigma = cfg.resource.sigma;
  const double dt = obs.t[1] - obs.t[0];
  const double signal = lambda / sigma;
  const double nu = solve_threshold(signal, cfg.detection.tolerance_T);
  const double threshold = cfg.detect.discrete_correction ? discrete_threshold(nu, signal, dt) : nu;

  Csv path("detect", 1, {"t", "X", "q", "residual", "u", "cs", "alarm"});
  CusumDetector det(signal, threshold);
  path.row() << obs.t[0] << obs.x[0] << obs.q[0] << "" << 0.0 << 0.0 << false;
  std::optional<double> alarm;
  for (std::size_t k = 1; k < obs.t.size(); ++k) {
    const double r =
        standardized_residual(obs.x[k], obs.x[k - 1], cfg.resource.mu, obs.q[k - 1], sigma, dt);
    const bool fired = det.update(r, dt);
    if (fired) alarm = obs.t[k];
    path.row() << obs.t[k] << obs.x[k] << obs.q[k] << r << det.u() << det.cs() << fired;
    if (det.alarmed()) break;
  }
  Csv summary("detect_summary", 1,
              {"lambda", "signal", "threshold", "continuous_threshold", "dt", "alarm_time",
               "expected_delay"});
  summary.row() << lambda << signal << threshold << nu << dt << alarm
                << expected_delay(signal, nu);
  path.write(run.dir, run.meta);
  summary.write(run.dir, run.meta);
  if (run.svg) rhcli::write_svg(run.dir / "detect.svg", "CUSUM statistic", path, "t", "cs", {});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-shift harvesting scenarios"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "scenario file")->required();
    sub->add_option("--seed", opt.seed, "overrides sim.seed");
    sub->add_option("--out", opt.out,
                    std::string("output directory (default: output.dir, then $") + kOutEnv +
                        ", then ./out)");
    sub->add_option("--format", opt.format, "csv, or svg for CSV plus plots")
        ->check(CLI::IsMember({"csv", "svg"}));
  };
  auto* sim = app.add_subcommand("simulate", "multi-period episodes");
  auto* surf = app.add_subcommand("policy-surface", "closed-form extraction policy grid");
  auto* cat = app.add_subcommand("catastrophe", "time-to-catastrophe law and classification");
  auto* det = app.add_subcommand("detect", "CUSUM over an observed stock series");
  for (auto* s : {sim, surf, cat, det}) add_common(s);
  det->add_option("--data", opt.data, "CSV with columns t, X and optionally q");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) cmd_simulate(prepare(opt, "simulate"));
    if (surf->parsed()) cmd_policy_surface(prepare(opt, "policy-surface"));
    if (cat->parsed()) cmd_catastrophe(prepare(opt, "catastrophe"));
    if (det->parsed()) cmd_detect(prepare(opt, "detect"), opt.data);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
