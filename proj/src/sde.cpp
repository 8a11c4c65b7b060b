#include "rh/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rh/detection.hpp"
#include "rh/error.hpp"

namespace rh {

const char* to_string(Stepper s) noexcept {
  return s == Stepper::euler ? "euler" : "shoji_ozaki";
}

const char* to_string(SimMode m) noexcept {
  return m == SimMode::expected_horizon ? "expected_horizon" : "real_time";
}

namespace {

// (e^z - 1) / z and (e^z - 1 - z) / z^2, continuous through z = 0.
double phi1(double z) {
  if (std::abs(z) < 1e-5) return 1.0 + z * (0.5 + z / 6.0);
  return std::expm1(z) / z;
}

double phi2(double z) {
  if (std::abs(z) < 1e-3) return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0));
  return (std::expm1(z) - z) / (z * z);
}

double euler_raw(double x, const DriftEval& f, double sigma, double dt, double z) {
  return x + f.value * dt + sigma * std::sqrt(dt) * z;
}

double shoji_ozaki_raw(double x, const DriftEval& f, double sigma, double dt, double z) {
  double L = f.d_dx;
  if (std::abs(L) < 1e-12) L = 0.0;
  const double M = 0.5 * sigma * sigma * f.d_xx;
  const double N = f.d_dt;
  const double Ld = L * dt;
  return x + f.value * dt * phi1(Ld) + (M + N) * dt * dt * phi2(Ld) +
         sigma * std::sqrt(dt * phi1(2.0 * Ld)) * z;
}

StepResult absorb(double x) {
  if (x <= 0.0) return {0.0, true};
  return {x, false};
}

}  // namespace

StepResult euler_step(double x, const DriftEval& drift, double sigma, double dt, double z) {
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  return absorb(euler_raw(x, drift, sigma, dt, z));
}

StepResult shoji_ozaki_step(double x, const DriftEval& drift, double sigma, double dt,
                            double z) {
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  return absorb(shoji_ozaki_raw(x, drift, sigma, dt, z));
}

StepResult step(Stepper stepper, double x, const DriftEval& drift, double sigma, double dt,
                double z) {
  return stepper == Stepper::euler ? euler_step(x, drift, sigma, dt, z)
                                   : shoji_ozaki_step(x, drift, sigma, dt, z);
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  engine_.seed(seq);
}

namespace {

DriftEval controlled_drift(const ExtractionSample& s, double natural_drift) {
  return {natural_drift - s.q, -s.q_x, -s.q_t, -s.q_xx};
}

}  // namespace

PathSimulator::PathSimulator(double x0, double t0, double sigma, double dt, Stepper stepper)
    : x_(x0), t_(t0), sigma_(sigma), dt_(dt), stepper_(stepper) {
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  if (!(x0 >= 0.0)) throw Error(Errc::invalid_params, "initial stock must be nonnegative");
  path_.dt = dt;
  path_.times.push_back(t0);
  path_.stock.push_back(x0);
  path_.extraction.push_back(0.0);
  if (x0 == 0.0) {
    absorbed_ = true;
    path_.absorbed_at = t0;
  }
}

bool PathSimulator::advance(const ExtractionRule& rule, double t_rel, double natural_drift,
                            PathRng& rng) {
  const double z = rng.normal();
  const double t_next = path_.times.front() + static_cast<double>(path_.times.size()) * dt_;
  if (absorbed_) {
    last_q_ = 0.0;
    t_ = t_next;
    path_.times.push_back(t_);
    path_.stock.push_back(0.0);
    path_.extraction.push_back(0.0);
    return false;
  }
  const auto s = rule.evaluate(t_rel, x_);
  last_q_ = s.q;
  const auto res = step(stepper_, x_, controlled_drift(s, natural_drift), sigma_, dt_, z);
  path_.extraction.back() = s.q;
  x_ = res.x;
  t_ = t_next;
  path_.times.push_back(t_);
  path_.stock.push_back(x_);
  path_.extraction.push_back(res.absorbed ? 0.0 : s.q);
  if (res.absorbed) {
    absorbed_ = true;
    path_.absorbed_at = t_;
  }
  return !absorbed_;
}

namespace {
std::size_t step_count(double duration, double dt) {
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}
}  // namespace

Trajectory simulate_period(const ExtractionRule& rule, double natural_drift, double sigma,
                           double x0, double duration, std::optional<double> theta,
                           double post_change_lambda, const SimConfig& cfg, PathRng& rng) {
  if (!(duration > 0.0)) throw Error(Errc::invalid_params, "duration must be positive");
  if (theta && !(*theta >= 0.0 && *theta <= duration)) {
    throw Error(Errc::invalid_params, "change time must lie in [0, duration]");
  }
  PathSimulator sim(x0, 0.0, sigma, cfg.dt, cfg.stepper);
  const std::size_t n = step_count(duration, cfg.dt);
  bool switched = false;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    if (theta && !switched && t >= *theta) {
      switched = true;
      sim.mark_regime(post_change_lambda);
    }
    sim.advance(rule, t, natural_drift + (switched ? post_change_lambda : 0.0), rng);
  }
  return sim.take();
}

namespace {

struct BlockStats {
  std::vector<double> sum;
  std::vector<double> sumsq;
  std::vector<double> absorbed;
};

struct PathOutcome {
  std::optional<double> hit;
  std::optional<double> alarm;
  double theta = std::numeric_limits<double>::infinity();
  double terminal = 0.0;
};

PathOutcome run_path(const McScenario& sc, const SimConfig& cfg, std::size_t index,
                     std::size_t n_steps, BlockStats* stats) {
  PathRng rng(cfg.seed, index);
  PathOutcome out;
  if (sc.change == ChangePoint::fixed) out.theta = sc.theta;
  if (sc.change == ChangePoint::uniform) out.theta = rng.uniform() * sc.theta;

  std::optional<CusumDetector> det;
  if (sc.detector) det.emplace(sc.detector->first, sc.detector->second);

  const ConstantExtraction zero(0.0);
  const ExtractionRule& rule = sc.rule ? *sc.rule : zero;
  const double dt = cfg.dt;
  double x = sc.x0;
  bool absorbed = sc.absorbing && x <= 0.0;
  if (absorbed) out.hit = 0.0;

  auto record = [&](std::size_t k) {
    if (!stats || k % static_cast<std::size_t>(sc.record_every) != 0) return;
    const std::size_t j = k / static_cast<std::size_t>(sc.record_every);
    stats->sum[j] += x;
    stats->sumsq[j] += x * x;
    stats->absorbed[j] += absorbed ? 1.0 : 0.0;
  };
  record(0);

  for (std::size_t k = 0; k < n_steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double z = rng.normal();
    if (!absorbed) {
      const double natural = sc.natural_drift + (t >= out.theta ? sc.post_change_lambda : 0.0);
      const auto s = rule.evaluate(t, std::max(x, 0.0));
      const auto f = controlled_drift(s, natural);
      const double x_old = x;
      if (sc.absorbing) {
        const auto res = step(cfg.stepper, x, f, sc.sigma, dt, z);
        x = res.x;
        if (res.absorbed) {
          absorbed = true;
          out.hit = static_cast<double>(k + 1) * dt;
        }
      } else {
        x = cfg.stepper == Stepper::euler ? euler_raw(x, f, sc.sigma, dt, z)
                                          : shoji_ozaki_raw(x, f, sc.sigma, dt, z);
      }
      if (det && !det->alarmed()) {
        const double r = standardized_residual(x, x_old, sc.natural_drift, s.q, sc.sigma, dt);
        if (det->update(r, dt)) {
          out.alarm = static_cast<double>(k + 1) * dt;
          if (sc.stop_at_alarm) break;
        }
      }
    }
    record(k + 1);
    if (absorbed && sc.stop_at_alarm) break;
  }
  out.terminal = x;
  return out;
}

}  // namespace

EnsembleSummary monte_carlo(const McScenario& sc, const SimConfig& cfg) {
  if (cfg.n_paths < 1) throw Error(Errc::invalid_params, "n_paths must be at least 1");
  if (!(cfg.dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  if (!(sc.horizon > 0.0) || sc.record_every < 1) {
    throw Error(Errc::invalid_params, "horizon must be positive and record_every >= 1");
  }
  const std::size_t n_paths = static_cast<std::size_t>(cfg.n_paths);
  const std::size_t n_steps = step_count(sc.horizon, cfg.dt);
  const bool with_stats = !sc.stop_at_alarm;
  const std::size_t n_rec = n_steps / static_cast<std::size_t>(sc.record_every) + 1;

  constexpr std::size_t kBlocks = 64;
  const std::size_t n_blocks = std::min(kBlocks, n_paths);
  std::vector<BlockStats> blocks(n_blocks);
  std::vector<PathOutcome> outcomes(n_paths);

  auto run_block = [&](std::size_t b) {
    BlockStats& bs = blocks[b];
    if (with_stats) {
      bs.sum.assign(n_rec, 0.0);
      bs.sumsq.assign(n_rec, 0.0);
      bs.absorbed.assign(n_rec, 0.0);
    }
    for (std::size_t i = b; i < n_paths; i += n_blocks) {
      outcomes[i] = run_path(sc, cfg, i, n_steps, with_stats ? &bs : nullptr);
    }
  };

  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n_blocks));
  if (n_threads == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < n_blocks; b += n_threads) run_block(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  EnsembleSummary out;
  if (with_stats) {
    out.times.resize(n_rec);
    out.mean.assign(n_rec, 0.0);
    out.variance.assign(n_rec, 0.0);
    out.absorbed_fraction.assign(n_rec, 0.0);
    const double n = static_cast<double>(n_paths);
    for (std::size_t j = 0; j < n_rec; ++j) {
      double s = 0.0, ss = 0.0, ab = 0.0;
      for (const auto& bs : blocks) {
        s += bs.sum[j];
        ss += bs.sumsq[j];
        ab += bs.absorbed[j];
      }
      out.times[j] = static_cast<double>(j * static_cast<std::size_t>(sc.record_every)) * cfg.dt;
      out.mean[j] = s / n;
      out.variance[j] = n > 1.0 ? std::max(0.0, (ss - s * s / n) / (n - 1.0)) : 0.0;
      out.absorbed_fraction[j] = ab / n;
    }
  }
  std::size_t absorbed = 0;
  for (const auto& o : outcomes) {
    out.hit_times.push_back(o.hit);
    out.alarm_times.push_back(o.alarm);
    out.change_times.push_back(o.theta);
    out.terminal_stock.push_back(o.terminal);
    if (o.hit) ++absorbed;
  }
  out.absorption_frequency = static_cast<double>(absorbed) / static_cast<double>(n_paths);
  return out;
}

}  // namespace rh
