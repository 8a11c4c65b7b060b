#include "rh/sequential.hpp"

#include <cmath>

#include "rh/detection.hpp"
#include "rh/error.hpp"
#include "rh/hjb.hpp"

namespace rh {

double lambda_update(double x_start, double x_end, double coefficient) {
  if (!(x_start > 0.0)) {
    throw Error(Errc::start_stock_non_positive, "period start stock must be positive");
  }
  const double delta = (x_end - x_start) / x_start;
  if (delta < 0.0) return coefficient * delta;
  if (delta > 0.0) return coefficient * std::sqrt(delta);
  return 0.0;
}

double post_horizon_policy(const PolicySpec& spec, double tolerance_T, double t, double x) {
  if (!(t >= spec.horizon() && t <= tolerance_T)) {
    throw Error(Errc::out_of_domain, "post-horizon rule applies on [horizon, T]");
  }
  return extraction_at(spec, t, x, tolerance_T).q;
}

double horizon_jump(const PolicySpec& spec, double tolerance_T, double x) {
  const double r = spec.log_derivatives(x).r;
  const double s2 = spec.sigma() * spec.sigma();
  return s2 * r * (std::exp(-spec.rho() * (tolerance_T - spec.horizon())) - 1.0);
}

const char* to_string(OnIrreversible v) noexcept {
  return v == OnIrreversible::halt ? "halt" : "continue";
}

const char* to_string(PolicyChoice v) noexcept {
  switch (v) {
    case PolicyChoice::automatic: return "auto";
    case PolicyChoice::closed_form: return "closed_form";
    case PolicyChoice::numeric: return "numeric";
  }
  return "?";
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::extinct: return "extinct";
    case Termination::halted: return "halted";
    case Termination::error: return "error";
  }
  return "?";
}

PeriodPolicy make_period_policy(const MarketParams& market, const ResourceParams& resource,
                                double drift_offset, double horizon, double x_start,
                                const EpisodeConfig& cfg) {
  PeriodPolicy out{build_policy(market, resource, drift_offset, horizon), nullptr, false};
  const bool numeric = cfg.policy == PolicyChoice::numeric ||
                       (cfg.policy == PolicyChoice::automatic &&
                        !std::isinf(out.spec.operating_limit()));
  if (!numeric) {
    out.rule = std::make_shared<ClosedFormRule>(out.spec);
    return out;
  }
  const double mu_eff = out.spec.effective_drift();
  const double x_max = std::max(x_start, 0.0) + 8.0 * resource.sigma * std::sqrt(horizon) +
                       std::abs(mu_eff) * horizon + 10.0;
  const int nt = std::max(16, static_cast<int>(std::ceil(cfg.hjb_steps_per_unit * horizon)));
  auto sol = std::make_shared<const HjbSolution>(
      solve_hjb(market, resource, drift_offset, horizon, x_max, cfg.hjb_nx, nt));
  out.rule = std::make_shared<NumericRule>(std::move(sol));
  out.numeric = true;
  return out;
}

namespace {

std::size_t steps_for(double duration, double dt) {
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

}  // namespace

EpisodeResult run_episode(const MarketParams& market, const ResourceParams& resource,
                          const EpisodeConfig& cfg, std::uint64_t stream) {
  auto issues = validate(market, resource, cfg.detection);
  if (!issues.empty()) throw Error(Errc::invalid_params, to_string(issues.front()));
  if (cfg.n_periods < 1) throw Error(Errc::invalid_params, "n_periods must be at least 1");
  if (!(cfg.sim.dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");

  const double T = cfg.detection.tolerance_T;
  const double sigma = resource.sigma;
  const double dt = cfg.sim.dt;
  PathRng rng(cfg.sim.seed, stream);
  PathSimulator sim(resource.x0, 0.0, sigma, dt, cfg.sim.stepper);

  EpisodeResult res;
  double natural = resource.mu;
  double offset = 0.0;
  double lambda = cfg.lambda0;
  std::optional<PeriodPolicy> pending;

  try {
    for (int p = 0; p < cfg.n_periods; ++p) {
      PeriodRecord rec;
      rec.index = p;
      rec.start_time = sim.t();
      rec.natural_drift = natural;
      rec.lambda = lambda;
      rec.start_stock = sim.x();
      rec.horizon = expected_detection_horizon(lambda, cfg.detection);

      PeriodPolicy pol = pending
                             ? std::move(*pending)
                             : make_period_policy(market, resource, offset, rec.horizon,
                                                  rec.start_stock, cfg);
      pending.reset();
      rec.numeric_policy = pol.numeric;
      rec.psi_form = pol.spec.form();
      rec.operating_limit = pol.spec.operating_limit();

      rec.theta = rng.uniform() * T;
      std::optional<CusumDetector> detector;
      if (lambda != 0.0) {
        const double signal = lambda / sigma;
        rec.threshold = calibrated_threshold(signal, T, dt);
        detector.emplace(signal, rec.threshold);
      }

      const ShiftedExtraction post(*pol.rule, T - rec.horizon);
      const std::size_t planned = steps_for(rec.horizon, dt);
      const std::size_t limit = cfg.mode == SimMode::real_time ? steps_for(T, dt) : planned;
      bool shifted = false;
      for (std::size_t k = 0; k < limit; ++k) {
        const double t_rel = static_cast<double>(k) * dt;
        if (!shifted && t_rel >= rec.theta) {
          shifted = true;
          rec.shift_time = t_rel;
          sim.mark_regime(lambda);
        }
        const ExtractionRule& rule = k >= planned ? post : *pol.rule;
        const double x_old = sim.x();
        sim.advance(rule, t_rel, natural + (shifted ? lambda : 0.0), rng);
        if (sim.absorbed()) break;
        if (detector && !detector->alarmed()) {
          const double r =
              standardized_residual(sim.x(), x_old, natural, sim.last_extraction(), sigma, dt);
          if (detector->update(r, dt)) {
            rec.alarm = static_cast<double>(k + 1) * dt;
            if (cfg.mode == SimMode::real_time) break;
          }
        }
      }
      rec.duration = sim.t() - rec.start_time;
      rec.end_stock = sim.x();
      if (!shifted) {
        rec.shift_time = rec.duration;
        sim.mark_regime(lambda);
      }

      if (sim.absorbed()) {
        rec.catastrophe = catastrophe_report(natural + lambda, sigma, 0.0, 0.0, rec.horizon,
                                             nullptr, cfg.kfe);
        res.periods.push_back(rec);
        res.termination = Termination::extinct;
        break;
      }

      rec.next_lambda = lambda_update(rec.start_stock, rec.end_stock, natural);
      natural += lambda;
      offset += lambda;
      const double next_horizon = expected_detection_horizon(rec.next_lambda, cfg.detection);
      pending = make_period_policy(market, resource, offset, next_horizon, rec.end_stock, cfg);
      const double q_now = pending->rule->evaluate(0.0, rec.end_stock).q;
      rec.catastrophe = catastrophe_report(natural + rec.next_lambda, sigma, rec.end_stock, q_now,
                                           next_horizon, pending->rule.get(), cfg.kfe);
      lambda = rec.next_lambda;
      res.periods.push_back(rec);

      if (rec.catastrophe.classification == CatastropheClass::irreversible &&
          cfg.on_irreversible == OnIrreversible::halt) {
        res.termination = Termination::halted;
        break;
      }
    }
  } catch (const Error& e) {
    res.termination = Termination::error;
    res.error = e.what();
  }
  res.trajectory = sim.take();
  return res;
}

}  // namespace rh
