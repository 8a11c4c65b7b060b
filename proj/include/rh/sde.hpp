#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "rh/extraction.hpp"

namespace rh {

/// A sampled stock path on a uniform time grid.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  std::vector<double> stock;
  std::vector<double> extraction;  // rate applied over [t_k, t_{k+1}); last entry repeats
  std::vector<std::pair<double, double>> regime_marks;  // (time, lambda) of applied shifts
  std::optional<double> absorbed_at;

  std::size_t size() const noexcept { return times.size(); }
};

enum class Stepper { euler, shoji_ozaki };
enum class SimMode { expected_horizon, real_time };

const char* to_string(Stepper s) noexcept;
const char* to_string(SimMode m) noexcept;

struct SimConfig {
  double dt = 1e-2;
  std::uint64_t seed = 1;
  int n_paths = 1;
  Stepper stepper = Stepper::shoji_ozaki;
};

/// Drift of the stock SDE at a point with its partial derivatives.
struct DriftEval {
  double value = 0.0;
  double d_dx = 0.0;
  double d_dt = 0.0;
  double d_xx = 0.0;
};

struct StepResult {
  double x = 0.0;
  bool absorbed = false;
};

/// x + drift dt + sigma sqrt(dt) z, absorbed at 0.
StepResult euler_step(double x, const DriftEval& drift, double sigma, double dt, double z);

/// Local-linearisation step: the drift is expanded to first order in x and t
/// around the current point (with the Ito curvature correction) and the
/// resulting linear SDE is advanced exactly. Falls back to the Taylor limit
/// when |d_dx| < 1e-12. Absorbed at 0.
StepResult shoji_ozaki_step(double x, const DriftEval& drift, double sigma, double dt, double z);

StepResult step(Stepper stepper, double x, const DriftEval& drift, double sigma, double dt,
                double z);

/// Independent, reproducible normal/uniform stream for one path. Streams
/// with the same (seed, stream) pair produce identical draws.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t stream);
  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Incremental simulator of dX = (natural drift [+ lambda after theta] - q) dt
/// + sigma dW under a feedback rule. Appends every step to a Trajectory.
class PathSimulator {
 public:
  PathSimulator(double x0, double t0, double sigma, double dt, Stepper stepper);

  /// Advances one step of length dt. `t_rel` is the rule's clock (time since
  /// the period start). Returns false once the path is absorbed.
  bool advance(const ExtractionRule& rule, double t_rel, double natural_drift, PathRng& rng);

  void mark_regime(double lambda) { path_.regime_marks.emplace_back(t_, lambda); }

  double x() const noexcept { return x_; }
  double t() const noexcept { return t_; }
  bool absorbed() const noexcept { return absorbed_; }
  double last_extraction() const noexcept { return last_q_; }
  const Trajectory& path() const noexcept { return path_; }
  Trajectory take() { return std::move(path_); }

 private:
  double x_;
  double t_;
  double sigma_;
  double dt_;
  Stepper stepper_;
  bool absorbed_ = false;
  double last_q_ = 0.0;
  Trajectory path_;
};

/// Simulates one period of length `duration` under `rule`. The drift moves
/// from natural_drift to natural_drift + post_change_lambda at theta (if
/// given). The number of steps is ceil(duration / dt).
Trajectory simulate_period(const ExtractionRule& rule, double natural_drift, double sigma,
                           double x0, double duration, std::optional<double> theta,
                           double post_change_lambda, const SimConfig& cfg, PathRng& rng);

/// How the change point of a Monte-Carlo scenario is drawn.
enum class ChangePoint { none, fixed, uniform };

struct McScenario {
  const ExtractionRule* rule = nullptr;  // null means q = 0
  double natural_drift = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;
  double horizon = 1.0;
  ChangePoint change = ChangePoint::none;
  double theta = 0.0;            // fixed change time, or upper end of the uniform prior
  double post_change_lambda = 0.0;
  bool absorbing = true;
  /// Optional CUSUM run on the standardized residuals of every path.
  std::optional<std::pair<double, double>> detector;  // (lambda, threshold)
  bool stop_at_alarm = false;    // end each path at its alarm (no per-time stats)
  int record_every = 1;          // per-time statistics every k steps
};

struct EnsembleSummary {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> absorbed_fraction;
  double absorption_frequency = 0.0;          // fraction absorbed by the horizon
  std::vector<std::optional<double>> hit_times;
  std::vector<std::optional<double>> alarm_times;
  std::vector<double> change_times;
  std::vector<double> terminal_stock;
};

/// Runs cfg.n_paths independent paths (stream i for path i) and reduces them
/// in a fixed order, so the summary depends only on (scenario, cfg).
EnsembleSummary monte_carlo(const McScenario& scenario, const SimConfig& cfg);

}  // namespace rh
