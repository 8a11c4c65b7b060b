#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rh/catastrophe.hpp"
#include "rh/model.hpp"
#include "rh/policy.hpp"
#include "rh/sde.hpp"

namespace rh {

/// Shift announced for the next period from the stock change over the last
/// one: coefficient * delta for delta < 0, coefficient * sqrt(delta) for
/// delta > 0, 0 at delta = 0, with delta = (x_end - x_start) / x_start.
/// The coefficient is the natural drift that prevailed over the period.
/// Throws Errc::start_stock_non_positive.
double lambda_update(double x_start, double x_end, double coefficient);

/// Policy used between the expected horizon and T when no alarm has come:
/// the period's psi with the discount re-anchored at T. Throws
/// Errc::out_of_domain unless horizon <= t <= T and 0 <= x < operating limit.
double post_horizon_policy(const PolicySpec& spec, double tolerance_T, double t, double x);

/// Change of the unclamped rule at the horizon when the anchor moves to T,
/// sigma^2 psi'/psi(x) (e^{-rho (T - horizon)} - 1); pre minus post.
double horizon_jump(const PolicySpec& spec, double tolerance_T, double x);

enum class OnIrreversible { continue_run, halt };
const char* to_string(OnIrreversible v) noexcept;

/// Which rule drives a period. `automatic` uses the closed form when its
/// psi stays positive on the whole half line and the finite-difference
/// policy otherwise.
enum class PolicyChoice { automatic, closed_form, numeric };
const char* to_string(PolicyChoice v) noexcept;

struct EpisodeConfig {
  int n_periods = 4;
  double lambda0 = 0.0;
  SimMode mode = SimMode::expected_horizon;
  OnIrreversible on_irreversible = OnIrreversible::continue_run;
  DetectionConfig detection{50.0};
  SimConfig sim;
  PolicyChoice policy = PolicyChoice::automatic;
  int hjb_nx = 200;
  int hjb_steps_per_unit = 20;  // time steps per unit of horizon
  KfeGrid kfe{200, 800};
};

enum class Termination { completed, extinct, halted, error };
const char* to_string(Termination t) noexcept;

struct PeriodRecord {
  int index = 0;
  double start_time = 0.0;         // absolute
  double natural_drift = 0.0;      // drift before this period's shift
  double lambda = 0.0;             // shift this period's detector targets
  double horizon = 0.0;            // expected detection horizon
  double duration = 0.0;           // realised length
  double theta = 0.0;              // drawn change time, from the period start
  double shift_time = 0.0;         // when the shift took effect, from the period start
  std::optional<double> alarm;     // CUSUM alarm, from the period start
  double threshold = 0.0;
  double start_stock = 0.0;
  double end_stock = 0.0;
  bool numeric_policy = false;
  PsiForm psi_form = PsiForm::two_exponential;
  double operating_limit = 0.0;
  double next_lambda = 0.0;
  CatastropheReport catastrophe;
};

struct EpisodeResult {
  std::vector<PeriodRecord> periods;
  Trajectory trajectory;
  Termination termination = Termination::completed;
  std::string error;
};

/// Runs up to cfg.n_periods detection periods from resource.x0. Each path
/// uses the draw stream `stream` of cfg.sim.seed. Module errors end the run
/// with Termination::error and the message recorded.
EpisodeResult run_episode(const MarketParams& market, const ResourceParams& resource,
                          const EpisodeConfig& cfg, std::uint64_t stream = 0);

/// The rule a period runs under, with its planning horizon.
struct PeriodPolicy {
  PolicySpec spec;
  std::shared_ptr<const ExtractionRule> rule;
  bool numeric = false;
};
PeriodPolicy make_period_policy(const MarketParams& market, const ResourceParams& resource,
                                double drift_offset, double horizon, double x_start,
                                const EpisodeConfig& cfg);

}  // namespace rh
