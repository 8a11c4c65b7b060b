#pragma once

#include <vector>

namespace rh {

/// Linear inverse demand p(q) = a - b q, harvest cost c q^2 / 2, fixed cost F
/// per unit time and discount rate rho. Quantities are in thousand tonnes and
/// time in years throughout the library.
struct MarketParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double fixed_cost = 0.0;
  double rho = 0.0;

  /// 2b + c, the slope of marginal revenue net of marginal cost.
  double markup_slope() const noexcept { return 2.0 * b + c; }
  /// Monopoly quantity a / (2b + c).
  double monopoly_quantity() const noexcept { return a / markup_slope(); }
  /// Instantaneous profit (a - b q) q - c q^2 / 2 - F.
  double profit(double q) const noexcept {
    return (a - b * q) * q - 0.5 * c * q * q - fixed_cost;
  }

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

/// Natural growth rate, diffusion intensity and initial stock of the
/// resource SDE dX = (mu - q) dt + sigma dW.
struct ResourceParams {
  double mu = 0.0;
  double sigma = 0.0;
  double x0 = 0.0;

  friend bool operator==(const ResourceParams&, const ResourceParams&) = default;
};

/// Quickest-detection tolerance: the mean time to a false alarm when no
/// change ever happens. The change-point prior is uniform on [0, T].
struct DetectionConfig {
  double tolerance_T = 0.0;

  double expected_change_time() const noexcept { return 0.5 * tolerance_T; }
};

/// Constants of the linearised period HJB problem for a given effective drift.
struct DerivedConstants {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double qm = 0.0;
  double effective_drift = 0.0;
  double discriminant = 0.0;
};

enum class RootKind { distinct_real, repeated, complex_pair };

/// Roots of the characteristic equation sigma^4 y^2 + 2 A sigma^2 y + 4 B C = 0
/// of the linearised value-function ODE. Unlike derive_constants this never
/// fails on a negative discriminant; complex roots come back as
/// kappa +/- i omega.
struct CharacteristicRoots {
  RootKind kind = RootKind::distinct_real;
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double qm = 0.0;
  double effective_drift = 0.0;
  double discriminant = 0.0;
  double alpha1 = 0.0;  // larger real root (or the repeated root)
  double alpha2 = 0.0;
  double kappa = 0.0;   // real part when complex
  double omega = 0.0;   // imaginary part (> 0) when complex
};

enum class Issue {
  DemandInterceptNonPositive,
  DemandSlopeNonPositive,
  CostNegative,
  FixedCostNegative,
  DiscountNonPositive,
  SigmaNonPositive,
  InitialStockNegative,
  ToleranceNonPositive,
  NonFinite,
};

const char* to_string(Issue issue) noexcept;

/// Returns every violated invariant; an empty list means the inputs are valid.
std::vector<Issue> validate(const MarketParams& market, const ResourceParams& resource,
                            const DetectionConfig& detection);

/// Derived constants for effective drift mu + drift_offset.
/// Throws Errc::discriminant_negative when A^2 - 4BC < 0 and
/// Errc::invalid_params when the inputs violate their invariants.
DerivedConstants derive_constants(const MarketParams& market, const ResourceParams& resource,
                                  double drift_offset);

CharacteristicRoots characteristic_roots(const MarketParams& market,
                                         const ResourceParams& resource, double drift_offset);

/// Regime bookkeeping across detection periods. The cumulative drift is
/// always recomputed from the stored shifts so it equals mu + sum(lambdas)
/// exactly.
class RegimeState {
 public:
  RegimeState() = default;
  RegimeState(double mu, double start_stock) : mu_(mu), period_start_stock_(start_stock) {}

  int period_index() const noexcept { return static_cast<int>(horizons_.size()); }
  double mu() const noexcept { return mu_; }
  const std::vector<double>& lambdas() const noexcept { return lambdas_; }
  const std::vector<double>& horizons() const noexcept { return horizons_; }
  double period_start_stock() const noexcept { return period_start_stock_; }

  double drift_offset() const noexcept;
  double cumulative_drift() const noexcept { return mu_ + drift_offset(); }

  /// Closes the current period: records its duration, the shift that is now
  /// in force, and the stock the next period starts from.
  void advance(double applied_lambda, double horizon, double next_start_stock);

 private:
  double mu_ = 0.0;
  double period_start_stock_ = 0.0;
  std::vector<double> lambdas_;
  std::vector<double> horizons_;
};

}  // namespace rh
