#pragma once

#include <limits>

#include "rh/extraction.hpp"
#include "rh/model.hpp"

namespace rh {

/// Shape of the linearisation function psi, following the roots of its
/// characteristic equation:
///   two_exponential  psi = c1 e^{a1 x} + c2 e^{a2 x}
///   repeated_root    psi = (c1 + c2 x) e^{a x}
///   oscillatory      psi = e^{k x} (c1 cos(w x) + c2 sin(w x))
enum class PsiForm { two_exponential, repeated_root, oscillatory };

const char* to_string(PsiForm form) noexcept;

/// psi'/psi and its first two derivatives in x.
struct LogDerivatives {
  double r = 0.0;
  double r_x = 0.0;
  double r_xx = 0.0;
};

/// Closed-form single-period extraction policy. The coefficients are pinned
/// by psi(0) = 1 and q*(horizon, 0) = 0, i.e. psi'(0) / psi(0) = qm / sigma^2.
class PolicySpec {
 public:
  PsiForm form() const noexcept { return form_; }
  const CharacteristicRoots& roots() const noexcept { return roots_; }
  const MarketParams& market() const noexcept { return market_; }
  const ResourceParams& resource() const noexcept { return resource_; }

  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }
  double horizon() const noexcept { return horizon_; }
  double drift_offset() const noexcept { return drift_offset_; }
  double effective_drift() const noexcept { return roots_.effective_drift; }
  double rho() const noexcept { return market_.rho; }
  double sigma() const noexcept { return resource_.sigma; }
  double qm() const noexcept { return roots_.qm; }

  /// First x > 0 where psi vanishes; +inf when psi stays positive. The policy
  /// is only defined on [0, operating_limit).
  double operating_limit() const noexcept { return limit_; }

  double psi(double x) const;
  double psi_prime(double x) const;
  LogDerivatives log_derivatives(double x) const;

  friend PolicySpec build_policy(const MarketParams&, const ResourceParams&, double, double);

 private:
  MarketParams market_;
  ResourceParams resource_;
  CharacteristicRoots roots_;
  PsiForm form_ = PsiForm::two_exponential;
  double c1_ = 1.0;
  double c2_ = 0.0;
  double horizon_ = 0.0;
  double drift_offset_ = 0.0;
  double limit_ = std::numeric_limits<double>::infinity();

  // psi^(k)(x) e^{-m x} for k = 0..3, where m is the leading exponent.
  void scaled(double x, double out[4]) const;
};

PolicySpec build_policy(const MarketParams& market, const ResourceParams& resource,
                        double drift_offset, double horizon);

/// q*(t, x) = [qm - sigma^2 psi'(x)/psi(x) e^{-rho (horizon - t)}]_+
double optimal_extraction(const PolicySpec& spec, double t, double x);

/// Same policy with the discount anchored at `anchor` instead of the horizon,
/// plus analytic derivatives. No domain check on t.
ExtractionSample extraction_at(const PolicySpec& spec, double t, double x, double anchor);

struct RentValue {
  double vx = 0.0;
};

/// Marginal in-situ value V_x = (qm - q*) (2b + c); equals a where q* = 0.
RentValue resource_rent(const PolicySpec& spec, double t, double x);

/// Expected drift of marginal revenue,
/// 2b q_x q* - 2b q_x mu - sigma^2 b q_xx + 2 rho b q^v, with mu the
/// effective drift of the period.
double expected_mr_drift(const PolicySpec& spec, double t, double x);

/// Adapts a PolicySpec to the ExtractionRule interface used by the
/// simulator, with the discount anchored at `anchor`.
class ClosedFormRule final : public ExtractionRule {
 public:
  explicit ClosedFormRule(PolicySpec spec) : spec_(std::move(spec)), anchor_(spec_.horizon()) {}
  ClosedFormRule(PolicySpec spec, double anchor) : spec_(std::move(spec)), anchor_(anchor) {}

  ExtractionSample evaluate(double t, double x) const override;
  const PolicySpec& spec() const noexcept { return spec_; }

 private:
  PolicySpec spec_;
  double anchor_;
};

}  // namespace rh
