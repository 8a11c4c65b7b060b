#include "rh/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "rh/error.hpp"

namespace rh {

const char* to_string(PsiForm form) noexcept {
  switch (form) {
    case PsiForm::two_exponential: return "two_exponential";
    case PsiForm::repeated_root: return "repeated_root";
    case PsiForm::oscillatory: return "oscillatory";
  }
  return "unknown";
}

PolicySpec build_policy(const MarketParams& market, const ResourceParams& resource,
                        double drift_offset, double horizon) {
  if (!(horizon > 0.0) || std::isnan(horizon)) {
    throw Error(Errc::invalid_params, "policy horizon must be positive");
  }
  PolicySpec spec;
  spec.market_ = market;
  spec.resource_ = resource;
  spec.roots_ = characteristic_roots(market, resource, drift_offset);
  spec.horizon_ = horizon;
  spec.drift_offset_ = drift_offset;

  const auto& r = spec.roots_;
  const double slope0 = r.qm / (resource.sigma * resource.sigma);  // psi'(0)/psi(0)
  constexpr double inf = std::numeric_limits<double>::infinity();

  switch (r.kind) {
    case RootKind::distinct_real: {
      spec.form_ = PsiForm::two_exponential;
      spec.c1_ = (slope0 - r.alpha2) / (r.alpha1 - r.alpha2);
      spec.c2_ = 1.0 - spec.c1_;
      spec.limit_ = inf;
      if (spec.c1_ < 0.0) {
        // c1 e^{a1 x} overtakes c2 e^{a2 x} at a finite stock level.
        spec.limit_ = std::log(-spec.c2_ / spec.c1_) / (r.alpha1 - r.alpha2);
      }
      break;
    }
    case RootKind::repeated: {
      spec.form_ = PsiForm::repeated_root;
      spec.c1_ = 1.0;
      spec.c2_ = slope0 - r.alpha1;
      spec.limit_ = spec.c2_ < 0.0 ? -1.0 / spec.c2_ : inf;
      break;
    }
    case RootKind::complex_pair: {
      spec.form_ = PsiForm::oscillatory;
      spec.c1_ = 1.0;
      spec.c2_ = (slope0 - r.kappa) / r.omega;
      // cos(w x) + c2 sin(w x) = R cos(w x - atan c2) first vanishes here.
      spec.limit_ = (0.5 * std::numbers::pi + std::atan(spec.c2_)) / r.omega;
      break;
    }
  }
  return spec;
}

void PolicySpec::scaled(double x, double out[4]) const {
  switch (form_) {
    case PsiForm::two_exponential: {
      const double a1 = roots_.alpha1;
      const double a2 = roots_.alpha2;
      const double e = std::exp((a2 - a1) * x);
      out[0] = c1_ + c2_ * e;
      out[1] = c1_ * a1 + c2_ * a2 * e;
      out[2] = c1_ * a1 * a1 + c2_ * a2 * a2 * e;
      out[3] = c1_ * a1 * a1 * a1 + c2_ * a2 * a2 * a2 * e;
      return;
    }
    case PsiForm::repeated_root: {
      const double a = roots_.alpha1;
      const double p = c1_ + c2_ * x;
      out[0] = p;
      out[1] = a * p + c2_;
      out[2] = a * a * p + 2.0 * a * c2_;
      out[3] = a * a * a * p + 3.0 * a * a * c2_;
      return;
    }
    case PsiForm::oscillatory: {
      const double k = roots_.kappa;
      const double w = roots_.omega;
      const double cs = std::cos(w * x);
      const double sn = std::sin(w * x);
      const double g = c1_ * cs + c2_ * sn;
      const double g1 = w * (c2_ * cs - c1_ * sn);
      const double g2 = -w * w * g;
      const double g3 = -w * w * g1;
      out[0] = g;
      out[1] = k * g + g1;
      out[2] = k * k * g + 2.0 * k * g1 + g2;
      out[3] = k * k * k * g + 3.0 * k * k * g1 + 3.0 * k * g2 + g3;
      return;
    }
  }
}

namespace {
double leading_exponent(const PolicySpec& s) {
  return s.form() == PsiForm::oscillatory ? s.roots().kappa : s.roots().alpha1;
}
}  // namespace

double PolicySpec::psi(double x) const {
  double s[4];
  scaled(x, s);
  return std::exp(leading_exponent(*this) * x) * s[0];
}

double PolicySpec::psi_prime(double x) const {
  double s[4];
  scaled(x, s);
  return std::exp(leading_exponent(*this) * x) * s[1];
}

LogDerivatives PolicySpec::log_derivatives(double x) const {
  double s[4];
  scaled(x, s);
  LogDerivatives d;
  const double p2 = s[2] / s[0];
  d.r = s[1] / s[0];
  d.r_x = p2 - d.r * d.r;
  d.r_xx = s[3] / s[0] - p2 * d.r - 2.0 * d.r * d.r_x;
  return d;
}

namespace {

void check_stock(const PolicySpec& spec, double x) {
  if (!(x >= 0.0) || !(x < spec.operating_limit())) {
    std::ostringstream msg;
    msg << "stock " << x << " outside [0, " << spec.operating_limit() << ")";
    throw Error(Errc::out_of_domain, msg.str());
  }
}

void check_time(const PolicySpec& spec, double t) {
  const double h = spec.horizon();
  if (!(t >= 0.0) || t > h * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "time " << t << " outside [0, " << h << "]";
    throw Error(Errc::out_of_domain, msg.str());
  }
}

}  // namespace

ExtractionSample extraction_at(const PolicySpec& spec, double t, double x, double anchor) {
  check_stock(spec, x);
  const double s2 = spec.sigma() * spec.sigma();
  const double discount = std::exp(-spec.rho() * (anchor - t));
  const auto d = spec.log_derivatives(x);
  // At x = 0 the pinning condition gives sigma^2 psi'/psi = qm exactly.
  const double qv = (x == 0.0 ? spec.qm() : s2 * d.r) * discount;
  ExtractionSample out;
  out.q = spec.qm() - qv;
  if (out.q <= 0.0) {
    out.q = 0.0;
    return out;
  }
  out.q_x = -s2 * d.r_x * discount;
  out.q_xx = -s2 * d.r_xx * discount;
  out.q_t = -spec.rho() * qv;
  return out;
}

double optimal_extraction(const PolicySpec& spec, double t, double x) {
  check_time(spec, t);
  return extraction_at(spec, t, x, spec.horizon()).q;
}

RentValue resource_rent(const PolicySpec& spec, double t, double x) {
  const double q = optimal_extraction(spec, t, x);
  if (q == 0.0) return {spec.market().a};
  return {(spec.qm() - q) * spec.market().markup_slope()};
}

double expected_mr_drift(const PolicySpec& spec, double t, double x) {
  check_time(spec, t);
  const auto s = extraction_at(spec, t, x, spec.horizon());
  const double b = spec.market().b;
  const double s2 = spec.sigma() * spec.sigma();
  const double qv = s2 * spec.log_derivatives(x).r * std::exp(-spec.rho() * (spec.horizon() - t));
  const double mu = spec.effective_drift();
  return 2.0 * b * s.q_x * s.q - 2.0 * b * s.q_x * mu - s2 * b * s.q_xx + 2.0 * spec.rho() * b * qv;
}

ExtractionSample ClosedFormRule::evaluate(double t, double x) const {
  return extraction_at(spec_, t, std::max(x, 0.0), anchor_);
}

}  // namespace rh
