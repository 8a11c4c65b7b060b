#include "rh/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "rh/error.hpp"

namespace rh {

const char* to_string(Issue issue) noexcept {
  switch (issue) {
    case Issue::DemandInterceptNonPositive: return "DemandInterceptNonPositive";
    case Issue::DemandSlopeNonPositive: return "DemandSlopeNonPositive";
    case Issue::CostNegative: return "CostNegative";
    case Issue::FixedCostNegative: return "FixedCostNegative";
    case Issue::DiscountNonPositive: return "DiscountNonPositive";
    case Issue::SigmaNonPositive: return "SigmaNonPositive";
    case Issue::InitialStockNegative: return "InitialStockNegative";
    case Issue::ToleranceNonPositive: return "ToleranceNonPositive";
    case Issue::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

namespace {

std::vector<Issue> market_resource_issues(const MarketParams& m, const ResourceParams& r) {
  std::vector<Issue> out;
  const double all[] = {m.a, m.b, m.c, m.fixed_cost, m.rho, r.mu, r.sigma, r.x0};
  if (std::any_of(std::begin(all), std::end(all), [](double v) { return !std::isfinite(v); })) {
    out.push_back(Issue::NonFinite);
  }
  if (!(m.a > 0.0)) out.push_back(Issue::DemandInterceptNonPositive);
  if (!(m.b > 0.0)) out.push_back(Issue::DemandSlopeNonPositive);
  if (!(m.c >= 0.0)) out.push_back(Issue::CostNegative);
  if (!(m.fixed_cost >= 0.0)) out.push_back(Issue::FixedCostNegative);
  if (!(m.rho > 0.0)) out.push_back(Issue::DiscountNonPositive);
  if (!(r.sigma > 0.0)) out.push_back(Issue::SigmaNonPositive);
  if (!(r.x0 >= 0.0)) out.push_back(Issue::InitialStockNegative);
  return out;
}

void require_valid(const MarketParams& m, const ResourceParams& r, double drift_offset) {
  auto issues = market_resource_issues(m, r);
  if (!std::isfinite(r.mu + drift_offset) &&
      std::find(issues.begin(), issues.end(), Issue::NonFinite) == issues.end()) {
    issues.push_back(Issue::NonFinite);
  }
  if (issues.empty()) return;
  std::ostringstream msg;
  for (std::size_t i = 0; i < issues.size(); ++i) msg << (i ? ", " : "") << to_string(issues[i]);
  throw Error(Errc::invalid_params, msg.str());
}

}  // namespace

std::vector<Issue> validate(const MarketParams& market, const ResourceParams& resource,
                            const DetectionConfig& detection) {
  auto out = market_resource_issues(market, resource);
  if (!std::isfinite(detection.tolerance_T)) {
    if (std::find(out.begin(), out.end(), Issue::NonFinite) == out.end()) {
      out.push_back(Issue::NonFinite);
    }
  } else if (!(detection.tolerance_T > 0.0)) {
    out.push_back(Issue::ToleranceNonPositive);
  }
  return out;
}

CharacteristicRoots characteristic_roots(const MarketParams& market,
                                         const ResourceParams& resource, double drift_offset) {
  require_valid(market, resource, drift_offset);

  CharacteristicRoots r;
  const double slope = market.markup_slope();
  r.qm = market.a / slope;
  r.effective_drift = resource.mu + drift_offset;
  r.A = r.effective_drift - r.qm;
  r.B = 1.0 / (2.0 * slope);
  r.C = market.a * market.a / (2.0 * slope) - market.fixed_cost;
  const double four_bc = 4.0 * r.B * r.C;
  r.discriminant = r.A * r.A - four_bc;

  const double s2 = resource.sigma * resource.sigma;
  const double scale = std::max({r.A * r.A, std::abs(four_bc), 1e-300});

  if (std::abs(r.discriminant) <= 1e-12 * scale) {
    r.kind = RootKind::repeated;
    r.alpha1 = r.alpha2 = -r.A / s2;
  } else if (r.discriminant > 0.0) {
    r.kind = RootKind::distinct_real;
    // Roots of y^2 + 2 A y + 4 B C = 0 with y = sigma^2 alpha, taken in the
    // cancellation-free order.
    const double s = -(r.A + std::copysign(std::sqrt(r.discriminant), r.A));
    const double y_big = s;
    const double y_small = (s != 0.0) ? four_bc / s : 0.0;
    r.alpha1 = std::max(y_big, y_small) / s2;
    r.alpha2 = std::min(y_big, y_small) / s2;
  } else {
    r.kind = RootKind::complex_pair;
    r.kappa = -r.A / s2;
    r.omega = std::sqrt(-r.discriminant) / s2;
  }
  return r;
}

DerivedConstants derive_constants(const MarketParams& market, const ResourceParams& resource,
                                  double drift_offset) {
  const auto roots = characteristic_roots(market, resource, drift_offset);
  if (roots.kind == RootKind::complex_pair) {
    std::ostringstream msg;
    msg << "A^2 - 4BC = " << roots.discriminant << " < 0 at effective drift "
        << roots.effective_drift;
    throw Error(Errc::discriminant_negative, msg.str());
  }
  DerivedConstants d;
  d.A = roots.A;
  d.B = roots.B;
  d.C = roots.C;
  d.alpha1 = roots.alpha1;
  d.alpha2 = roots.alpha2;
  d.qm = roots.qm;
  d.effective_drift = roots.effective_drift;
  d.discriminant = roots.discriminant;
  return d;
}

double RegimeState::drift_offset() const noexcept {
  return std::accumulate(lambdas_.begin(), lambdas_.end(), 0.0);
}

void RegimeState::advance(double applied_lambda, double horizon, double next_start_stock) {
  if (!(horizon > 0.0) || !std::isfinite(applied_lambda)) {
    throw Error(Errc::invalid_params, "period horizon must be positive and lambda finite");
  }
  lambdas_.push_back(applied_lambda);
  horizons_.push_back(horizon);
  period_start_stock_ = next_start_stock;
}

}  // namespace rh
