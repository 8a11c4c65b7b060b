#include "rh/detection.hpp"

#include <algorithm>
#include <cmath>

#include "rh/error.hpp"
#include "rh/sde.hpp"

namespace rh {

namespace {

constexpr double kOvershoot = 0.5826;  // E[R^2] / (2 E[R]) for Gaussian ladder heights

void require_lambda(double lambda) {
  if (lambda == 0.0) throw Error(Errc::lambda_zero, "regimes are indistinguishable at lambda = 0");
  if (!std::isfinite(lambda)) throw Error(Errc::invalid_params, "lambda must be finite");
}

}  // namespace

double solve_threshold(double lambda, double tolerance_T) {
  require_lambda(lambda);
  if (!(tolerance_T > 0.0) || !std::isfinite(tolerance_T)) {
    throw Error(Errc::invalid_params, "tolerance T must be positive");
  }
  const double target = 0.5 * lambda * lambda * tolerance_T;
  // e^nu - nu - 1 is strictly increasing on nu > 0
  auto f = [target](double nu) { return std::expm1(nu) - nu - target; };

  double lo = 1e-12;
  double hi = 1.0;
  while (f(hi) < 0.0) hi *= 2.0;
  if (f(lo) >= 0.0) return lo;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double expected_delay(double lambda, double nu) {
  require_lambda(lambda);
  if (!(nu >= 0.0)) throw Error(Errc::invalid_params, "threshold must be nonnegative");
  // e^{-nu} + nu - 1 written to avoid cancellation near 0
  return 2.0 / (lambda * lambda) * (std::expm1(-nu) + nu);
}

double expected_detection_horizon(double lambda, const DetectionConfig& config) {
  const double T = config.tolerance_T;
  if (!(T > 0.0)) throw Error(Errc::invalid_params, "tolerance T must be positive");
  if (lambda == 0.0) return T;
  const double delay = expected_delay(lambda, solve_threshold(lambda, T));
  return std::min(T, config.expected_change_time() + delay);
}

double discrete_threshold(double nu, double lambda, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  const double corrected = nu - 2.0 * kOvershoot * std::abs(lambda) * std::sqrt(dt);
  return std::max(corrected, 1e-12);
}

double calibrated_threshold(double lambda, double tolerance_T, double dt) {
  return discrete_threshold(solve_threshold(lambda, tolerance_T), lambda, dt);
}

double standardized_residual(double x_new, double x_old, double drift, double q_applied,
                             double sigma, double dt) {
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  return (x_new - x_old - (drift - q_applied) * dt) / (sigma * std::sqrt(dt));
}

CusumDetector::CusumDetector(double lambda_target, double nu) : lambda_(lambda_target), nu_(nu) {
  if (!(nu >= 0.0)) throw Error(Errc::invalid_params, "threshold must be nonnegative");
}

bool CusumDetector::update(double residual, double dt) {
  if (alarmed_) return false;
  const double dy = residual * std::sqrt(dt);
  u_ += lambda_ * dy - 0.5 * lambda_ * lambda_ * dt;
  running_min_ = std::min(running_min_, u_);
  t_ += dt;
  if (u_ - running_min_ >= nu_) {
    alarmed_ = true;
    return true;
  }
  return false;
}

std::optional<double> run_online(const Trajectory& path, double natural_drift, double sigma,
                                 double lambda, double nu) {
  const auto n = path.stock.size();
  if (n < 2) throw Error(Errc::insufficient_data, "trajectory needs at least two samples");
  CusumDetector det(lambda, nu);
  for (std::size_t k = 1; k < n; ++k) {
    const double r = standardized_residual(path.stock[k], path.stock[k - 1], natural_drift,
                                           path.extraction[k - 1], sigma, path.dt);
    if (det.update(r, path.dt)) return path.times[k] - path.times[0];
  }
  return std::nullopt;
}

std::optional<std::size_t> detect_by_measure_change(std::span<const double> stock,
                                                    std::span<const double> extraction,
                                                    double natural_drift, double sigma,
                                                    double dt, double lambda, double nu) {
  if (stock.size() < 2 || extraction.size() < stock.size() - 1) {
    throw Error(Errc::insufficient_data, "need at least two stock samples");
  }
  if (!(dt > 0.0)) throw Error(Errc::non_positive_dt, "dt must be positive");
  double compensator = 0.0;
  double running_min = 0.0;
  for (std::size_t k = 1; k < stock.size(); ++k) {
    compensator += (natural_drift - extraction[k - 1]) * dt;
    const double y = (stock[k] - stock[0] - compensator) / sigma;
    const double t = static_cast<double>(k) * dt;
    const double u = lambda * y - 0.5 * lambda * lambda * t;
    running_min = std::min(running_min, u);
    if (u - running_min >= nu) return k;
  }
  return std::nullopt;
}

}  // namespace rh
