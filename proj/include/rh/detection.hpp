#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rh/model.hpp"

namespace rh {

struct Trajectory;

/// Unique positive root nu of (2 / lambda^2)(e^nu - nu - 1) = T, to 1e-10
/// absolute. Throws Errc::lambda_zero for lambda == 0.
double solve_threshold(double lambda, double tolerance_T);

/// Mean CUSUM detection delay (2 / lambda^2)(e^{-nu} + nu - 1).
double expected_delay(double lambda, double nu);

/// min(T, T/2 + expected delay); T when lambda == 0.
double expected_detection_horizon(double lambda, const DetectionConfig& config);

/// Threshold for a CUSUM that only sees the process every dt. Sampling
/// overshoots the continuous statistic at both the alarm boundary and the
/// running minimum, so the continuous threshold is lowered by
/// 2 * 0.5826 * |lambda| * sqrt(dt) (Siegmund's corrected approximation).
double discrete_threshold(double nu, double lambda, double dt);

/// solve_threshold followed by discrete_threshold.
double calibrated_threshold(double lambda, double tolerance_T, double dt);

/// (x_new - x_old - (drift - q) dt) / (sigma sqrt(dt)). Throws
/// Errc::non_positive_dt.
double standardized_residual(double x_new, double x_old, double drift, double q_applied,
                             double sigma, double dt);

/// Log-likelihood CUSUM on a unit-diffusion observation whose drift moves
/// from 0 to lambda at the change point.
class CusumDetector {
 public:
  CusumDetector(double lambda_target, double nu);

  /// Feeds one standardized residual observed over dt. Returns true on the
  /// step that raises the alarm. No-op once alarmed.
  bool update(double residual, double dt);

  double lambda_target() const noexcept { return lambda_; }
  double nu() const noexcept { return nu_; }
  double u() const noexcept { return u_; }
  double running_min() const noexcept { return running_min_; }
  double cs() const noexcept { return u_ - running_min_; }
  bool alarmed() const noexcept { return alarmed_; }
  double t() const noexcept { return t_; }
  std::optional<double> alarm_time() const noexcept {
    return alarmed_ ? std::optional<double>(t_) : std::nullopt;
  }

 private:
  double lambda_;
  double nu_;
  double u_ = 0.0;
  double running_min_ = 0.0;
  bool alarmed_ = false;
  double t_ = 0.0;
};

/// Runs the detector over a sampled trajectory, computing residuals against
/// the pre-change natural drift and the recorded extraction. Returns the
/// first alarm time relative to the first sample, or nullopt.
/// Throws Errc::insufficient_data for fewer than two samples.
std::optional<double> run_online(const Trajectory& path, double natural_drift, double sigma,
                                 double lambda, double nu);

/// Same statistic computed directly from stock levels: builds
/// Y_t = (X_t - X_0 - int (drift - q) ds) / sigma, sets
/// u_t = lambda Y_t - lambda^2 t / 2 and alarms on u_t - min u >= nu.
/// Returns the index of the alarming sample.
std::optional<std::size_t> detect_by_measure_change(std::span<const double> stock,
                                                    std::span<const double> extraction,
                                                    double natural_drift, double sigma,
                                                    double dt, double lambda, double nu);

}  // namespace rh
