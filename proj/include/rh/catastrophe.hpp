#pragma once

#include <optional>
#include <vector>

#include "rh/extraction.hpp"
#include "rh/policy.hpp"

namespace rh {

/// True iff the controlled drift natural_drift - q is strictly negative.
bool at_risk(double natural_drift, double q) noexcept;
/// Instantaneous test at (t, x) under the period policy.
bool at_risk(const PolicySpec& spec, double t, double x);
/// Time-accumulated form of the test:
///   mu_eff - qm + sigma^2 psi'/psi(x) int_t^h e^{-rho (h - s)} ds.
/// Diagnostic only.
double accumulated_drift(const PolicySpec& spec, double t, double x);

/// x0 / |net_drift|. Throws Errc::non_negative_drift for net_drift >= 0 and
/// Errc::invalid_params for x0 < 0.
double expected_time_to_catastrophe(double x0, double net_drift);

/// Probability that a drifted Brownian motion started at x0 ever reaches 0:
/// 1 for drift <= 0, exp(-2 drift x0 / sigma^2) otherwise.
double extinction_probability(double x0, double net_drift, double sigma);

/// Inverse Gaussian law with the given mean and shape.
class InverseGaussian {
 public:
  InverseGaussian(double mean, double shape);
  double mean() const noexcept { return mean_; }
  double shape() const noexcept { return shape_; }
  double density(double t) const;
  /// Closed form with the exp(2 shape / mean) factor folded into the log of
  /// the normal tail, so it stays finite for large shape.
  double cdf(double t) const;
  double mode() const;

 private:
  double mean_;
  double shape_;
};

/// First-passage law of x0 + d t + sigma W to 0 for d < 0:
/// IG(x0 / |d|, (x0 / sigma)^2). Throws Errc::non_negative_drift.
InverseGaussian ig_first_passage(double x0, double net_drift, double sigma);

enum class KfeScheme { implicit, explicit_euler };

/// Hitting probability of 0 before `horizon`, phi(x, t), for the stock
/// controlled by a feedback rule, and the first-passage law from x0.
/// Surfaces are row-major by time: index n * x_grid.size() + i.
struct KfeSolution {
  std::vector<double> x_grid;
  std::vector<double> t_grid;
  std::vector<double> phi;
  double x0 = 0.0;
  std::vector<double> cdf;                    // P(tau <= t) from x0
  std::vector<double> first_passage_density;  // d cdf / dt on t_grid
  double hit_probability = 0.0;               // cdf at the horizon, equals phi(x0, 0)
  double numeric_mean_hit_time = 0.0;         // int_0^h (1 - cdf), i.e. E[min(tau, h)]

  std::size_t nx() const noexcept { return x_grid.size(); }
  std::size_t nt() const noexcept { return t_grid.size(); }
  double at(std::size_t n, std::size_t i) const { return phi[n * nx() + i]; }
  /// phi(x, t_n) by linear interpolation in x.
  double phi_at(std::size_t n, double x) const;
};

/// Solves phi_t + (natural_drift - q(t, x)) phi_x + sigma^2/2 phi_xx = 0
/// backward from phi(., horizon) = 1{x <= 0}, with phi(0, t) = 1 and
/// phi(x_max, t) = 0. The first-order term uses central differences where
/// that keeps the scheme monotone and upwinding elsewhere. The first-passage
/// cdf from x0 comes from the adjoint (forward) sweep over the same matrices,
/// so cdf(horizon) reproduces phi(x0, 0) to rounding.
/// `rule` may be null for q = 0. `nx`, `nt` count intervals (>= 16).
/// Throws Errc::grid_too_coarse (explicit scheme past its stability limit),
/// Errc::invalid_params.
KfeSolution solve_kfe(const ExtractionRule* rule, double natural_drift, double sigma, double x0,
                      double horizon, double x_max, int nx, int nt,
                      KfeScheme scheme = KfeScheme::implicit);

/// x_max >= x0 + 6 sigma sqrt(horizon) + |drift| horizon, the truncation
/// used by default.
double default_kfe_x_max(double x0, double natural_drift, double sigma, double horizon);

enum class CatastropheClass { none, reversible, irreversible };
const char* to_string(CatastropheClass c) noexcept;

struct KfeGrid {
  int nx = 400;
  int nt = 2000;
};

struct Classification {
  CatastropheClass cls = CatastropheClass::none;
  std::optional<double> expected_hit_time;  // no-extraction bound, when drift < 0
  std::optional<KfeSolution> kfe;           // attached for the reversible case
};

/// none if natural_drift >= 0; irreversible if x0 / |natural_drift| <=
/// next_horizon; otherwise reversible, with the hitting law under `rule`
/// over the next horizon attached.
Classification classify(double natural_drift, double sigma, double x0, double next_horizon,
                        const ExtractionRule* rule, const KfeGrid& grid = {});

struct CatastropheReport {
  double net_drift = 0.0;  // natural drift minus the extraction in force
  bool at_risk = false;
  std::optional<double> expected_hit_time;
  double hit_probability = 0.0;
  std::optional<double> ig_mean;
  std::optional<double> ig_shape;
  CatastropheClass classification = CatastropheClass::none;
  std::optional<double> kfe_mean_hit_time;
};

/// Assembles the report at stock x with extraction q in force. The hit
/// probability is the KFE one when a solve was needed, otherwise the
/// infinite-horizon no-extraction value.
CatastropheReport catastrophe_report(double natural_drift, double sigma, double x, double q,
                                     double next_horizon, const ExtractionRule* rule,
                                     const KfeGrid& grid = {});

}  // namespace rh
