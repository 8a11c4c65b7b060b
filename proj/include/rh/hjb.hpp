#pragma once

#include <memory>
#include <vector>

#include "rh/extraction.hpp"
#include "rh/model.hpp"
#include "rh/policy.hpp"

namespace rh {

/// Value and policy surfaces of the period problem on a uniform grid.
/// Surfaces are stored row-major by time: index n * x_grid.size() + i.
struct HjbSolution {
  MarketParams market;
  ResourceParams resource;
  double drift_offset = 0.0;
  double horizon = 0.0;
  std::vector<double> x_grid;
  std::vector<double> t_grid;
  std::vector<double> V;
  std::vector<double> q;
  double pde_residual = 0.0;  // sup of the discrete-equation residual over all steps
  int max_sweeps = 0;         // most policy-iteration sweeps needed by any step

  std::size_t nx() const noexcept { return x_grid.size(); }
  std::size_t nt() const noexcept { return t_grid.size(); }
  double value(std::size_t n, std::size_t i) const { return V[n * nx() + i]; }
  double policy(std::size_t n, std::size_t i) const { return q[n * nx() + i]; }
};

/// Backward-in-time monotone finite-difference solve of
///   0 = V_t - rho V + max_q {profit(q) - q V_x} + (mu + offset) V_x + sigma^2/2 V_xx
/// on [0, x_max] x [0, horizon] with V(t, 0) = 0, V_x(t, x_max) = 0 and
/// V(horizon, .) = terminal (zero by default). The firm may also shut down,
/// so V >= 0. Each implicit step runs policy iteration with the maximisation
/// done in closed form per upwind branch.
/// `nx` and `nt` count intervals and must be at least 16.
/// Throws Errc::grid_too_coarse, Errc::non_convergence.
HjbSolution solve_hjb(const MarketParams& market, const ResourceParams& resource,
                      double drift_offset, double horizon, double x_max, int nx, int nt,
                      const std::vector<double>* terminal = nullptr);

struct PolicyGap {
  double sup_gap = 0.0;
  double l2_gap = 0.0;  // root mean square over compared points
  std::size_t n_points = 0;
  std::size_t n_excluded = 0;
};

/// Gap between two policies on the interior subgrid
/// x in [0.1 x_max, 0.9 x_max], t in [0, 0.9 horizon]. Points where either
/// policy is clamped at zero, or outside the closed form's operating range,
/// are excluded and counted. Throws Errc::parameter_mismatch.
PolicyGap compare_policies(const PolicySpec& closed, const HjbSolution& oracle);
PolicyGap compare_policies(const HjbSolution& lhs, const HjbSolution& rhs);

/// Bilinear interpolation of an HJB policy surface. Outside the grid the
/// nearest edge value is used.
class NumericRule final : public ExtractionRule {
 public:
  explicit NumericRule(std::shared_ptr<const HjbSolution> solution);
  ExtractionSample evaluate(double t, double x) const override;
  const HjbSolution& solution() const noexcept { return *sol_; }

 private:
  std::shared_ptr<const HjbSolution> sol_;
};

}  // namespace rh
