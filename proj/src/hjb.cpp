#include "rh/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "rh/error.hpp"
#include "tridiagonal.hpp"

namespace rh {

namespace {

struct Control {
  double q = 0.0;
  bool stop = false;
};

// Maximiser of profit(q) + (mu - q) V_x where V_x is the forward difference
// for q < mu and the backward difference for q >= mu.
Control best_control(const MarketParams& m, double mu, double vf, double vb) {
  const double s = m.markup_slope();
  double best_q = std::max((m.a - vb) / s, std::max(mu, 0.0));
  double best_h = m.profit(best_q) + (mu - best_q) * vb;
  if (mu > 0.0) {
    const double qf = std::clamp((m.a - vf) / s, 0.0, mu);
    const double hf = m.profit(qf) + (mu - qf) * vf;
    if (hf >= best_h) best_q = qf;
  }
  return {best_q, false};
}

struct Row {
  double lo = 0.0;
  double di = 0.0;
  double up = 0.0;
  double rhs = 0.0;
};

class StepAssembler {
 public:
  StepAssembler(const MarketParams& m, double mu, double sigma, double h, double dt)
      : m_(m), mu_(mu), diff_(0.5 * sigma * sigma / (h * h)), h_(h), inv_dt_(1.0 / dt) {}

  // Continuation row at node i (1 <= i <= N) for control q; ghost node
  // V[N+1] = V[N] at the far boundary.
  Row continuation(std::size_t i, std::size_t N, double q, double v_next) const {
    const double d = mu_ - q;
    const double dp = std::max(d, 0.0) / h_;
    const double dm = std::max(-d, 0.0) / h_;
    Row r;
    if (i < N) {
      r.lo = -(dm + diff_);
      r.up = -(dp + diff_);
      r.di = inv_dt_ + m_.rho + dp + dm + 2.0 * diff_;
    } else {
      r.lo = -(dm + diff_);
      r.di = inv_dt_ + m_.rho + dm + diff_;
    }
    r.rhs = v_next * inv_dt_ + m_.profit(q);
    return r;
  }

  Control choose(const std::vector<double>& V, std::size_t i, std::size_t N) const {
    const double vf = i < N ? (V[i + 1] - V[i]) / h_ : 0.0;
    const double vb = (V[i] - V[i - 1]) / h_;
    return best_control(m_, mu_, vf, vb);
  }

  static double residual(const Row& r, const std::vector<double>& V, std::size_t i,
                         std::size_t N) {
    double lhs = r.di * V[i] + r.lo * V[i - 1];
    if (i < N) lhs += r.up * V[i + 1];
    return lhs - r.rhs;
  }

 private:
  const MarketParams& m_;
  double mu_;
  double diff_;
  double h_;
  double inv_dt_;
};

}  // namespace

HjbSolution solve_hjb(const MarketParams& market, const ResourceParams& resource,
                      double drift_offset, double horizon, double x_max, int nx, int nt,
                      const std::vector<double>* terminal) {
  if (nx < 16 || nt < 16) throw Error(Errc::grid_too_coarse, "nx and nt must be at least 16");
  if (!(horizon > 0.0) || !(x_max > 0.0)) {
    throw Error(Errc::invalid_params, "horizon and x_max must be positive");
  }
  auto issues = validate(market, resource, DetectionConfig{1.0});
  if (!issues.empty()) throw Error(Errc::invalid_params, to_string(issues.front()));

  const std::size_t N = static_cast<std::size_t>(nx);
  const std::size_t M = static_cast<std::size_t>(nt);
  const double h = x_max / static_cast<double>(N);
  const double dt = horizon / static_cast<double>(M);
  const double mu = resource.mu + drift_offset;

  HjbSolution sol;
  sol.market = market;
  sol.resource = resource;
  sol.drift_offset = drift_offset;
  sol.horizon = horizon;
  sol.x_grid.resize(N + 1);
  sol.t_grid.resize(M + 1);
  for (std::size_t i = 0; i <= N; ++i) sol.x_grid[i] = h * static_cast<double>(i);
  for (std::size_t n = 0; n <= M; ++n) sol.t_grid[n] = dt * static_cast<double>(n);
  sol.V.assign((M + 1) * (N + 1), 0.0);
  sol.q.assign((M + 1) * (N + 1), 0.0);

  std::vector<double> V(N + 1, 0.0);
  if (terminal) {
    if (terminal->size() != N + 1) {
      throw Error(Errc::invalid_params, "terminal profile must have nx + 1 values");
    }
    V = *terminal;
    V[0] = 0.0;
  }

  const StepAssembler asm_(market, mu, resource.sigma, h, dt);
  auto store = [&](std::size_t n, const std::vector<double>& v, const std::vector<Control>& c) {
    std::copy(v.begin(), v.end(), sol.V.begin() + static_cast<std::ptrdiff_t>(n * (N + 1)));
    for (std::size_t i = 1; i <= N; ++i) sol.q[n * (N + 1) + i] = c[i].stop ? 0.0 : c[i].q;
  };

  std::vector<Control> ctrl(N + 1);
  for (std::size_t i = 1; i <= N; ++i) ctrl[i] = asm_.choose(V, i, N);
  store(M, V, ctrl);

  std::vector<double> lo(N + 1), di(N + 1), up(N + 1), rhs(N + 1), next, work;
  std::vector<double> v_next = V;

  for (std::size_t n = M; n-- > 0;) {
    v_next = V;
    int sweep = 0;
    for (;; ++sweep) {
      if (sweep >= 200) {
        std::ostringstream msg;
        msg << "policy iteration did not settle at t = " << sol.t_grid[n];
        throw Error(Errc::non_convergence, msg.str());
      }
      bool changed = false;
      lo[0] = 0.0;
      di[0] = 1.0;
      up[0] = 0.0;
      rhs[0] = 0.0;
      for (std::size_t i = 1; i <= N; ++i) {
        Control c = asm_.choose(V, i, N);
        const Row row = asm_.continuation(i, N, c.q, v_next[i]);
        if (sweep > 0 && V[i] < StepAssembler::residual(row, V, i, N)) c.stop = true;
        if (row.lo > 0.0 || row.up > 0.0 || row.di <= 0.0) {
          throw Error(Errc::grid_too_coarse, "scheme lost monotonicity");
        }
        if (c.stop) {
          lo[i] = 0.0;
          di[i] = 1.0;
          up[i] = 0.0;
          rhs[i] = 0.0;
        } else {
          lo[i] = row.lo;
          di[i] = row.di;
          up[i] = i < N ? row.up : 0.0;
          rhs[i] = row.rhs;
        }
        if (c.q != ctrl[i].q || c.stop != ctrl[i].stop) changed = true;
        ctrl[i] = c;
      }
      detail::solve_tridiagonal(lo, di, up, rhs, next, work);
      double delta = 0.0, scale = 1.0;
      for (std::size_t i = 0; i <= N; ++i) {
        delta = std::max(delta, std::abs(next[i] - V[i]));
        scale = std::max(scale, std::abs(next[i]));
      }
      V.swap(next);
      if (sweep > 0 && (!changed || delta <= 1e-13 * scale)) break;
    }
    sol.max_sweeps = std::max(sol.max_sweeps, sweep + 1);

    // Residual of min(continuation, V) with the control re-optimised at the
    // accepted iterate.
    double res = 0.0;
    for (std::size_t i = 1; i <= N; ++i) {
      Control c = asm_.choose(V, i, N);
      const Row row = asm_.continuation(i, N, c.q, v_next[i]);
      const double cont = StepAssembler::residual(row, V, i, N);
      res = std::max(res, std::abs(std::min(cont, V[i])));
      ctrl[i] = c;
      ctrl[i].stop = V[i] < cont;
    }
    sol.pde_residual = std::max(sol.pde_residual, res);
    store(n, V, ctrl);
  }
  return sol;
}

namespace {

void require_same(const MarketParams& m1, const ResourceParams& r1, double o1, double h1,
                  const MarketParams& m2, const ResourceParams& r2, double o2, double h2) {
  if (!(m1 == m2) || !(r1 == r2) || o1 != o2 || h1 != h2) {
    throw Error(Errc::parameter_mismatch, "policies were built from different parameters");
  }
}

template <class Eval>
PolicyGap gap_on_subgrid(const HjbSolution& oracle, Eval&& eval) {
  PolicyGap gap;
  const double x_max = oracle.x_grid.back();
  double sumsq = 0.0;
  for (std::size_t n = 0; n < oracle.nt(); ++n) {
    const double t = oracle.t_grid[n];
    if (t > 0.9 * oracle.horizon) break;
    for (std::size_t i = 0; i < oracle.nx(); ++i) {
      const double x = oracle.x_grid[i];
      if (x < 0.1 * x_max || x > 0.9 * x_max) continue;
      const double q_ref = oracle.policy(n, i);
      const auto q = eval(n, i, t, x);
      if (!q || *q == 0.0 || q_ref == 0.0) {
        ++gap.n_excluded;
        continue;
      }
      const double d = std::abs(*q - q_ref);
      gap.sup_gap = std::max(gap.sup_gap, d);
      sumsq += d * d;
      ++gap.n_points;
    }
  }
  if (gap.n_points) gap.l2_gap = std::sqrt(sumsq / static_cast<double>(gap.n_points));
  return gap;
}

}  // namespace

PolicyGap compare_policies(const PolicySpec& closed, const HjbSolution& oracle) {
  require_same(closed.market(), closed.resource(), closed.drift_offset(), closed.horizon(),
               oracle.market, oracle.resource, oracle.drift_offset, oracle.horizon);
  return gap_on_subgrid(oracle, [&](std::size_t, std::size_t, double t,
                                    double x) -> std::optional<double> {
    if (!(x < closed.operating_limit())) return std::nullopt;
    return optimal_extraction(closed, t, x);
  });
}

PolicyGap compare_policies(const HjbSolution& lhs, const HjbSolution& rhs) {
  require_same(lhs.market, lhs.resource, lhs.drift_offset, lhs.horizon, rhs.market,
               rhs.resource, rhs.drift_offset, rhs.horizon);
  if (lhs.nx() != rhs.nx() || lhs.nt() != rhs.nt()) {
    throw Error(Errc::parameter_mismatch, "oracle grids differ");
  }
  return gap_on_subgrid(rhs, [&](std::size_t n, std::size_t i, double,
                                 double) -> std::optional<double> { return lhs.policy(n, i); });
}

NumericRule::NumericRule(std::shared_ptr<const HjbSolution> solution) : sol_(std::move(solution)) {
  if (!sol_ || sol_->nx() < 2 || sol_->nt() < 2) {
    throw Error(Errc::invalid_params, "numeric rule needs a solved grid");
  }
}

ExtractionSample NumericRule::evaluate(double t, double x) const {
  const auto& s = *sol_;
  const std::size_t N = s.nx() - 1;
  const std::size_t M = s.nt() - 1;
  const double h = s.x_grid[1];
  const double dt = s.t_grid[1];
  const bool beyond = x >= s.x_grid.back();
  const double xc = std::clamp(x, 0.0, s.x_grid.back());
  const double tc = std::clamp(t, 0.0, s.horizon);
  const std::size_t i = std::min(static_cast<std::size_t>(xc / h), N - 1);
  const std::size_t n = std::min(static_cast<std::size_t>(tc / dt), M - 1);
  const double wx = std::clamp((xc - s.x_grid[i]) / h, 0.0, 1.0);
  const double wt = std::clamp((tc - s.t_grid[n]) / dt, 0.0, 1.0);
  const double q00 = s.policy(n, i), q01 = s.policy(n, i + 1);
  const double q10 = s.policy(n + 1, i), q11 = s.policy(n + 1, i + 1);
  const double lower = q00 + wx * (q01 - q00);
  const double upper = q10 + wx * (q11 - q10);
  ExtractionSample out;
  out.q = lower + wt * (upper - lower);
  if (!beyond) out.q_x = ((1.0 - wt) * (q01 - q00) + wt * (q11 - q10)) / h;
  if (t >= 0.0 && t <= s.horizon) out.q_t = (upper - lower) / dt;
  return out;
}

}  // namespace rh
