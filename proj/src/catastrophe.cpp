#include "rh/catastrophe.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rh/error.hpp"
#include "tridiagonal.hpp"

namespace rh {

bool at_risk(double natural_drift, double q) noexcept { return natural_drift - q < 0.0; }

bool at_risk(const PolicySpec& spec, double t, double x) {
  return at_risk(spec.effective_drift(), optimal_extraction(spec, t, x));
}

double accumulated_drift(const PolicySpec& spec, double t, double x) {
  const double r = spec.log_derivatives(x).r;
  const double span = spec.horizon() - t;
  const double rho = spec.rho();
  const double weight = rho > 0.0 ? -std::expm1(-rho * span) / rho : span;
  return spec.effective_drift() - spec.qm() + spec.sigma() * spec.sigma() * r * weight;
}

double expected_time_to_catastrophe(double x0, double net_drift) {
  if (!(net_drift < 0.0)) {
    throw Error(Errc::non_negative_drift, "expected hitting time is infinite for drift >= 0");
  }
  if (!(x0 >= 0.0)) throw Error(Errc::invalid_params, "x0 must be non-negative");
  return x0 / -net_drift;
}

double extinction_probability(double x0, double net_drift, double sigma) {
  if (!(x0 >= 0.0) || !(sigma > 0.0)) {
    throw Error(Errc::invalid_params, "need x0 >= 0 and sigma > 0");
  }
  if (net_drift <= 0.0) return 1.0;
  return std::exp(-2.0 * net_drift * x0 / (sigma * sigma));
}

namespace {

// log Phi(-z) for z >= 0, accurate far into the tail.
double log_normal_upper_tail(double z) {
  const double tail = 0.5 * std::erfc(z / std::numbers::sqrt2);
  if (tail > 1e-300) return std::log(tail);
  const double z2 = z * z;
  return -0.5 * z2 - std::log(z * std::sqrt(2.0 * std::numbers::pi)) +
         std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

InverseGaussian::InverseGaussian(double mean, double shape) : mean_(mean), shape_(shape) {
  if (!(mean > 0.0) || !(shape > 0.0) || !std::isfinite(mean) || !std::isfinite(shape)) {
    throw Error(Errc::invalid_params, "inverse Gaussian needs positive finite mean and shape");
  }
}

double InverseGaussian::density(double t) const {
  if (!(t > 0.0)) return 0.0;
  const double d = t - mean_;
  return std::sqrt(shape_ / (2.0 * std::numbers::pi * t * t * t)) *
         std::exp(-shape_ * d * d / (2.0 * mean_ * mean_ * t));
}

double InverseGaussian::cdf(double t) const {
  if (!(t > 0.0)) return 0.0;
  if (std::isinf(t)) return 1.0;
  const double s = std::sqrt(shape_ / t);
  const double first = normal_cdf(s * (t / mean_ - 1.0));
  const double second = std::exp(2.0 * shape_ / mean_ + log_normal_upper_tail(s * (t / mean_ + 1.0)));
  return std::clamp(first + second, 0.0, 1.0);
}

double InverseGaussian::mode() const {
  const double k = 1.5 * mean_ / shape_;
  return mean_ * (std::sqrt(1.0 + k * k) - k);
}

InverseGaussian ig_first_passage(double x0, double net_drift, double sigma) {
  if (!(net_drift < 0.0)) {
    throw Error(Errc::non_negative_drift, "first passage law needs a negative drift");
  }
  if (!(x0 > 0.0) || !(sigma > 0.0)) {
    throw Error(Errc::invalid_params, "need x0 > 0 and sigma > 0");
  }
  const double a = x0 / sigma;
  return InverseGaussian(x0 / -net_drift, a * a);
}

double KfeSolution::phi_at(std::size_t n, double x) const {
  const std::size_t N = nx() - 1;
  const double h = x_grid[1];
  if (x <= 0.0) return 1.0;
  if (x >= x_grid.back()) return at(n, N);
  const std::size_t i = std::min(static_cast<std::size_t>(x / h), N - 1);
  const double w = (x - x_grid[i]) / h;
  return (1.0 - w) * at(n, i) + w * at(n, i + 1);
}

double default_kfe_x_max(double x0, double natural_drift, double sigma, double horizon) {
  return x0 + 6.0 * sigma * std::sqrt(horizon) + std::abs(natural_drift) * horizon;
}

namespace {

// Generator coefficients at interior node i: L phi_i = lo phi_{i-1} - (lo + up) phi_i + up phi_{i+1}.
struct Generator {
  std::vector<double> lo;
  std::vector<double> up;
};

void generator_at(const ExtractionRule* rule, double natural_drift, double sigma, double h,
                  double t, const std::vector<double>& x, Generator& g) {
  const std::size_t n = x.size();
  g.lo.assign(n, 0.0);
  g.up.assign(n, 0.0);
  const double diff = 0.5 * sigma * sigma / (h * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double q = rule ? rule->evaluate(t, x[i]).q : 0.0;
    const double d = natural_drift - q;
    if (std::abs(d) * h <= sigma * sigma) {
      g.lo[i] = diff - 0.5 * d / h;
      g.up[i] = diff + 0.5 * d / h;
    } else {
      g.lo[i] = diff + std::max(-d, 0.0) / h;
      g.up[i] = diff + std::max(d, 0.0) / h;
    }
  }
}

}  // namespace

KfeSolution solve_kfe(const ExtractionRule* rule, double natural_drift, double sigma, double x0,
                      double horizon, double x_max, int nx, int nt, KfeScheme scheme) {
  if (nx < 16 || nt < 16) throw Error(Errc::grid_too_coarse, "nx and nt must be at least 16");
  if (!(sigma >= 0.0) || !(horizon > 0.0) || !(x_max > 0.0) || !(x0 >= 0.0) || x0 > x_max) {
    throw Error(Errc::invalid_params, "need sigma >= 0, horizon > 0 and 0 <= x0 <= x_max");
  }
  const std::size_t N = static_cast<std::size_t>(nx);
  const std::size_t M = static_cast<std::size_t>(nt);
  const double h = x_max / static_cast<double>(N);
  const double dt = horizon / static_cast<double>(M);

  KfeSolution sol;
  sol.x0 = x0;
  sol.x_grid.resize(N + 1);
  sol.t_grid.resize(M + 1);
  for (std::size_t i = 0; i <= N; ++i) sol.x_grid[i] = h * static_cast<double>(i);
  for (std::size_t n = 0; n <= M; ++n) sol.t_grid[n] = dt * static_cast<double>(n);
  sol.phi.assign((M + 1) * (N + 1), 0.0);

  const bool implicit = scheme == KfeScheme::implicit;
  // Step n maps phi^{n+1} to phi^n; coefficients frozen at t_n (implicit) or
  // t_{n+1} (explicit).
  auto step_time = [&](std::size_t n) { return sol.t_grid[implicit ? n : n + 1]; };

  Generator g;
  std::vector<double> lo(N + 1), di(N + 1), up(N + 1), rhs(N + 1), out, work;
  auto assemble = [&](std::size_t n) {
    generator_at(rule, natural_drift, sigma, h, step_time(n), sol.x_grid, g);
    for (std::size_t i = 1; i < N; ++i) {
      if (implicit) {
        lo[i] = -dt * g.lo[i];
        up[i] = -dt * g.up[i];
        di[i] = 1.0 + dt * (g.lo[i] + g.up[i]);
      } else {
        lo[i] = dt * g.lo[i];
        up[i] = dt * g.up[i];
        di[i] = 1.0 - dt * (g.lo[i] + g.up[i]);
        if (di[i] < 0.0) {
          throw Error(Errc::grid_too_coarse, "explicit step exceeds the stability limit");
        }
      }
    }
    lo[0] = up[0] = lo[N] = up[N] = 0.0;
    di[0] = di[N] = 1.0;
  };

  std::vector<double> phi(N + 1, 0.0);
  phi[0] = 1.0;
  std::copy(phi.begin(), phi.end(), sol.phi.begin() + static_cast<std::ptrdiff_t>(M * (N + 1)));
  for (std::size_t n = M; n-- > 0;) {
    assemble(n);
    if (implicit) {
      rhs = phi;
      rhs[0] = 1.0;
      rhs[N] = 0.0;
      detail::solve_tridiagonal(lo, di, up, rhs, out, work);
    } else {
      out.assign(N + 1, 0.0);
      for (std::size_t i = 1; i < N; ++i) {
        out[i] = lo[i] * phi[i - 1] + di[i] * phi[i] + up[i] * phi[i + 1];
      }
      out[0] = 1.0;
      out[N] = 0.0;
    }
    for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
    phi.swap(out);
    std::copy(phi.begin(), phi.end(), sol.phi.begin() + static_cast<std::ptrdiff_t>(n * (N + 1)));
  }

  // Adjoint sweep: w_n = w_{n-1} P Op_n, where P drops the boundary entries
  // and Op_n is the step-n operator; the mass reaching node 0 during step n
  // is the cdf increment.
  std::vector<double> w(N + 1, 0.0);
  {
    const std::size_t i = std::min(static_cast<std::size_t>(x0 / h), N - 1);
    const double frac = (x0 - sol.x_grid[i]) / h;
    w[i] = 1.0 - frac;
    w[i + 1] += frac;
  }
  sol.cdf.assign(M + 1, 0.0);
  double cum = w[0];
  sol.cdf[0] = cum;
  std::vector<double> tlo(N + 1), tup(N + 1);
  for (std::size_t n = 0; n < M; ++n) {
    w[0] = 0.0;
    w[N] = 0.0;
    assemble(n);
    if (implicit) {
      // Transpose of the tridiagonal matrix.
      for (std::size_t i = 0; i <= N; ++i) {
        tlo[i] = i > 0 ? up[i - 1] : 0.0;
        tup[i] = i < N ? lo[i + 1] : 0.0;
      }
      detail::solve_tridiagonal(tlo, di, tup, w, out, work);
    } else {
      out.assign(N + 1, 0.0);
      for (std::size_t i = 0; i <= N; ++i) {
        double v = di[i] * w[i];
        if (i > 0) v += up[i - 1] * w[i - 1];
        if (i < N) v += lo[i + 1] * w[i + 1];
        out[i] = v;
      }
    }
    w.swap(out);
    cum += w[0];
    sol.cdf[n + 1] = std::min(cum, 1.0);
  }
  sol.hit_probability = sol.cdf[M];

  sol.first_passage_density.assign(M + 1, 0.0);
  for (std::size_t n = 0; n <= M; ++n) {
    const std::size_t a = n == 0 ? 0 : n - 1;
    const std::size_t b = n == M ? M : n + 1;
    sol.first_passage_density[n] = (sol.cdf[b] - sol.cdf[a]) / (sol.t_grid[b] - sol.t_grid[a]);
  }
  double mean = 0.0;
  for (std::size_t n = 0; n < M; ++n) mean += 0.5 * dt * ((1.0 - sol.cdf[n]) + (1.0 - sol.cdf[n + 1]));
  sol.numeric_mean_hit_time = mean;
  return sol;
}

const char* to_string(CatastropheClass c) noexcept {
  switch (c) {
    case CatastropheClass::none: return "none";
    case CatastropheClass::reversible: return "reversible";
    case CatastropheClass::irreversible: return "irreversible";
  }
  return "?";
}

Classification classify(double natural_drift, double sigma, double x0, double next_horizon,
                        const ExtractionRule* rule, const KfeGrid& grid) {
  Classification out;
  if (natural_drift >= 0.0) return out;
  out.expected_hit_time = expected_time_to_catastrophe(x0, natural_drift);
  if (*out.expected_hit_time <= next_horizon) {
    out.cls = CatastropheClass::irreversible;
    return out;
  }
  out.cls = CatastropheClass::reversible;
  const double x_max = default_kfe_x_max(x0, natural_drift, sigma, next_horizon);
  out.kfe = solve_kfe(rule, natural_drift, sigma, x0, next_horizon, x_max, grid.nx, grid.nt);
  return out;
}

CatastropheReport catastrophe_report(double natural_drift, double sigma, double x, double q,
                                     double next_horizon, const ExtractionRule* rule,
                                     const KfeGrid& grid) {
  CatastropheReport rep;
  rep.net_drift = natural_drift - q;
  rep.at_risk = at_risk(natural_drift, q);
  const double xs = std::max(x, 0.0);
  auto cls = classify(natural_drift, sigma, xs, next_horizon, rule, grid);
  rep.classification = cls.cls;
  rep.expected_hit_time = cls.expected_hit_time;
  if (natural_drift < 0.0 && xs > 0.0) {
    const auto ig = ig_first_passage(xs, natural_drift, sigma);
    rep.ig_mean = ig.mean();
    rep.ig_shape = ig.shape();
  }
  if (cls.kfe) {
    rep.hit_probability = cls.kfe->hit_probability;
    rep.kfe_mean_hit_time = cls.kfe->numeric_mean_hit_time;
  } else {
    rep.hit_probability = extinction_probability(xs, natural_drift, sigma);
  }
  return rep;
}

}  // namespace rh
