#include <doctest.h>

#include <cmath>
#include <memory>

#include "rh/error.hpp"
#include "rh/hjb.hpp"

using namespace rh;

namespace {
const MarketParams smooth{5.0, 0.75, 1.25, 0.5, 0.02};
const ResourceParams smooth_r{6.0, 3.25, 10.0};

const HjbSolution& base() {
  static const HjbSolution s = solve_hjb(smooth, smooth_r, 0.0, 10.0, 40.0, 200, 400);
  return s;
}
}  // namespace

TEST_SUITE("hjb") {
  TEST_CASE("boundary, sign and monotonicity of V") {
    const auto& s = base();
    for (std::size_t n = 0; n < s.nt(); ++n) {
      CHECK(s.value(n, 0) == 0.0);
      CHECK(s.policy(n, 0) == 0.0);
      for (std::size_t i = 1; i < s.nx(); ++i) {
        CHECK(s.value(n, i) >= 0.0);
        CHECK(s.value(n, i) >= s.value(n, i - 1) - 1e-12);
      }
    }
    for (std::size_t i = 0; i < s.nx(); ++i) CHECK(s.value(s.nt() - 1, i) == 0.0);
  }

  TEST_CASE("residual of the discrete equation is small") {
    CHECK(base().pde_residual < 1e-4);
    CHECK(base().max_sweeps <= 200);
  }

  TEST_CASE("policy obeys the first-order condition bounds") {
    const auto& s = base();
    const double slope = smooth.markup_slope();
    double min_vx = 0.0;
    for (std::size_t n = 0; n < s.nt(); ++n) {
      for (std::size_t i = 1; i < s.nx(); ++i) {
        min_vx = std::min(min_vx, (s.value(n, i) - s.value(n, i - 1)) / s.x_grid[1]);
      }
    }
    for (double q : s.q) {
      CHECK(q >= 0.0);
      CHECK(q <= smooth.monopoly_quantity() + std::abs(min_vx) / slope + 1e-12);
    }
  }

  TEST_CASE("unprofitable market is worth nothing") {
    MarketParams m = smooth;
    m.fixed_cost = 10.0;  // above the best possible operating profit a^2 / (2 (2b + c))
    const auto s = solve_hjb(m, smooth_r, 0.0, 5.0, 20.0, 40, 40);
    for (double v : s.V) CHECK(v == 0.0);
  }

  TEST_CASE("long horizon interior extraction tends to the monopoly quantity") {
    const auto s = solve_hjb(smooth, smooth_r, 0.0, 300.0, 40.0, 100, 600);
    const double qm = smooth.monopoly_quantity();
    const double h = s.x_grid[1];
    int used = 0;
    for (std::size_t i = 10; i < 90; ++i) {
      const double vx = (s.value(0, i + 1) - s.value(0, i)) / h;
      if (std::abs(vx) > 1e-3) continue;
      CHECK(s.policy(0, i) == doctest::Approx(qm).epsilon(1e-3));
      ++used;
    }
    CHECK(used > 10);
  }

  TEST_CASE("raising the terminal condition never lowers V") {
    std::vector<double> lo(81, 0.0), hi(81, 0.0);
    for (std::size_t i = 0; i < 81; ++i) {
      lo[i] = 0.1 * static_cast<double>(i) / 80.0;
      hi[i] = lo[i] + 0.5 + std::sin(static_cast<double>(i)) * 0.2 + 0.2;
    }
    const auto a = solve_hjb(smooth, smooth_r, 0.0, 5.0, 20.0, 80, 100, &lo);
    const auto b = solve_hjb(smooth, smooth_r, 0.0, 5.0, 20.0, 80, 100, &hi);
    for (std::size_t k = 0; k < a.V.size(); ++k) CHECK(b.V[k] >= a.V[k] - 1e-12);
  }

  TEST_CASE("comparison against itself and against the closed form") {
    const auto& s = base();
    const auto self = compare_policies(s, s);
    CHECK(self.sup_gap == 0.0);
    CHECK(self.l2_gap == 0.0);
    CHECK(self.n_points > 0);
    const auto cf = compare_policies(build_policy(smooth, smooth_r, 0.0, 10.0), s);
    CHECK(cf.n_points + cf.n_excluded > 0);
    CHECK(std::isfinite(cf.sup_gap));
    CHECK(cf.l2_gap <= cf.sup_gap);
  }

  TEST_CASE("parameter mismatch") {
    ResourceParams other = smooth_r;
    other.sigma = 3.0;
    try {
      compare_policies(build_policy(smooth, other, 0.0, 10.0), base());
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parameter_mismatch);
    }
  }

  TEST_CASE("grid too coarse") {
    try {
      solve_hjb(smooth, smooth_r, 0.0, 10.0, 40.0, 8, 100);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::grid_too_coarse);
    }
  }

  TEST_CASE("numeric rule interpolates the surface") {
    auto sol = std::make_shared<const HjbSolution>(base());
    NumericRule rule(sol);
    const auto& s = *sol;
    CHECK(rule.evaluate(s.t_grid[3], s.x_grid[7]).q == doctest::Approx(s.policy(3, 7)));
    const double x = 0.5 * (s.x_grid[7] + s.x_grid[8]);
    CHECK(rule.evaluate(s.t_grid[3], x).q ==
          doctest::Approx(0.5 * (s.policy(3, 7) + s.policy(3, 8))));
    CHECK(rule.evaluate(-1.0, 1e6).q == doctest::Approx(s.policy(0, s.nx() - 1)));
  }
}
