#include <doctest.h>

#include <cmath>

#include "rh/error.hpp"
#include "rh/policy.hpp"

using namespace rh;

namespace {
const MarketParams smooth{5.0, 0.75, 1.25, 0.5, 0.02};
const ResourceParams smooth_r{6.0, 3.25, 10.0};
const MarketParams oscill{3.0, 0.1, 0.5, 0.25, 0.02};
const ResourceParams oscill_r{5.0, 3.0, 10.0};
}  // namespace

TEST_SUITE("policy") {
  TEST_CASE("psi forms follow the discriminant") {
    CHECK(build_policy(smooth, smooth_r, 0.0, 10.0).form() == PsiForm::two_exponential);
    CHECK(build_policy(smooth, smooth_r, -2.5, 10.0).form() == PsiForm::oscillatory);
    CHECK(build_policy(oscill, oscill_r, 0.0, 10.0).form() == PsiForm::oscillatory);
  }

  TEST_CASE("psi is pinned at the origin") {
    for (double offset : {0.0, -2.5, 3.0}) {
      const auto s = build_policy(smooth, smooth_r, offset, 10.0);
      CHECK(s.psi(0.0) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(s.psi_prime(0.0) ==
            doctest::Approx(s.qm() / (smooth_r.sigma * smooth_r.sigma)).epsilon(1e-12));
    }
    const auto s = build_policy(smooth, smooth_r, 0.0, 10.0);
    CHECK(s.c1() == doctest::Approx(1.287).epsilon(1e-3));
    CHECK(s.c2() == doctest::Approx(-0.2866).epsilon(1e-3));
  }

  TEST_CASE("psi solves its linear ODE") {
    // sigma^2/2 psi'' + A psi' + (2 B C / sigma^2) psi = 0 in the scaled variable.
    for (double offset : {0.0, -2.5, 4.0}) {
      const auto s = build_policy(smooth, smooth_r, offset, 10.0);
      const auto& r = s.roots();
      const double s2 = smooth_r.sigma * smooth_r.sigma;
      for (double x : {0.3, 1.0, 4.0, 9.0}) {
        if (!(x < s.operating_limit())) continue;
        const double h = 1e-4;
        const double p0 = s.psi(x), pp = s.psi_prime(x);
        const double ppp = (s.psi_prime(x + h) - s.psi_prime(x - h)) / (2.0 * h);
        const double res = s2 * s2 * ppp + 2.0 * r.A * s2 * pp + 4.0 * r.B * r.C * p0;
        CHECK(std::abs(res) < 1e-5 * (std::abs(p0) + std::abs(pp) + 1.0) * s2 * s2);
      }
    }
  }

  TEST_CASE("extraction vanishes at the horizon on an empty stock") {
    for (double offset : {0.0, -2.5, 2.0}) {
      for (double h : {0.5, 10.0, 80.0}) {
        CHECK(optimal_extraction(build_policy(smooth, smooth_r, offset, h), h, 0.0) == 0.0);
      }
    }
  }

  TEST_CASE("long horizons recover the monopoly quantity") {
    const auto s = build_policy(smooth, smooth_r, 0.0, 4000.0);
    for (double x : {0.1, 1.0, 10.0}) {
      CHECK(optimal_extraction(s, 0.0, x) == doctest::Approx(s.qm()).epsilon(1e-9));
    }
  }

  TEST_CASE("analytic derivatives match finite differences") {
    for (double offset : {0.0, -2.5}) {
      const auto s = build_policy(smooth, smooth_r, offset, 10.0);
      for (double x : {0.7, 2.0, 6.0, 15.0}) {
        const auto v = extraction_at(s, 2.0, x, 10.0);
        if (v.q == 0.0) continue;
        const double e = 1e-4;
        const auto up = extraction_at(s, 2.0, x + e, 10.0);
        const auto dn = extraction_at(s, 2.0, x - e, 10.0);
        CHECK(v.q_x == doctest::Approx((up.q - dn.q) / (2 * e)).epsilon(1e-6));
        CHECK(v.q_xx == doctest::Approx((up.q_x - dn.q_x) / (2 * e)).epsilon(1e-5));
        const auto later = extraction_at(s, 2.0 + e, x, 10.0);
        const auto earlier = extraction_at(s, 2.0 - e, x, 10.0);
        CHECK(v.q_t == doctest::Approx((later.q - earlier.q) / (2 * e)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("monotonicity in x follows the sign of c1 c2") {
    for (double offset : {0.0, 1.0, -2.5, 5.0}) {
      const auto s = build_policy(smooth, smooth_r, offset, 10.0);
      const bool increasing = s.form() == PsiForm::oscillatory || s.c1() * s.c2() <= 0.0;
      double prev = optimal_extraction(s, 0.0, 0.0);
      bool mono = true;
      for (double x = 0.05; x < std::min(20.0, s.operating_limit()); x += 0.05) {
        const double q = optimal_extraction(s, 0.0, x);
        if (q < prev - 1e-12) mono = false;
        prev = q;
      }
      if (increasing) CHECK(mono);
    }
  }

  TEST_CASE("operating limit is the first zero of psi") {
    const auto s = build_policy(oscill, oscill_r, 0.0, 27.785);
    const double L = s.operating_limit();
    CHECK(std::isfinite(L));
    CHECK(L == doctest::Approx(5.3).epsilon(0.05));
    CHECK(std::abs(s.psi(L)) < 1e-9);
    for (double x = 0.0; x < L; x += L / 50) CHECK(s.psi(x) > 0.0);
    CHECK_THROWS_AS(optimal_extraction(s, 0.0, L + 0.1), Error);
    const auto o = build_policy(smooth, smooth_r, -2.5, 10.0);
    CHECK(o.operating_limit() == doctest::Approx(95.4).epsilon(1e-2));
  }

  TEST_CASE("domain errors") {
    const auto s = build_policy(smooth, smooth_r, 0.0, 10.0);
    auto code = [&](double t, double x) {
      try {
        optimal_extraction(s, t, x);
      } catch (const Error& e) {
        return e.code();
      }
      return Errc::invalid_params;
    };
    CHECK(code(-0.1, 1.0) == Errc::out_of_domain);
    CHECK(code(10.5, 1.0) == Errc::out_of_domain);
    CHECK(code(1.0, -1.0) == Errc::out_of_domain);
  }

  TEST_CASE("precaution at low stock and aggression at high stock") {
    for (double h : {2.0, 5.0, 10.0, 20.0, 40.0}) {
      const auto base = build_policy(smooth, smooth_r, 0.0, h);
      const auto shifted = build_policy(smooth, smooth_r, -2.5, h);
      CHECK(optimal_extraction(shifted, 0.0, 1.0) < optimal_extraction(base, 0.0, 1.0));
      CHECK(resource_rent(shifted, 0.0, 1.0).vx > resource_rent(base, 0.0, 1.0).vx);
    }
    const auto base = build_policy(smooth, smooth_r, 0.0, 2.0);
    const auto shifted = build_policy(smooth, smooth_r, -2.5, 2.0);
    CHECK(optimal_extraction(shifted, 0.0, 10.0) > optimal_extraction(base, 0.0, 10.0));
  }

  TEST_CASE("rent and extraction are tied by the first-order condition") {
    const auto s = build_policy(smooth, smooth_r, 0.0, 10.0);
    for (double x : {0.5, 3.0, 8.0}) {
      const double q = optimal_extraction(s, 1.0, x);
      const double vx = resource_rent(s, 1.0, x).vx;
      if (q > 0.0) CHECK(q == doctest::Approx((smooth.a - vx) / smooth.markup_slope()));
    }
    CHECK(resource_rent(s, 10.0, 0.0).vx == smooth.a);
  }

  TEST_CASE("closed-form rule adapts the policy") {
    const auto s = build_policy(smooth, smooth_r, 0.0, 10.0);
    const ClosedFormRule rule(s);
    CHECK(rule.evaluate(3.0, 2.0).q == optimal_extraction(s, 3.0, 2.0));
    CHECK(rule.evaluate(3.0, -1.0).q == optimal_extraction(s, 3.0, 0.0));
    const ClosedFormRule later(s, 30.0);
    CHECK(later.evaluate(20.0, 2.0).q == extraction_at(s, 20.0, 2.0, 30.0).q);
  }

  TEST_CASE("expected marginal revenue drift matches its formula") {
    const auto s = build_policy(smooth, smooth_r, 0.0, 10.0);
    const double x = 3.0, t = 1.0;
    const auto v = extraction_at(s, t, x, 10.0);
    const double b = smooth.b, s2 = smooth_r.sigma * smooth_r.sigma;
    const double qv = s.qm() - v.q;
    const double expect = 2 * b * v.q_x * v.q - 2 * b * v.q_x * s.effective_drift() -
                          s2 * b * v.q_xx + 2 * smooth.rho * b * qv;
    CHECK(expected_mr_drift(s, t, x) == doctest::Approx(expect));
  }
}
