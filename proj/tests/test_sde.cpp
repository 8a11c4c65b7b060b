#include <doctest.h>

#include <cmath>

#include "rh/error.hpp"
#include "rh/sde.hpp"

using namespace rh;

namespace {
class LinearRule final : public ExtractionRule {
 public:
  LinearRule(double k, double c) : k_(k), c_(c) {}
  ExtractionSample evaluate(double, double x) const override { return {c_ + k_ * x, k_, 0.0, 0.0}; }

 private:
  double k_, c_;
};
}  // namespace

TEST_SUITE("sde") {
  TEST_CASE("local linearisation equals Euler for constant drift") {
    for (double z : {-1.3, 0.0, 0.4, 2.2}) {
      const DriftEval d{0.7, 0.0, 0.0, 0.0};
      const auto a = euler_step(5.0, d, 1.2, 0.01, z);
      const auto b = shoji_ozaki_step(5.0, d, 1.2, 0.01, z);
      CHECK(a.x == b.x);
    }
  }

  TEST_CASE("tiny drift slope falls back continuously") {
    const DriftEval d0{0.7, 0.0, 0.1, 0.0};
    const DriftEval d1{0.7, 1e-13, 0.1, 0.0};
    const DriftEval d2{0.7, 1e-6, 0.1, 0.0};
    const auto a = shoji_ozaki_step(5.0, d0, 1.2, 0.01, 0.3);
    CHECK(shoji_ozaki_step(5.0, d1, 1.2, 0.01, 0.3).x == a.x);
    CHECK(shoji_ozaki_step(5.0, d2, 1.2, 0.01, 0.3).x == doctest::Approx(a.x).epsilon(1e-8));
  }

  TEST_CASE("steps absorb at zero") {
    const DriftEval d{-5.0, 0.0, 0.0, 0.0};
    const auto r = step(Stepper::euler, 0.01, d, 0.1, 0.01, -3.0);
    CHECK(r.absorbed);
    CHECK(r.x == 0.0);
  }

  TEST_CASE("local linearisation is exact in mean for a linear drift") {
    // dX = (m - k X) dt + s dW: E X_t = m/k + (x0 - m/k) e^{-k t}.
    const double k = 0.8, m = 4.0, x0 = 10.0, s = 0.5, T = 2.0;
    LinearRule rule(k, 0.0);
    McScenario sc;
    sc.rule = &rule;
    sc.natural_drift = m;
    sc.sigma = s;
    sc.x0 = x0;
    sc.horizon = T;
    sc.absorbing = true;
    SimConfig cfg;
    cfg.dt = 0.25;  // coarse on purpose
    cfg.n_paths = 4000;
    cfg.seed = 3;
    const auto res = monte_carlo(sc, cfg);
    const double exact = m / k + (x0 - m / k) * std::exp(-k * T);
    const double se = std::sqrt(res.variance.back() / cfg.n_paths);
    CHECK(std::abs(res.mean.back() - exact) < 4.0 * se + 1e-12);
    const double var_exact = s * s / (2 * k) * (1 - std::exp(-2 * k * T));
    CHECK(res.variance.back() == doctest::Approx(var_exact).epsilon(0.08));
  }

  TEST_CASE("streams are reproducible and distinct") {
    PathRng a(42, 7), b(42, 7), c(42, 8);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
  }

  TEST_CASE("simulate_period is deterministic and grid-aligned") {
    ConstantExtraction rule(1.0);
    SimConfig cfg;
    cfg.dt = 0.01;
    PathRng r1(9, 0), r2(9, 0);
    const auto p1 = simulate_period(rule, 2.0, 1.0, 10.0, 2.005, 1.0, -1.0, cfg, r1);
    const auto p2 = simulate_period(rule, 2.0, 1.0, 10.0, 2.005, 1.0, -1.0, cfg, r2);
    CHECK(p1.stock == p2.stock);
    CHECK(p1.size() == 202);
    REQUIRE(p1.regime_marks.size() == 1);
    CHECK(p1.regime_marks[0].first == doctest::Approx(1.0));
    CHECK(p1.extraction.size() == p1.stock.size());
  }

  TEST_CASE("absorbed paths stay at zero") {
    ConstantExtraction rule(50.0);
    SimConfig cfg;
    PathRng rng(1, 0);
    const auto p = simulate_period(rule, 0.0, 0.1, 1.0, 1.0, std::nullopt, 0.0, cfg, rng);
    REQUIRE(p.absorbed_at);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p.times[k] > *p.absorbed_at + 1e-12) CHECK(p.stock[k] == 0.0);
    }
  }

  TEST_CASE("ensemble summary does not depend on the path count split") {
    McScenario sc;
    sc.natural_drift = -0.5;
    sc.sigma = 1.0;
    sc.x0 = 3.0;
    sc.horizon = 5.0;
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.n_paths = 300;
    cfg.seed = 11;
    const auto a = monte_carlo(sc, cfg);
    const auto b = monte_carlo(sc, cfg);
    CHECK(a.mean == b.mean);
    CHECK(a.hit_times == b.hit_times);
    // Path i is the same draw stream whatever the ensemble size.
    cfg.n_paths = 10;
    const auto c = monte_carlo(sc, cfg);
    for (std::size_t i = 0; i < 10; ++i) CHECK(c.terminal_stock[i] == a.terminal_stock[i]);
  }

  TEST_CASE("bad inputs") {
    McScenario sc;
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(monte_carlo(sc, cfg), Error);
    CHECK_THROWS_AS(PathSimulator(1.0, 0.0, 1.0, -1.0, Stepper::euler), Error);
  }
}
