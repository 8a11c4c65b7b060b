#include <doctest.h>

#include <cmath>
#include <vector>

#include "rh/detection.hpp"
#include "rh/error.hpp"
#include "rh/sde.hpp"

using namespace rh;

TEST_SUITE("detection") {
  TEST_CASE("threshold solves its defining equation") {
    for (double lam : {-0.1, -0.5, -1.5, -2.5, 0.7, 3.0}) {
      for (double T : {1.0, 10.0, 50.0, 500.0}) {
        const double nu = solve_threshold(lam, T);
        CHECK(nu > 0.0);
        const double lhs = 2.0 / (lam * lam) * (std::expm1(nu) - nu);
        CHECK(lhs == doctest::Approx(T).epsilon(1e-10));
      }
    }
    CHECK(solve_threshold(-1.5, 50.0) == doctest::Approx(4.11687).epsilon(1e-6));
  }

  TEST_CASE("threshold depends on lambda only through its square") {
    CHECK(solve_threshold(-1.5, 50.0) == solve_threshold(1.5, 50.0));
  }

  TEST_CASE("delay value and bounds") {
    const double nu = solve_threshold(-1.5, 50.0);
    CHECK(expected_delay(-1.5, nu) == doctest::Approx(2.78504).epsilon(1e-5));
    for (double lam : {-0.5, -1.5, -2.5}) {
      for (double T : {10.0, 50.0}) CHECK(expected_delay(lam, solve_threshold(lam, T)) < T);
    }
  }

  TEST_CASE("horizon never grows with the shift size") {
    const DetectionConfig cfg{50.0};
    double prev = expected_detection_horizon(0.0, cfg);
    CHECK(prev == 50.0);
    for (double mag = 0.05; mag < 6.0; mag += 0.05) {
      const double h = expected_detection_horizon(-mag, cfg);
      CHECK(h <= prev + 1e-12);
      CHECK(h == expected_detection_horizon(mag, cfg));
      prev = h;
    }
    CHECK(expected_detection_horizon(-1.5, cfg) == doctest::Approx(27.78504).epsilon(1e-6));
  }

  TEST_CASE("zero shift is rejected") {
    try {
      solve_threshold(0.0, 50.0);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::lambda_zero);
    }
  }

  TEST_CASE("discrete correction lowers the threshold") {
    const double nu = solve_threshold(-1.5, 50.0);
    CHECK(discrete_threshold(nu, -1.5, 0.01) ==
          doctest::Approx(nu - 2 * 0.5826 * 1.5 * 0.1).epsilon(1e-12));
    CHECK_THROWS_AS(discrete_threshold(nu, -1.5, 0.0), Error);
    CHECK(calibrated_threshold(-1.5, 50.0, 0.01) == discrete_threshold(nu, -1.5, 0.01));
  }

  TEST_CASE("standardized residual") {
    CHECK(standardized_residual(10.5, 10.0, 1.0, 0.5, 2.0, 0.25) == doctest::Approx(0.375));
    CHECK_THROWS_AS(standardized_residual(1, 1, 0, 0, 1, 0.0), Error);
  }

  TEST_CASE("CUSUM statistic is the log-likelihood ratio above its running minimum") {
    CusumDetector det(-1.0, 1.0);
    const double dt = 0.01;
    std::vector<double> rs{1.0, 2.0, -0.5, -3.0, -3.0, -3.0, -3.0, -3.0};
    double u = 0.0, mn = 0.0;
    for (double r : rs) {
      if (det.alarmed()) break;
      det.update(r, dt);
      u += -1.0 * r * std::sqrt(dt) - 0.5 * dt;
      mn = std::min(mn, u);
      CHECK(det.u() == doctest::Approx(u));
      CHECK(det.cs() == doctest::Approx(u - mn));
      CHECK(det.cs() >= 0.0);
    }
  }

  TEST_CASE("alarm fires once and then stays") {
    CusumDetector det(-1.0, 0.5);
    int fired = 0;
    for (int k = 0; k < 100; ++k) fired += det.update(-10.0, 0.01);
    CHECK(fired == 1);
    CHECK(det.alarmed());
    REQUIRE(det.alarm_time());
    CHECK(*det.alarm_time() > 0.0);
  }

  TEST_CASE("online and measure-change forms agree") {
    ConstantExtraction rule(0.3);
    SimConfig cfg;
    cfg.dt = 0.01;
    PathRng rng(5, 0);
    const auto path = simulate_period(rule, 2.0, 1.5, 50.0, 30.0, 5.0, -1.5, cfg, rng);
    const double nu = 3.0, sig = -1.5 / 1.5;
    const auto t_online = run_online(path, 2.0, 1.5, sig, nu);
    const auto idx = detect_by_measure_change(path.stock, path.extraction, 2.0, 1.5, cfg.dt, sig,
                                              nu);
    REQUIRE(t_online);
    REQUIRE(idx);
    CHECK(*t_online == doctest::Approx(path.times[*idx] - path.times[0]).epsilon(1e-9));
    CHECK(*t_online > 0.0);
  }

  TEST_CASE("too little data") {
    Trajectory t;
    t.dt = 0.1;
    t.times = {0.0};
    t.stock = {1.0};
    t.extraction = {0.0};
    CHECK_THROWS_AS(run_online(t, 0.0, 1.0, -1.0, 1.0), Error);
  }
}
