#include <doctest.h>

#include <cmath>

#include "diqkd/optimize.hpp"

using namespace diqkd;

namespace {
constexpr double kDeg = M_PI / 180.0;
}

TEST_CASE("optimal phi for violation") {
    CHECK(optimal_phi_for_violation(M_PI / 2) == doctest::Approx(M_PI / 4).epsilon(1e-14));
    CHECK(optimal_phi_for_violation(M_PI / 6) == doctest::Approx(0.4636476090008061).epsilon(1e-13));
    CHECK(optimal_phi_for_violation(1e-9) == doctest::Approx(0.0));
}

TEST_CASE("optimal phi for rate, trusted devices") {
    Efficiencies unit{1, 1};
    NoiseParams none;

    // small theta: the null-QBER branch dominates, phi* stays near theta
    double th = 0.3;
    double phi_star = optimal_phi_for_rate(th, unit, none);
    double grid_best = -1.0, grid_arg = 0.0;
    for (int k = 0; k <= 20000; ++k) {
        double ph = k * (M_PI / 2) / 20000;
        double v = rate_at_point(th, ph, unit, none);
        if (v > grid_best) {
            grid_best = v;
            grid_arg = ph;
        }
    }
    CHECK(std::abs(phi_star - grid_arg) < 1e-3);
    CHECK(std::abs(phi_star - th) < 0.01);
    CHECK(rate_at_point(th, phi_star, unit, none) >= grid_best - 1e-10);

    // local optimality of the returned maximizer
    double r_star = rate_at_point(th, phi_star, unit, none);
    CHECK(r_star >= rate_at_point(th, phi_star + 1e-6, unit, none) - 1e-12);
    CHECK(r_star >= rate_at_point(th, phi_star - 1e-6, unit, none) - 1e-12);

    // at theta = 80 deg the maximal-violation angle beats phi = theta
    double th80 = 80.0 * kDeg;
    CHECK(rate_trusted(th80, optimal_phi_for_violation(th80)) > rate_trusted(th80, th80));
}

TEST_CASE("best theta for ent-B92 with trusted devices") {
    OptimizationResult res = best_theta_entB92_trusted();
    CHECK(res.converged);
    CHECK(std::abs(res.best_theta / kDeg - 65.28) < 0.05);
    CHECK(rate_trusted(res.best_theta, res.best_theta) >
          rate_trusted(res.best_theta + 0.5 * kDeg, res.best_theta + 0.5 * kDeg));
    CHECK(rate_trusted(res.best_theta, res.best_theta) >
          rate_trusted(res.best_theta - 0.5 * kDeg, res.best_theta - 0.5 * kDeg));
    CHECK(res.best_value > rate_trusted(M_PI / 2, M_PI / 2));
}

TEST_CASE("crossover of the maximal-violation branch") {
    double root = crossover_theta_trusted();
    auto g = [](double th) {
        return rate_trusted(th, optimal_phi_for_violation(th)) - rate_trusted(th, th);
    };
    CHECK(g(90.0 * kDeg) > 0.0);
    CHECK(g(60.0 * kDeg) < 0.0);
    CHECK(root > 60.0 * kDeg);
    CHECK(root < 80.0 * kDeg);
    // root property: sign change within tolerance
    CHECK(g(root - 1e-6) < 0.0);
    CHECK(g(root + 1e-6) > 0.0);
}

TEST_CASE("two-dimensional rate maximization") {
    OptimizationResult r95 = max_rate_over_angles(Efficiencies{0.95, 0.95}, {});
    CHECK(r95.best_value > 0.0);
    // beats its neighbors
    for (double d : {-1e-5, 1e-5}) {
        CHECK(r95.best_value >=
              rate_at_point(r95.best_theta + d, r95.best_phi, {0.95, 0.95}, {}) - 1e-8);
        CHECK(r95.best_value >=
              rate_at_point(r95.best_theta, r95.best_phi + d, {0.95, 0.95}, {}) - 1e-8);
    }
    // below the full-DI threshold nothing is positive
    OptimizationResult r85 = max_rate_over_angles(Efficiencies{0.85, 0.85}, {});
    CHECK(r85.best_value <= 0.0);
}

TEST_CASE("one-side DI threshold over theta") {
    ThresholdResult pure = sdi_threshold_bob({});
    CHECK(pure.threshold < 0.5001);
    CHECK(pure.threshold >= 0.5);
    // threshold at 1 degree matches the closed form
    TwoQubitState st = make_state(1.0 * kDeg);
    CHECK(threshold_bob(coincidence_probs(st, 1.0 * kDeg)) ==
          doctest::Approx(1.0 / (1.0 + std::cos(1.0 * kDeg))).epsilon(1e-9));
    CHECK(pure.achieved_rate_above > 0.0);

    ThresholdResult noisy = sdi_threshold_bob({0.015, 0.007});
    CHECK(noisy.threshold > 0.5);
    // minimizing theta moves to the interior under white noise
    CHECK(noisy.theta_at_threshold > 5.0 * kDeg);
    CHECK(noisy.theta_at_threshold < 89.0 * kDeg);
}

TEST_CASE("rate vs efficiency curve") {
    std::vector<double> grid{0.90, 0.93, 0.96, 1.0};
    auto curve = rate_vs_eta_curve(ScenarioMode::full_di, {}, grid);
    REQUIRE(curve.size() == grid.size());
    for (size_t k = 0; k < curve.size(); ++k) {
        CHECK(curve[k].rate_generalized >= curve[k].rate_entB92 - 1e-12);
        if (k > 0) CHECK(curve[k].rate_generalized >= curve[k - 1].rate_generalized - 1e-12);
    }
    // eta = 1 reproduces the trusted-device optimum
    OptimizationResult best = best_theta_entB92_trusted();
    CHECK(curve.back().rate_entB92 == doctest::Approx(best.best_value).epsilon(1e-9));

    auto sdi = rate_vs_eta_curve(ScenarioMode::one_sdi, {}, {0.45, 0.6, 1.0});
    CHECK(sdi[0].rate_generalized <= 0.0); // below the 50% threshold
    CHECK(sdi[1].rate_generalized > 0.0);
    CHECK(sdi[2].rate_generalized > sdi[1].rate_generalized);
}

TEST_CASE("deterministic results") {
    OptimizationResult a = best_theta_entB92_trusted();
    OptimizationResult b = best_theta_entB92_trusted();
    CHECK(a.best_theta == b.best_theta);
    CHECK(a.best_value == b.best_value);
    OptimizationResult c = max_rate_over_angles(Efficiencies{0.95, 0.95}, {});
    OptimizationResult d = max_rate_over_angles(Efficiencies{0.95, 0.95}, {});
    CHECK(c.best_theta == d.best_theta);
    CHECK(c.best_phi == d.best_phi);
    CHECK(c.best_value == d.best_value);
}
