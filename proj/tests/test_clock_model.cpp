#include <cmath>
#include <random>

#include "doctest.h"
#include "twttsim/clock_model.hpp"

using namespace twtt;

TEST_CASE("local_from_global matches the affine model") {
    CHECK(local_from_global(ClockParams(1.0, 0.0), 3.7) == doctest::Approx(3.7).epsilon(1e-15));
    // (1 + 1e-6) * 1e-3 + 5e-6 = 1.000001e-3 + 5e-6
    CHECK(local_from_global(ClockParams(1.0 + 1e-6, 5e-6), 1e-3) ==
          doctest::Approx(1.005001e-3).epsilon(1e-12));
    CHECK(local_from_global(ClockParams(0.999999, -2e-6), 0.0) == doctest::Approx(-2e-6));
}

TEST_CASE("global_from_local inverts the model") {
    CHECK(global_from_local(ClockParams(1.0, 0.0), 42.0) == doctest::Approx(42.0));
    CHECK(global_from_local(ClockParams(1.0 + 1e-6, 5e-6), 1.005001e-3) ==
          doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("round trip is identity to machine precision") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> alpha_dist(1.0 - 5e-4, 1.0 + 5e-4);
    std::uniform_real_distribution<double> phi_dist(-1.0, 1.0);
    std::uniform_real_distribution<double> t_dist(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        const ClockParams clk(alpha_dist(gen), phi_dist(gen));
        const double t = t_dist(gen);
        const double back = global_from_local(clk, local_from_global(clk, t));
        CHECK(std::fabs(t - back) < 1e-15 * std::max(1.0, std::fabs(t)));
    }
}

TEST_CASE("true_relative_skew is the exact quotient") {
    CHECK(true_relative_skew(ClockParams(1.0, 0.0), ClockParams(1.0, 1.0)) == 1.0);
    CHECK(true_relative_skew(ClockParams(1.0, 0.0), ClockParams(1.0 + 2e-6, 0.0)) ==
          doctest::Approx(1.0 + 2e-6).epsilon(1e-15));
    CHECK(true_relative_skew(ClockParams(1.0 + 1e-6, 0.0), ClockParams(1.0 - 1e-6, 0.0)) ==
          doctest::Approx((1.0 - 1e-6) / (1.0 + 1e-6)).epsilon(1e-15));
}

TEST_CASE("conversion is strictly increasing and composition has slope alpha_b/alpha_a") {
    const ClockParams a(1.0 + 3e-7, 0.25);
    const ClockParams b(1.0 - 2e-7, -0.5);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> t_dist(-10.0, 10.0);
    const double slope = true_relative_skew(a, b);
    for (int i = 0; i < 200; ++i) {
        const double t0 = t_dist(gen);
        CHECK(local_from_global(a, t0 + 1e-6) > local_from_global(a, t0));

        // A-local -> global -> B-local is affine with slope alpha_b/alpha_a.
        // The baseline spacing keeps the difference quotient itself
        // well-conditioned at the 1e-12 check level.
        const double t1 = t0 + 0.5;
        const double tau0 = local_from_global(b, global_from_local(a, t0));
        const double tau1 = local_from_global(b, global_from_local(a, t1));
        CHECK(std::fabs((tau1 - tau0) / (t1 - t0) - slope) < 1e-12 * slope);
    }
}

TEST_CASE("constructor rejects implausible parameters") {
    CHECK_THROWS_AS(ClockParams(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ClockParams(-1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ClockParams(1.01, 0.0), std::invalid_argument);
    CHECK_NOTHROW(ClockParams(1.01, 0.0, 0.1));  // widened bound admits it
    CHECK_THROWS_AS(ClockParams(1.0, std::nan("")), std::invalid_argument);
}
