#include <doctest.h>

#include <cmath>

#include "ddpood/errors.hpp"
#include "ddpood/schedule.hpp"

using namespace ddpood;

TEST_SUITE("schedule") {
    TEST_CASE("default T=1000 ends near pure noise") {
        const NoiseSchedule s = build_linear_schedule(1000, 1e-4, 0.02);
        // Independent product in long double.
        long double prod = 1.0L;
        for (int i = 0; i < 1000; ++i) prod *= 1.0L - (1e-4L + (0.02L - 1e-4L) * i / 999.0L);
        CHECK(s.alpha_bar(1000) == doctest::Approx(static_cast<double>(prod)).epsilon(1e-12));
        CHECK(s.alpha_bar(1000) < 1e-4);
        CHECK(s.alpha_bar(1000) > 3e-5);
        CHECK(s.alpha_bar(0) == 1.0);
    }

    TEST_CASE("tiny schedules by hand") {
        CHECK(build_linear_schedule(1, 0.5, 0.5).alpha_bar(1) == 0.5);
        const NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
        CHECK(s.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(s.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-15));
        CHECK(s.posterior_variance(1) == 0.0);
        CHECK(s.posterior_variance(2) == doctest::Approx((1 - 0.9) / (1 - 0.72) * 0.2).epsilon(1e-14));
    }

    TEST_CASE("invalid ranges") {
        CHECK_THROWS_AS(build_linear_schedule(0, 1e-4, 0.02), ConfigError);
        CHECK_THROWS_AS(build_linear_schedule(10, 0.0, 0.02), ConfigError);
        CHECK_THROWS_AS(build_linear_schedule(10, 0.03, 0.02), ConfigError);
        CHECK_THROWS_AS(build_linear_schedule(10, 1e-4, 1.0), ConfigError);
    }

    TEST_CASE("invariants over the default schedule") {
        const NoiseSchedule s = default_schedule();
        double prod = 1.0;
        for (int t = 1; t <= s.max_step(); ++t) {
            prod *= 1.0 - s.beta(t);
            CHECK(std::abs(s.alpha_bar(t) - prod) <= 1e-12 * prod);
            CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
            CHECK(s.posterior_variance(t) >= 0.0);
            CHECK(s.posterior_variance(t) <= s.beta(t));
        }
    }

    TEST_CASE("smaller T keeps the endpoint noisy") {
        for (int T : {10, 50, 100, 250}) CHECK(default_schedule(T).alpha_bar(T) < 1e-4);
    }

    TEST_CASE("posterior mean coefficients") {
        const NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
        const auto c1 = posterior_mean_coefficients(s, 1);
        CHECK(c1.x0 == doctest::Approx(0.1 / (1 - 0.9)));
        CHECK(c1.xt == 0.0);
        const auto c2 = posterior_mean_coefficients(s, 2);
        CHECK(c2.x0 == doctest::Approx(std::sqrt(0.9) * 0.2 / (1 - 0.72)).epsilon(1e-14));
        CHECK(c2.xt == doctest::Approx(std::sqrt(0.8) * (1 - 0.9) / (1 - 0.72)).epsilon(1e-14));
        CHECK_THROWS_AS(posterior_mean_coefficients(s, 0), IndexError);
        CHECK_THROWS_AS(posterior_mean_coefficients(s, 3), IndexError);

        const NoiseSchedule d = default_schedule();
        for (int t = 1; t <= 1000; ++t) {
            const auto c = posterior_mean_coefficients(d, t);
            CHECK(c.x0 + c.xt * std::sqrt(d.alpha_bar(t)) == doctest::Approx(std::sqrt(d.alpha_bar(t - 1))).epsilon(1e-12));
        }
    }

    TEST_CASE("time grids") {
        const TimeGrid g = build_time_grid(1000, 0, 50);
        CHECK(g.stride() == 20);
        const auto steps = g.timesteps();
        REQUIRE(steps.size() == 50);
        CHECK(steps.front() == 1000);
        CHECK(steps.back() == 20);
        for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i - 1] - steps[i] == 20);
        CHECK(build_time_grid(300, 0, 10).stride() == 30);
        CHECK_THROWS_AS(build_time_grid(1000, 0, 7), ConfigError);
        CHECK_THROWS_AS(build_time_grid(0, 10, 2), ConfigError);
        CHECK(g.reversed().reversed() == g);
        CHECK(g.reversed().timesteps().front() == 0);
        CHECK_FALSE(g.reversed().descending());
    }

    TEST_CASE("continuous alpha_bar agrees with the table and is smooth") {
        const NoiseSchedule s = default_schedule();
        for (int t : {0, 1, 2, 17, 500, 999, 1000}) CHECK(s.alpha_bar_at(t) == s.alpha_bar(t));
        // Continuous product for a linear beta: between integers the log is
        // concave-free and monotone; check it lies between neighbours.
        for (double t = 0.25; t < 1000; t += 37.5) {
            const double v = s.alpha_bar_at(t);
            CHECK(v < s.alpha_bar(static_cast<int>(std::floor(t))));
            CHECK(v > s.alpha_bar(static_cast<int>(std::ceil(t))));
        }
        // Half-step value matches the geometric interpolation to second order.
        const double mid = s.alpha_bar_at(400.5);
        CHECK(mid == doctest::Approx(std::sqrt(s.alpha_bar(400) * s.alpha_bar(401))).epsilon(1e-6));
        CHECK_THROWS_AS(s.alpha_bar_at(-0.1), IndexError);
        CHECK_THROWS_AS(s.alpha_bar_at(1000.1), IndexError);
    }

    TEST_CASE("fingerprint distinguishes schedules") {
        CHECK(default_schedule().fingerprint() == default_schedule().fingerprint());
        CHECK(default_schedule().fingerprint() != build_linear_schedule(1000, 1e-4, 0.021).fingerprint());
    }
}
