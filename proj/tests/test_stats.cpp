#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qis/stats.hpp"

using namespace qis;

namespace {

double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace

TEST_SUITE_BEGIN("stats");

TEST_CASE("psi: boundary values and brute-force agreement") {
    CHECK(stats::psi(0, 5.0) == 0.0);
    CHECK(stats::psi(1, 0.0) == 1.0);
    CHECK(stats::psi(5, 0.0) == 1.0);

    for (double s : {0.3, 1.0, 2.0, 7.5}) {
        CHECK(stats::psi(1, s) == doctest::Approx(std::exp(-s)).epsilon(1e-14));
    }

    // direct term-by-term summation oracle
    CHECK(stats::psi(3, 2.0) ==
          doctest::Approx(static_cast<double>(oracle::psi_bruteforce(3, 2.0))).epsilon(1e-13));
    for (long q : {1L, 2L, 4L, 9L, 40L}) {
        for (double s : {0.01, 0.9, 3.7, 12.0, 30.0}) {
            CHECK(std::abs(stats::psi(q, s) - static_cast<double>(oracle::psi_bruteforce(q, s))) < 1e-12);
        }
    }
}

TEST_CASE("psi: domain errors and monotonicity") {
    CHECK_THROWS_AS(stats::psi(-1, 1.0), std::domain_error);
    CHECK_THROWS_AS(stats::psi(2, -0.5), std::domain_error);
    CHECK_THROWS_AS(stats::psi(2, std::numeric_limits<double>::quiet_NaN()), std::domain_error);

    // nonincreasing in s for fixed q >= 1
    for (long q : {1L, 3L, 10L}) {
        double prev = 1.0;
        for (double s : {0.0, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
            const double v = stats::psi(q, s);
            CHECK(v <= prev + 1e-15);
            prev = v;
        }
    }
    // nondecreasing in q for fixed s
    for (double s : {0.5, 4.0, 50.0}) {
        double prev = 0.0;
        for (long q = 0; q <= 120; ++q) {
            const double v = stats::psi(q, s);
            CHECK(v >= prev - 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("mean_clipped: named examples") {
    CHECK(stats::mean_clipped({0.0, 5}) == 0.0);
    CHECK(stats::mean_clipped({0.0, 4000}) == 0.0);

    const double ln2 = std::log(2.0);
    CHECK(stats::mean_clipped({ln2, 1}) == doctest::Approx(0.5).epsilon(1e-14));

    CHECK(std::abs(stats::mean_clipped({3.7, 7}) -
                   static_cast<double>(oracle::clipped_mean(3.7, 7))) < 1e-12);
}

TEST_CASE("var_clipped: named examples") {
    CHECK(stats::var_clipped({0.0, 4000}) == 0.0);

    const double p = std::exp(-1.0);
    CHECK(stats::var_clipped({1.0, 1}) == doctest::Approx(p * (1.0 - p)).epsilon(1e-14));

    CHECK(std::abs(stats::var_clipped({5.5, 7}) -
                   static_cast<double>(oracle::clipped_var(5.5, 7))) < 1e-12);
}

TEST_CASE("moments agree with pmf-summation oracles on the full grid") {
    for (double theta : oracle::theta_grid()) {
        for (int cap : oracle::capacity_grid()) {
            const double mean = stats::mean_clipped({theta, cap});
            const double var = stats::var_clipped({theta, cap});
            const double mean_ref = static_cast<double>(oracle::clipped_mean(theta, cap));
            const double var_ref = static_cast<double>(oracle::clipped_var(theta, cap));
            INFO("theta=", theta, " L=", cap);
            CHECK(std::abs(mean - mean_ref) < 1e-10);
            CHECK(std::abs(var - var_ref) < 1e-10);
        }
    }
}

TEST_CASE("mean_clipped: monotone in theta and bounded by min(theta, L)") {
    for (int cap : {1, 3, 16, 4000}) {
        double prev = -1.0;
        for (double theta :
             {0.0, 1e-6, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0, 1000.0, 4000.0, 8000.0}) {
            const double m = stats::mean_clipped({theta, cap});
            CHECK(m >= prev);
            if (prev < cap * (1.0 - 1e-9)) CHECK(m > prev); // strict until saturation absorbs ulps
            CHECK(m <= std::min(theta, static_cast<double>(cap)) + 1e-12);
            prev = m;
        }
    }
}

TEST_CASE("L = 1 closed forms hold to machine precision") {
    for (double theta : oracle::theta_grid()) {
        const double p = std::exp(-theta);
        const double mean_closed = -std::expm1(-theta);
        CHECK(stats::mean_clipped({theta, 1}) == doctest::Approx(mean_closed).epsilon(4e-15));
        CHECK(stats::var_clipped({theta, 1}) == doctest::Approx(p * mean_closed).epsilon(4e-15));
        CHECK(stats::dmean_dtheta({theta, 1}) == p); // exact: shared branch
    }
}

TEST_CASE("dmean_dtheta: named examples and gradient check") {
    CHECK(stats::dmean_dtheta({std::log(2.0), 1}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(stats::dmean_dtheta({0.0, 1}) == 1.0);
    CHECK(stats::dmean_dtheta({0.0, 7}) == 1.0);
    CHECK(stats::dmean_dtheta({0.0, 4000}) == 1.0);

    // central finite difference with h = 1e-6 at theta = 2.3
    {
        const double h = 1e-6;
        const double fd =
            (stats::mean_clipped({2.3 + h, 4}) - stats::mean_clipped({2.3 - h, 4})) / (2.0 * h);
        CHECK(rel_err(stats::dmean_dtheta({2.3, 4}), fd) < 1e-6);
    }

    // grid-wide gradient check (one-sided at theta = 0)
    for (double theta : oracle::theta_grid()) {
        for (int cap : oracle::capacity_grid()) {
            const double d = stats::dmean_dtheta({theta, cap});
            if (d < 1e-12) continue; // underflowed slope: FD would be 0/0
            const double h = 1e-6 * std::max(1.0, theta);
            const double fd =
                (stats::mean_clipped({theta + h, cap}) - stats::mean_clipped({theta - h, cap})) /
                (2.0 * h);
            INFO("theta=", theta, " L=", cap);
            CHECK(rel_err(d, fd) < 1e-6);
        }
    }
}

TEST_CASE("dmean_dtheta equals psi_L(theta)") {
    // The two-branch derivative formula collapses to the CDF at L-1.
    for (double theta : {0.01, 0.9, 3.7, 42.0, 3900.0}) {
        for (int cap : {1, 2, 5, 16, 4000}) {
            const double d = stats::dmean_dtheta({theta, cap});
            const double ref = stats::psi(cap, theta);
            CHECK(std::abs(d - ref) < 1e-12);
        }
    }
}

TEST_CASE("snr_h: named examples") {
    // negligible clipping: snr = sqrt(theta)
    CHECK(stats::snr_h({{100.0, 4000}, 1}) == doctest::Approx(20.0).epsilon(1e-9));

    // L = 1 closed form
    const double p = std::exp(-1.0);
    const double expected = 20.0 * std::log10(p / std::sqrt(p * (1.0 - p)));
    CHECK(stats::snr_h({{1.0, 1}, 1}) == doctest::Approx(expected).epsilon(1e-12));

    // sqrt(T) scaling: +20 log10(2) for T = 4
    const double single = stats::snr_h({{100.0, 4000}, 1});
    CHECK(stats::snr_h({{100.0, 4000}, 4}) ==
          doctest::Approx(single + 20.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("snr_h: undefined cases raise") {
    CHECK_THROWS_AS(stats::snr_h({{0.0, 1}, 1}), stats::UndefinedSnrError);
    CHECK_THROWS_AS(stats::snr_h({{5000.0, 1}, 1}), stats::UndefinedSnrError); // sigma underflow
    CHECK_THROWS_AS(stats::snr_h({{1.0, 0}, 1}), std::domain_error);
    CHECK_THROWS_AS(stats::snr_h({{1.0, 1}, 0}), std::domain_error);
}

TEST_CASE("snr_h approaches the unclipped Poisson limit") {
    for (int cap : {100, 1000, 4000}) {
        for (double theta : {0.05, 1.0, cap / 20.0, cap / 10.0}) {
            const double snr = stats::snr_h({{theta, cap}, 1});
            CHECK(std::abs(snr - 10.0 * std::log10(theta)) <= 0.01);
        }
    }
}

TEST_CASE("invert_mean: examples and errors") {
    CHECK(stats::invert_mean(0.0, 7) == 0.0);
    CHECK(stats::invert_mean(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    const double mean = stats::mean_clipped({12.3, 16});
    CHECK(stats::invert_mean(mean, 16) == doctest::Approx(12.3).epsilon(1e-7));

    CHECK_THROWS_AS(stats::invert_mean(-0.1, 4), std::domain_error);
    CHECK_THROWS_AS(stats::invert_mean(1.0, 1), stats::SaturatedMeanError);
    CHECK_THROWS_AS(stats::invert_mean(7.2, 7), stats::SaturatedMeanError);
    CHECK_THROWS_AS(stats::invert_mean(0.5, 0), std::domain_error);
}

TEST_CASE("invert_mean round-trips mean_clipped") {
    for (int cap : {1, 2, 7, 16, 4000}) {
        for (double frac : {1e-6, 1e-3, 0.1, 0.5, 0.9, 1.5, 3.0, 10.0}) {
            const double theta = frac * cap;
            if (theta < 1e-9) continue;
            const double mean = stats::mean_clipped({theta, cap});
            if (mean >= cap) continue; // saturated beyond double resolution
            const double back = stats::invert_mean(mean, cap);
            INFO("L=", cap, " theta=", theta);
            CHECK(rel_err(back, theta) < 1e-8);
        }
    }
}

TEST_CASE("dynamic_range: low-flux edge, report invariants, unreachable floor") {
    const auto cis = stats::dynamic_range(4000, 1, 0.0);
    // SNR ~ sqrt(theta) at low flux, so the 0 dB floor is crossed near theta = 1.
    CHECK(cis.theta_min > 0.5);
    CHECK(cis.theta_min < 2.0);
    CHECK(cis.theta_min <= cis.theta_max);
    CHECK(cis.ratio_db ==
          doctest::Approx(20.0 * std::log10(cis.theta_max / cis.theta_min)).epsilon(1e-12));

    const auto qis1 = stats::dynamic_range(1, 4000, 0.0);
    CHECK(qis1.ratio_db > cis.ratio_db);

    CHECK_THROWS_AS(stats::dynamic_range(1, 1000, std::numeric_limits<double>::infinity()),
                    stats::FloorUnreachableError);
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(stats::mean_clipped({-1.0, 4}), std::domain_error);
    CHECK_THROWS_AS(stats::mean_clipped({std::numeric_limits<double>::infinity(), 4}),
                    std::domain_error);
    CHECK_THROWS_AS(stats::var_clipped({1.0, 0}), std::domain_error);
    CHECK_THROWS_AS(stats::dynamic_range(0, 1, 0.0), std::domain_error);
    CHECK_THROWS_AS(stats::dynamic_range(1, 0, 0.0), std::domain_error);
}

TEST_SUITE_END();
