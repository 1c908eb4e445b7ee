#include <doctest.h>

#include <cmath>
#include <limits>

#include "qis/metrics.hpp"
#include "qis/stats.hpp"

using namespace qis;

namespace {

DisplayImage constant_image(int w, int h, std::uint8_t v) {
    DisplayImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, v);
    return img;
}

// First/last axis index with a finite row value at or above the floor.
std::pair<int, int> floor_span(const std::vector<double>& row, double floor_db) {
    int first = -1, last = -1;
    for (int i = 0; i < static_cast<int>(row.size()); ++i) {
        if (std::isfinite(row[i]) && row[i] >= floor_db) {
            if (first < 0) first = i;
            last = i;
        }
    }
    return {first, last};
}

} // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("psnr: identical, maximal error, and constant offset") {
    const auto a = constant_image(16, 16, 100);
    CHECK(metrics::psnr(a, a) == std::numeric_limits<double>::infinity());

    const auto zeros = constant_image(8, 8, 0);
    const auto full = constant_image(8, 8, 255);
    CHECK(metrics::psnr(zeros, full) == doctest::Approx(0.0).epsilon(1e-12));

    // +16 offset: MSE = 256 -> 10 log10(255^2/256) = 24.0484 dB
    auto ref = constant_image(10, 10, 60);
    auto off = constant_image(10, 10, 76);
    CHECK(metrics::psnr(ref, off) ==
          doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 256.0)).epsilon(1e-12));

    // symmetry
    CHECK(metrics::psnr(ref, off) == metrics::psnr(off, ref));
}

TEST_CASE("psnr: dimension mismatch") {
    CHECK_THROWS_AS(metrics::psnr(constant_image(4, 4, 0), constant_image(4, 5, 0)),
                    std::invalid_argument);
}

TEST_CASE("default theta axis is strictly increasing over [1e-2, 1e6]") {
    const auto axis = metrics::default_theta_axis();
    CHECK(axis.size() == 200);
    CHECK(axis.front() == doctest::Approx(1e-2).epsilon(1e-12));
    CHECK(axis.back() == doctest::Approx(1e6).epsilon(1e-12));
    for (std::size_t i = 1; i < axis.size(); ++i) CHECK(axis[i] > axis[i - 1]);
}

TEST_CASE("snr_curve: spot values") {
    // In the sqrt(theta) regime the CIS row reads 10 log10(theta).
    const std::vector<double> axis = {std::log(2.0), 100.0};
    const auto curve = metrics::snr_curve({{4000, 1, "cis"}, {1, 1, "bit"}}, axis);
    REQUIRE(curve.rows.size() == 2);
    CHECK(curve.rows[0][1] == doctest::Approx(20.0).epsilon(1e-9));

    // L = 1, T = 1 at theta = ln 2: closed form 20 log10(ln 2)
    CHECK(curve.rows[1][0] == doctest::Approx(20.0 * std::log10(std::log(2.0))).epsilon(1e-12));
}

TEST_CASE("snr_curve: equal-illumination comparison and sentinels") {
    const auto axis = metrics::default_theta_axis();
    const auto curve =
        metrics::snr_curve({{4000, 1, "cis"}, {1, 4000, "qis1b"}, {1, 1, "bit_single"}}, axis);

    // Where the per-frame variance underflows entirely the row holds the NaN
    // sentinel: a single-frame 1-bit sensor at theta = 1e6.
    CHECK(std::isnan(curve.rows[2].back()));

    // The 0 dB span of the aggregated single-bit sensor extends past the CIS
    // span on the high side.
    const auto cis_span = floor_span(curve.rows[0], 0.0);
    const auto qis_span = floor_span(curve.rows[1], 0.0);
    REQUIRE(cis_span.first >= 0);
    REQUIRE(qis_span.first >= 0);
    CHECK(qis_span.second > cis_span.second);

    // Rows are finite strictly inside the dynamic range at a 0 dB floor.
    for (int i = cis_span.first; i <= cis_span.second; ++i) {
        CHECK(std::isfinite(curve.rows[0][i]));
    }
}

TEST_CASE("snr_curve: input validation") {
    const auto axis = metrics::default_theta_axis();
    CHECK_THROWS_AS(metrics::snr_curve({}, axis), std::invalid_argument);
    CHECK_THROWS_AS(metrics::snr_curve({{1, 1, "x"}}, {}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::snr_curve({{1, 1, "x"}}, {2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(metrics::snr_curve({{0, 1, "x"}}, axis), std::invalid_argument);
}

TEST_CASE("combined_snr_row: single exposure equals its own curve row") {
    const auto axis = metrics::default_theta_axis();
    const auto curve = metrics::snr_curve({{1, 4000, "qis"}}, axis);
    const auto combined = metrics::combined_snr_row({{1, 4000, 1.0}}, axis);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (std::isnan(curve.rows[0][i])) {
            CHECK(std::isnan(combined[i]));
        } else {
            CHECK(combined[i] == doctest::Approx(curve.rows[0][i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("combined_snr_row: duplicate exposure adds 3.01 dB") {
    const auto axis = metrics::default_theta_axis();
    const auto one = metrics::combined_snr_row({{4000, 1, 1.0}}, axis);
    const auto two = metrics::combined_snr_row({{4000, 1, 1.0}, {4000, 1, 1.0}}, axis);
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (std::isnan(one[i])) continue;
        CHECK(two[i] == doctest::Approx(one[i] + 10.0 * std::log10(2.0)).epsilon(1e-9));
    }
}

TEST_CASE("combined_snr_row dominates every constituent") {
    const auto axis = metrics::default_theta_axis();
    const std::vector<metrics::BracketExposure> bracket = {
        {4000, 1, 1.0}, {4000, 1, 4.0}, {4000, 1, 16.0}, {4000, 1, 64.0}, {4000, 1, 256.0}};
    const auto combined = metrics::combined_snr_row(bracket, axis);
    for (const auto& e : bracket) {
        const auto single = metrics::combined_snr_row({e}, axis);
        for (std::size_t i = 0; i < axis.size(); ++i) {
            if (std::isnan(single[i])) continue;
            REQUIRE(std::isfinite(combined[i]));
            CHECK(combined[i] >= single[i] - 1e-9);
        }
    }
}

TEST_CASE("combined_snr_row: validation") {
    const auto axis = metrics::default_theta_axis();
    CHECK_THROWS_AS(metrics::combined_snr_row({}, axis), std::invalid_argument);
    CHECK_THROWS_AS(metrics::combined_snr_row({{1, 1, 0.0}}, axis), std::invalid_argument);
}

TEST_SUITE_END();
