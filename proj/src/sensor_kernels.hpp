#pragma once

#include <cstdint>

#include "qis/philox.hpp"

namespace qis::sensor::detail {

// Sampling below this rate inverts a per-pixel CDF table; above it, a scalar
// transformed-rejection sampler takes over.
inline constexpr double kInversionCutoff = 30.0;

// Upper bound on inversion-table length: cutoff + 13*sqrt(cutoff) + 45 plus slack.
inline constexpr int kMaxCdfLen = 192;

// Everything a capture kernel needs for one row of pixels. The CDF tables are
// built by shared (single-TU) code so scalar and SIMD backends compare against
// bit-identical values; kernels themselves perform no float arithmetic beyond
// comparisons on the inversion path.
struct CaptureJob {
    const double* theta = nullptr;   // per-pixel jot rate, row slice
    std::uint64_t* sums = nullptr;   // row output
    int width = 0;
    std::uint32_t pixel_base = 0;    // global pixel index of x = 0
    std::uint32_t frames = 0;
    std::uint32_t jots = 0;          // K * K
    int capacity = 0;
    rng::Philox4x32::Key key{};
};

using CaptureRowFn = void (*)(const CaptureJob&);

void capture_row_scalar(const CaptureJob& job);
#if defined(QIS_HAVE_AVX2_KERNEL)
void capture_row_avx2(const CaptureJob& job);
bool cpu_supports_avx2();
#endif

// Fills cdf[k] = P(X <= k) for X ~ Poisson(theta) until either the capacity is
// reached (further counts clip anyway) or the remaining mass is below what any
// uniform draw can address. Returns the table length. Defined in sensor.cpp so
// every backend compares against the exact same values.
int build_inversion_cdf(double theta, int capacity, double* cdf);

// Clipped draw for the rejection path (theta >= kInversionCutoff); scalar and
// shared between backends.
std::uint64_t draw_clipped_ptrd(double theta, int capacity, std::uint32_t pixel,
                                std::uint32_t frame, std::uint32_t jot,
                                rng::Philox4x32::Key key);

// Scalar inversion draw against a prepared table; used by the scalar backend
// and by SIMD backends for loop tails.
inline std::uint32_t draw_from_cdf(const double* cdf, int len, std::uint32_t pixel,
                                   std::uint32_t frame, std::uint32_t jot,
                                   rng::Philox4x32::Key key) {
    const double u = rng::uniform(pixel, frame, jot, 0, key);
    std::uint32_t x = 0;
    while (x < static_cast<std::uint32_t>(len) && u > cdf[x]) ++x;
    return x;
}

} // namespace qis::sensor::detail
