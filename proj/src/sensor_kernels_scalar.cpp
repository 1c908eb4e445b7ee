#include "sensor_kernels.hpp"

namespace qis::sensor::detail {

void capture_row_scalar(const CaptureJob& job) {
    double cdf[kMaxCdfLen];
    for (int x = 0; x < job.width; ++x) {
        const double theta = job.theta[x];
        if (theta == 0.0) {
            job.sums[x] = 0;
            continue;
        }
        const std::uint32_t pixel = job.pixel_base + static_cast<std::uint32_t>(x);
        std::uint64_t acc = 0;
        if (theta < kInversionCutoff) {
            const int len = build_inversion_cdf(theta, job.capacity, cdf);
            for (std::uint32_t jot = 0; jot < job.jots; ++jot) {
                for (std::uint32_t frame = 0; frame < job.frames; ++frame) {
                    acc += draw_from_cdf(cdf, len, pixel, frame, jot, job.key);
                }
            }
        } else {
            for (std::uint32_t jot = 0; jot < job.jots; ++jot) {
                for (std::uint32_t frame = 0; frame < job.frames; ++frame) {
                    acc += draw_clipped_ptrd(theta, job.capacity, pixel, frame, jot, job.key);
                }
            }
        }
        job.sums[x] = acc;
    }
}

} // namespace qis::sensor::detail
