#pragma once

#include <cstdint>
#include <vector>

namespace qis::sensor {

/// Ground-truth scene: per-pixel photon flux in photons per second.
struct PhotonFluxMap {
    int width = 0;
    int height = 0;
    std::vector<double> flux; ///< row-major, photons/second

    void validate() const;
    double at(int x, int y) const { return flux[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return flux[static_cast<std::size_t>(y) * width + x]; }
};

/// One capture setting. Each scene pixel is covered by oversample x oversample
/// jots that split its flux evenly, so the per-jot per-frame rate is
/// tau * c / oversample^2.
struct ExposureConfig {
    double tau = 1.0;         ///< integration time per frame, seconds
    int capacity = 1;         ///< counter capacity L
    long frames = 1;          ///< frames summed, T
    int oversample = 1;       ///< K: K x K jots per scene pixel
    std::uint64_t seed = 0;   ///< RNG stream seed

    void validate() const;
    long draws_per_pixel() const { return frames * oversample * oversample; }
};

/// Per-pixel sum of clipped counts over all frames and jots of one exposure.
struct SumImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint64_t> sum;
    ExposureConfig config;

    std::uint64_t at(int x, int y) const { return sum[static_cast<std::size_t>(y) * width + x]; }
};

/// Monte-Carlo capture: per jot per frame, a Poisson(tau*c/K^2) draw clipped
/// at the capacity, accumulated at scene-pixel resolution. Deterministic for
/// a fixed seed regardless of thread count or SIMD backend.
SumImage capture(const PhotonFluxMap& scene, const ExposureConfig& config);

struct SampleMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Sample mean/variance of n_trials single-jot single-frame clipped draws at
/// rate theta, using the capacity and seed from config.
SampleMoments replicate_moments(const ExposureConfig& config, double theta, long n_trials);

enum class CaptureBackend {
    kAuto,   ///< pick the widest backend the CPU supports
    kScalar,
    kAvx2,
};

/// Process-wide backend override; kAuto restores runtime detection.
void set_capture_backend(CaptureBackend backend);

/// Backend that capture() will actually run with.
CaptureBackend capture_backend_in_use();
const char* capture_backend_name();

} // namespace qis::sensor
