#include "qis/sensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "sensor_kernels.hpp"

namespace qis::sensor {
namespace detail {

int build_inversion_cdf(double theta, int capacity, double* cdf) {
    // Stops once the remaining mass (< 1e-18) is below the resolution of any
    // uniform draw (2^-53), so a walk can never run off the table.
    double p = std::exp(-theta);
    double s = p;
    cdf[0] = s;
    int len = 1;
    while (len < capacity && len < kMaxCdfLen && s < 1.0 - 1e-18) {
        p *= theta / static_cast<double>(len);
        s += p;
        cdf[len++] = s;
    }
    return len;
}

namespace {

// Hormann's PTRD transformed-rejection Poisson sampler; exact for mean >= 10.
// Uniforms are indexed consecutively within the draw's counter stream.
struct PtrdParams {
    double smu, b, a, inv_alpha, v_r;
};

PtrdParams make_ptrd(double mean) {
    PtrdParams p;
    p.smu = std::sqrt(mean);
    p.b = 0.931 + 2.53 * p.smu;
    p.a = -0.059 + 0.02483 * p.b;
    p.inv_alpha = 1.1239 + 1.1328 / (p.b - 3.4);
    p.v_r = 0.9277 - 3.6224 / (p.b - 2.0);
    return p;
}

long long ptrd_generate(const PtrdParams& pp, double mean, std::uint32_t pixel,
                        std::uint32_t frame, std::uint32_t jot, rng::Philox4x32::Key key) {
    std::uint32_t n = 0;
    const auto next_u = [&] { return rng::uniform(pixel, frame, jot, n++, key); };
    constexpr double kLogSqrt2Pi = 0.91893853320467267;

    for (;;) {
        double u;
        double v = next_u();
        if (v <= 0.86 * pp.v_r) {
            u = v / pp.v_r - 0.43;
            return static_cast<long long>(
                std::floor((2.0 * pp.a / (0.5 - std::abs(u)) + pp.b) * u + mean + 0.445));
        }

        if (v >= pp.v_r) {
            u = next_u() - 0.5;
        } else {
            u = v / pp.v_r - 0.93;
            u = (u < 0.0 ? -0.5 : 0.5) - u;
            v = next_u() * pp.v_r;
        }

        const double us = 0.5 - std::abs(u);
        if (us < 0.013 && v > us) continue;

        const double k = std::floor((2.0 * pp.a / us + pp.b) * u + mean + 0.445);
        v = v * pp.inv_alpha / (pp.a / (us * us) + pp.b);

        if (k >= 10.0) {
            if (std::log(v * pp.smu) <=
                (k + 0.5) * std::log(mean / k) - mean - kLogSqrt2Pi + k -
                    (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * k * k)) / (k * k)) / k) {
                return static_cast<long long>(k);
            }
        } else if (k >= 0.0) {
            if (std::log(v) <= k * std::log(mean) - mean - std::lgamma(k + 1.0)) {
                return static_cast<long long>(k);
            }
        }
    }
}

} // namespace

std::uint64_t draw_clipped_ptrd(double theta, int capacity, std::uint32_t pixel,
                                std::uint32_t frame, std::uint32_t jot,
                                rng::Philox4x32::Key key) {
    const PtrdParams pp = make_ptrd(theta);
    const long long k = ptrd_generate(pp, theta, pixel, frame, jot, key);
    if (k <= 0) return 0;
    return std::min<std::uint64_t>(static_cast<std::uint64_t>(k),
                                   static_cast<std::uint64_t>(capacity));
}

} // namespace detail

namespace {

std::atomic<CaptureBackend> g_backend{CaptureBackend::kAuto};

CaptureBackend resolve_backend() {
    CaptureBackend requested = g_backend.load(std::memory_order_relaxed);
    if (requested == CaptureBackend::kAuto) {
        if (const char* env = std::getenv("QIS_CAPTURE_BACKEND")) {
            if (std::strcmp(env, "scalar") == 0) requested = CaptureBackend::kScalar;
            if (std::strcmp(env, "avx2") == 0) requested = CaptureBackend::kAvx2;
        }
    }
#if defined(QIS_HAVE_AVX2_KERNEL)
    if (requested == CaptureBackend::kAuto) {
        return detail::cpu_supports_avx2() ? CaptureBackend::kAvx2 : CaptureBackend::kScalar;
    }
    if (requested == CaptureBackend::kAvx2 && !detail::cpu_supports_avx2()) {
        throw std::runtime_error("capture: AVX2 backend requested but not supported by this CPU");
    }
    return requested;
#else
    if (requested == CaptureBackend::kAvx2) {
        throw std::runtime_error("capture: AVX2 backend not built on this platform");
    }
    return CaptureBackend::kScalar;
#endif
}

detail::CaptureRowFn row_fn_for(CaptureBackend backend) {
#if defined(QIS_HAVE_AVX2_KERNEL)
    if (backend == CaptureBackend::kAvx2) return detail::capture_row_avx2;
#endif
    (void)backend;
    return detail::capture_row_scalar;
}

} // namespace

void PhotonFluxMap::validate() const {
    if (width < 1 || height < 1) {
        throw std::domain_error("PhotonFluxMap: dimensions must be >= 1");
    }
    if (flux.size() != static_cast<std::size_t>(width) * height) {
        throw std::domain_error("PhotonFluxMap: flux size does not match dimensions");
    }
    for (double c : flux) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw std::domain_error("PhotonFluxMap: flux values must be finite and >= 0");
        }
    }
}

void ExposureConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::domain_error("ExposureConfig: tau must be finite and > 0");
    }
    if (capacity < 1) throw std::domain_error("ExposureConfig: capacity must be >= 1");
    if (frames < 1) throw std::domain_error("ExposureConfig: frames must be >= 1");
    if (frames > 0xFFFFFFFFL) throw std::domain_error("ExposureConfig: frames exceeds counter width");
    if (oversample < 1) throw std::domain_error("ExposureConfig: oversample must be >= 1");
    if (oversample > 0xFFFF) throw std::domain_error("ExposureConfig: oversample too large");
}

void set_capture_backend(CaptureBackend backend) {
    g_backend.store(backend, std::memory_order_relaxed);
}

CaptureBackend capture_backend_in_use() { return resolve_backend(); }

const char* capture_backend_name() {
    switch (resolve_backend()) {
        case CaptureBackend::kAvx2: return "avx2";
        case CaptureBackend::kScalar: return "scalar";
        default: return "scalar";
    }
}

SumImage capture(const PhotonFluxMap& scene, const ExposureConfig& config) {
    scene.validate();
    config.validate();
    const std::size_t npix = static_cast<std::size_t>(scene.width) * scene.height;
    if (npix > 0xFFFFFFFFull) throw std::domain_error("capture: scene exceeds counter width");

    const double jot_scale = config.tau / (static_cast<double>(config.oversample) * config.oversample);
    std::vector<double> theta(npix);
    for (std::size_t i = 0; i < npix; ++i) {
        theta[i] = scene.flux[i] * jot_scale;
        if (!std::isfinite(theta[i])) {
            throw std::domain_error("capture: non-finite jot rate");
        }
    }

    SumImage out;
    out.width = scene.width;
    out.height = scene.height;
    out.sum.assign(npix, 0);
    out.config = config;

    const detail::CaptureRowFn row_fn = row_fn_for(resolve_backend());
    const rng::Philox4x32::Key key = rng::key_from_seed(config.seed);
    const std::uint32_t jots = static_cast<std::uint32_t>(config.oversample) * config.oversample;

#pragma omp parallel for schedule(dynamic, 4)
    for (int y = 0; y < scene.height; ++y) {
        detail::CaptureJob job;
        job.theta = theta.data() + static_cast<std::size_t>(y) * scene.width;
        job.sums = out.sum.data() + static_cast<std::size_t>(y) * scene.width;
        job.width = scene.width;
        job.pixel_base = static_cast<std::uint32_t>(static_cast<std::size_t>(y) * scene.width);
        job.frames = static_cast<std::uint32_t>(config.frames);
        job.jots = jots;
        job.capacity = config.capacity;
        job.key = key;
        row_fn(job);
    }
    return out;
}

SampleMoments replicate_moments(const ExposureConfig& config, double theta, long n_trials) {
    config.validate();
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
        throw std::domain_error("replicate_moments: theta must be finite and >= 0");
    }
    if (n_trials < 1) throw std::domain_error("replicate_moments: n_trials must be >= 1");
    if (n_trials > 0xFFFFFFFFL) throw std::domain_error("replicate_moments: n_trials exceeds counter width");

    const rng::Philox4x32::Key key = rng::key_from_seed(config.seed);
    double cdf[detail::kMaxCdfLen];
    const bool inversion = theta < detail::kInversionCutoff;
    const int len = inversion ? detail::build_inversion_cdf(theta, config.capacity, cdf) : 0;

    // Welford accumulation; trials are indexed as the pixel coordinate of the
    // counter so the stream is independent of any capture call.
    double mean = 0.0;
    double m2 = 0.0;
    for (long i = 0; i < n_trials; ++i) {
        const std::uint32_t pixel = static_cast<std::uint32_t>(i);
        double x;
        if (inversion) {
            x = static_cast<double>(detail::draw_from_cdf(cdf, len, pixel, 0, 0, key));
        } else {
            x = static_cast<double>(detail::draw_clipped_ptrd(theta, config.capacity, pixel, 0, 0, key));
        }
        const double delta = x - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (x - mean);
    }
    SampleMoments result;
    result.mean = mean;
    result.variance = n_trials > 1 ? m2 / static_cast<double>(n_trials - 1) : 0.0;
    return result;
}

} // namespace qis::sensor
