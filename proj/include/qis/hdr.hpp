#pragma once

#include <cstdint>
#include <vector>

#include "qis/image_types.hpp"
#include "qis/sensor.hpp"

namespace qis::hdr {

/// Ordered multi-exposure input to fusion; every entry carries its own
/// ExposureConfig and all entries share scene dimensions.
struct ExposureStack {
    std::vector<sensor::SumImage> entries;

    void validate() const;
};

struct FusionConfig {
    int max_iters = 10;
    double rel_tol = 1e-4;
    double denoise_sigma = 0.0;        ///< 0 disables denoising
    double saturation_margin = 0.995;  ///< means >= margin * L are treated as saturated

    enum class Weighting {
        kSnrSquared, ///< weights proportional to linear SNR_H^2 (inverse variance)
        kSnr,        ///< weights proportional to linear SNR_H
    };
    Weighting weighting = Weighting::kSnrSquared;

    void validate() const;
};

/// Reconstructed flux map with per-pixel total fusion weight as confidence;
/// weight_sum is 0 only where every exposure was saturated or read zero.
struct HdrEstimate {
    int width = 0;
    int height = 0;
    std::vector<double> flux_hat;   ///< photons/second
    std::vector<double> weight_sum;
};

struct FusionStats {
    long total_pixels = 0;
    long converged_pixels = 0;  ///< relative change fell below rel_tol before max_iters
    long saturated_pixels = 0;  ///< no valid exposure at all
};

/// Separable Gaussian of standard deviation sigma (pixels), kernel truncated
/// at 3*sigma, reflected edges. sigma = 0 returns the values unchanged.
RealImage denoise(const sensor::SumImage& image, double sigma);
RealImage denoise(const RealImage& image, double sigma);

/// Per-exposure inversion of summed counts back to scene flux.
struct ExposureEstimate {
    int width = 0;
    int height = 0;
    std::vector<double> flux;             ///< photons/second; 0 where dark
    std::vector<std::uint8_t> saturated;  ///< 1 where mean >= margin * capacity
    sensor::ExposureConfig config;
};

ExposureEstimate estimate_exposure(const sensor::SumImage& image,
                                   double saturation_margin = 0.995);
ExposureEstimate estimate_exposure(const RealImage& values, const sensor::ExposureConfig& config,
                                   double saturation_margin = 0.995);

/// Iterative fusion: per pixel, exposures are combined with weights
/// proportional to their exposure-referred SNR at the current flux estimate,
/// starting from the exposure whose own estimate has the highest SNR.
HdrEstimate fuse(const ExposureStack& stack, const FusionConfig& config,
                 FusionStats* stats = nullptr);

/// display = round(255 * clamp(flux/c_max, 0, 1)^(1/gamma))
DisplayImage tone_map(const HdrEstimate& estimate, double c_max, double gamma = 2.2);

} // namespace qis::hdr
