#include "qis/hdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "qis/stats.hpp"

namespace qis::hdr {
namespace {

std::vector<double> gaussian_taps(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double total = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-0.5 * (d / sigma) * (d / sigma));
        taps[d + radius] = w;
        total += w;
    }
    for (double& w : taps) w /= total;
    return taps;
}

// Mirror index into [0, n): ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

RealImage separable_gaussian(const RealImage& in, double sigma) {
    const std::vector<double> taps = gaussian_taps(sigma);
    const int radius = static_cast<int>(taps.size() / 2);

    RealImage tmp{in.width, in.height, std::vector<double>(in.values.size())};
    RealImage out{in.width, in.height, std::vector<double>(in.values.size())};

#pragma omp parallel for
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                acc += taps[d + radius] * in.at(reflect(x + d, in.width), y);
            }
            tmp.at(x, y) = acc;
        }
    }
#pragma omp parallel for
    for (int y = 0; y < in.height; ++y) {
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                acc += taps[d + radius] * tmp.at(x, reflect(y + d, in.height));
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

// Linear-scale SNR of one exposure evaluated at a scene flux; 0 where the
// exposure carries no information (saturated, underflowed, or zero rate).
double exposure_snr_linear(const sensor::ExposureConfig& cfg, double flux,
                           FusionConfig::Weighting weighting) {
    const double k2 = static_cast<double>(cfg.oversample) * cfg.oversample;
    const double theta = cfg.tau * flux / k2;
    if (!(theta > 0.0) || !std::isfinite(theta)) return 0.0;
    try {
        const double lin = stats::snr_h_linear({{theta, cfg.capacity}, cfg.frames * static_cast<long>(k2)});
        return weighting == FusionConfig::Weighting::kSnrSquared ? lin * lin : lin;
    } catch (const stats::UndefinedSnrError&) {
        return 0.0;
    }
}

// Memoized inversion for integral sums: one exposure"s distinct sum values are
// few compared to its pixel count.
class InversionCache {
public:
    InversionCache(long denom, int capacity, double margin)
        : denom_(static_cast<double>(denom)), capacity_(capacity), margin_(margin) {}

    // Returns theta_hat, or a negative sentinel when the mean is saturated.
    double theta_for_sum(std::uint64_t sum) {
        if (sum > kMaxTableSum) return invert(static_cast<double>(sum) / denom_);
        if (sum >= table_.size()) table_.resize(sum + 1, kUnset);
        double& slot = table_[sum];
        if (slot == kUnset) slot = invert(static_cast<double>(sum) / denom_);
        return slot;
    }

    double invert(double mean) const {
        if (mean >= margin_ * capacity_) return -1.0;
        if (mean == 0.0) return 0.0;
        return stats::invert_mean(mean, capacity_);
    }

private:
    static constexpr double kUnset = -2.0;
    static constexpr std::uint64_t kMaxTableSum = 1 << 24;
    double denom_;
    int capacity_;
    double margin_;
    std::vector<double> table_;
};

} // namespace

void ExposureStack::validate() const {
    if (entries.empty()) throw std::invalid_argument("ExposureStack: at least one exposure required");
    for (const auto& e : entries) {
        e.config.validate();
        if (e.width != entries.front().width || e.height != entries.front().height) {
            throw std::invalid_argument("ExposureStack: mixed dimensions");
        }
        if (e.sum.size() != static_cast<std::size_t>(e.width) * e.height) {
            throw std::invalid_argument("ExposureStack: sum size does not match dimensions");
        }
    }
}

void FusionConfig::validate() const {
    if (max_iters < 1) throw std::domain_error("FusionConfig: max_iters must be >= 1");
    if (!(rel_tol > 0.0) || !(rel_tol < 1.0)) throw std::domain_error("FusionConfig: rel_tol must be in (0,1)");
    if (!(denoise_sigma >= 0.0)) throw std::domain_error("FusionConfig: denoise_sigma must be >= 0");
    if (!(saturation_margin > 0.0) || !(saturation_margin < 1.0)) {
        throw std::domain_error("FusionConfig: saturation_margin must be in (0,1)");
    }
}

RealImage denoise(const sensor::SumImage& image, double sigma) {
    RealImage real{image.width, image.height, std::vector<double>(image.sum.size())};
    for (std::size_t i = 0; i < image.sum.size(); ++i) real.values[i] = static_cast<double>(image.sum[i]);
    return denoise(real, sigma);
}

RealImage denoise(const RealImage& image, double sigma) {
    if (!(sigma >= 0.0)) throw std::domain_error("denoise: sigma must be >= 0");
    if (sigma == 0.0) return image;
    return separable_gaussian(image, sigma);
}

ExposureEstimate estimate_exposure(const sensor::SumImage& image, double saturation_margin) {
    const long denom = image.config.draws_per_pixel();
    const double k2 = static_cast<double>(image.config.oversample) * image.config.oversample;
    const double flux_scale = k2 / image.config.tau;

    ExposureEstimate est;
    est.width = image.width;
    est.height = image.height;
    est.config = image.config;
    est.flux.assign(image.sum.size(), 0.0);
    est.saturated.assign(image.sum.size(), 0);

    InversionCache cache(denom, image.config.capacity, saturation_margin);
    for (std::size_t i = 0; i < image.sum.size(); ++i) {
        const double theta = cache.theta_for_sum(image.sum[i]);
        if (theta < 0.0) {
            est.saturated[i] = 1;
        } else {
            est.flux[i] = theta * flux_scale;
        }
    }
    return est;
}

ExposureEstimate estimate_exposure(const RealImage& values, const sensor::ExposureConfig& config,
                                   double saturation_margin) {
    config.validate();
    const double denom = static_cast<double>(config.draws_per_pixel());
    const double k2 = static_cast<double>(config.oversample) * config.oversample;
    const double flux_scale = k2 / config.tau;

    ExposureEstimate est;
    est.width = values.width;
    est.height = values.height;
    est.config = config;
    est.flux.assign(values.values.size(), 0.0);
    est.saturated.assign(values.values.size(), 0);

    const std::int64_t n = static_cast<std::int64_t>(values.values.size());
#pragma omp parallel for schedule(dynamic, 1024)
    for (std::int64_t i = 0; i < n; ++i) {
        const double mean = values.values[i] / denom;
        if (mean >= saturation_margin * config.capacity) {
            est.saturated[i] = 1;
        } else if (mean > 0.0) {
            est.flux[i] = stats::invert_mean(mean, config.capacity) * flux_scale;
        }
    }
    return est;
}

HdrEstimate fuse(const ExposureStack& stack, const FusionConfig& config, FusionStats* stats_out) {
    stack.validate();
    config.validate();

    std::vector<ExposureEstimate> est;
    est.reserve(stack.entries.size());
    for (const auto& entry : stack.entries) {
        if (config.denoise_sigma > 0.0) {
            est.push_back(estimate_exposure(denoise(entry, config.denoise_sigma), entry.config,
                                            config.saturation_margin));
        } else {
            est.push_back(estimate_exposure(entry, config.saturation_margin));
        }
    }
    const int n_exp = static_cast<int>(est.size());

    // Fallback for pixels saturated everywhere: the saturation bound of the
    // exposure with the smallest per-jot-frame exposure (it saturates last).
    int shortest = 0;
    for (int i = 1; i < n_exp; ++i) {
        const auto& a = stack.entries[i].config;
        const auto& b = stack.entries[shortest].config;
        const double ea = a.tau / (static_cast<double>(a.oversample) * a.oversample);
        const double eb = b.tau / (static_cast<double>(b.oversample) * b.oversample);
        if (ea < eb) shortest = i;
    }
    const auto& sh = stack.entries[shortest].config;
    const double sat_bound_flux =
        stats::invert_mean(config.saturation_margin * sh.capacity, sh.capacity) *
        (static_cast<double>(sh.oversample) * sh.oversample) / sh.tau;

    HdrEstimate out;
    out.width = stack.entries.front().width;
    out.height = stack.entries.front().height;
    const std::size_t npix = static_cast<std::size_t>(out.width) * out.height;
    out.flux_hat.assign(npix, 0.0);
    out.weight_sum.assign(npix, 0.0);

    long converged = 0;
    long saturated_everywhere = 0;

#pragma omp parallel for schedule(dynamic, 256) reduction(+ : converged, saturated_everywhere)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(npix); ++i) {
        bool any_valid = false;
        for (int e = 0; e < n_exp; ++e) {
            if (!est[e].saturated[i]) { any_valid = true; break; }
        }
        if (!any_valid) {
            out.flux_hat[i] = sat_bound_flux;
            out.weight_sum[i] = 0.0;
            ++saturated_everywhere;
            continue;
        }

        // Start from the valid exposure with the best SNR at its own estimate;
        // ties go to the exposure with more headroom (T*K^2*L), then index.
        int best = -1;
        double best_snr = -1.0;
        double best_headroom = -1.0;
        for (int e = 0; e < n_exp; ++e) {
            if (est[e].saturated[i]) continue;
            const auto& cfg = est[e].config;
            const double snr = exposure_snr_linear(cfg, est[e].flux[i], FusionConfig::Weighting::kSnr);
            const double headroom = static_cast<double>(cfg.draws_per_pixel()) * cfg.capacity;
            if (best < 0 || snr > best_snr ||
                (snr == best_snr && headroom > best_headroom)) {
                best = e;
                best_snr = snr;
                best_headroom = headroom;
            }
        }

        double flux = est[best].flux[i];
        double weight_total = 0.0;
        bool done = false;
        for (int iter = 0; iter < config.max_iters && !done; ++iter) {
            double wsum = 0.0;
            double wflux = 0.0;
            double first_value = 0.0;
            bool all_equal = true;
            bool any = false;
            for (int e = 0; e < n_exp; ++e) {
                if (est[e].saturated[i]) continue; // saturated exposures get exactly zero weight
                const double w = exposure_snr_linear(est[e].config, flux, config.weighting);
                if (w > 0.0) {
                    if (!any) {
                        first_value = est[e].flux[i];
                        any = true;
                    } else if (est[e].flux[i] != first_value) {
                        all_equal = false;
                    }
                }
                wsum += w;
                wflux += w * est[e].flux[i];
            }
            if (wsum <= 0.0) {
                // No exposure carries information at this flux (all dark or
                // beyond representable SNR); keep the current value.
                weight_total = 0.0;
                done = true;
                break;
            }
            // Degenerate weighted means (single contributor, duplicates) are
            // the value itself; dividing back out would cost an ulp.
            const double next = all_equal ? first_value : wflux / wsum;
            weight_total = wsum;
            const double denom = std::max({std::abs(flux), std::abs(next), 1e-300});
            if (std::abs(next - flux) <= config.rel_tol * denom) {
                flux = next;
                done = true;
                break;
            }
            flux = next;
        }
        if (done) ++converged;
        out.flux_hat[i] = flux;
        out.weight_sum[i] = weight_total;
    }

    if (stats_out) {
        stats_out->total_pixels = static_cast<long>(npix);
        stats_out->converged_pixels = converged;
        stats_out->saturated_pixels = saturated_everywhere;
    }
    return out;
}

DisplayImage tone_map(const HdrEstimate& estimate, double c_max, double gamma) {
    if (!(c_max > 0.0)) throw std::domain_error("tone_map: c_max must be > 0");
    if (!(gamma > 0.0)) throw std::domain_error("tone_map: gamma must be > 0");

    DisplayImage img;
    img.width = estimate.width;
    img.height = estimate.height;
    img.pixels.resize(estimate.flux_hat.size());
    const double inv_gamma = 1.0 / gamma;
    for (std::size_t i = 0; i < estimate.flux_hat.size(); ++i) {
        const double t = std::clamp(estimate.flux_hat[i] / c_max, 0.0, 1.0);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::pow(t, inv_gamma)));
    }
    return img;
}

} // namespace qis::hdr
