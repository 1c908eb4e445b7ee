#include "qis/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "qis/stats.hpp"

namespace qis::metrics {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_axis(const std::vector<double>& axis) {
    if (axis.empty()) throw std::invalid_argument("snr_curve: empty theta axis");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(axis[i] > 0.0) || !std::isfinite(axis[i])) {
            throw std::invalid_argument("snr_curve: theta axis must be positive and finite");
        }
        if (i > 0 && !(axis[i] > axis[i - 1])) {
            throw std::invalid_argument("snr_curve: theta axis must be strictly increasing");
        }
    }
}

} // namespace

std::vector<double> default_theta_axis() {
    const int n = 200;
    const double lo = std::log(1e-2);
    const double hi = std::log(1e6);
    std::vector<double> axis(n);
    for (int i = 0; i < n; ++i) {
        axis[i] = std::exp(lo + (hi - lo) * i / (n - 1));
    }
    return axis;
}

double psnr(const DisplayImage& reference, const DisplayImage& test) {
    if (reference.width != test.width || reference.height != test.height) {
        throw std::invalid_argument("psnr: image dimensions differ");
    }
    if (reference.pixels.empty()) throw std::invalid_argument("psnr: empty image");

    std::uint64_t sse = 0;
    for (std::size_t i = 0; i < reference.pixels.size(); ++i) {
        const std::int64_t d = static_cast<std::int64_t>(reference.pixels[i]) - test.pixels[i];
        sse += static_cast<std::uint64_t>(d * d);
    }
    if (sse == 0) return std::numeric_limits<double>::infinity();
    const double mse = static_cast<double>(sse) / static_cast<double>(reference.pixels.size());
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

SnrCurve snr_curve(const std::vector<SnrCurveConfig>& configs,
                   const std::vector<double>& theta_axis) {
    if (configs.empty()) throw std::invalid_argument("snr_curve: no configurations");
    check_axis(theta_axis);

    SnrCurve curve;
    curve.theta_axis = theta_axis;
    for (const auto& cfg : configs) {
        if (cfg.capacity < 1 || cfg.frames < 1) {
            throw std::invalid_argument("snr_curve: capacity and frames must be >= 1");
        }
        std::vector<double> row(theta_axis.size(), kNaN);
        for (std::size_t i = 0; i < theta_axis.size(); ++i) {
            const double theta_unit = theta_axis[i] / static_cast<double>(cfg.frames);
            try {
                row[i] = stats::snr_h({{theta_unit, cfg.capacity}, cfg.frames});
            } catch (const stats::UndefinedSnrError&) {
                // leave the sentinel
            }
        }
        curve.labels.push_back(cfg.label);
        curve.rows.push_back(std::move(row));
    }
    return curve;
}

std::vector<double> combined_snr_row(const std::vector<BracketExposure>& exposures,
                                     const std::vector<double>& theta_axis) {
    if (exposures.empty()) throw std::invalid_argument("combined_snr_row: no exposures");
    check_axis(theta_axis);
    for (const auto& e : exposures) {
        if (e.capacity < 1 || e.frames < 1 || !(e.tau_scale > 0.0)) {
            throw std::invalid_argument("combined_snr_row: invalid exposure");
        }
    }

    std::vector<double> row(theta_axis.size(), kNaN);
    for (std::size_t i = 0; i < theta_axis.size(); ++i) {
        double sum_sq = 0.0;
        for (const auto& e : exposures) {
            const double theta_unit = theta_axis[i] * e.tau_scale / static_cast<double>(e.frames);
            try {
                const double lin = stats::snr_h_linear({{theta_unit, e.capacity}, e.frames});
                sum_sq += lin * lin;
            } catch (const stats::UndefinedSnrError&) {
                // saturated or empty exposures contribute nothing
            }
        }
        if (sum_sq > 0.0) row[i] = 10.0 * std::log10(sum_sq);
    }
    return row;
}

} // namespace qis::metrics
