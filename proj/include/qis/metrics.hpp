#pragma once

#include <string>
#include <vector>

#include "qis/image_types.hpp"

namespace qis::metrics {

/// One sensor configuration evaluated along the illumination axis. frames is
/// the total number of aggregated draws per axis unit (T * K^2), so sensors
/// are compared at equal illumination.
struct SnrCurveConfig {
    int capacity = 1;
    long frames = 1;
    std::string label;
};

/// SNR_H in dB per config over a shared log-spaced theta axis; undefined
/// points carry a quiet-NaN sentinel.
struct SnrCurve {
    std::vector<double> theta_axis;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows; ///< rows[r][i] matches labels[r], theta_axis[i]
};

/// 200 log-spaced points over [1e-2, 1e6].
std::vector<double> default_theta_axis();

/// 10 * log10(255^2 / MSE); +infinity when the images are identical.
double psnr(const DisplayImage& reference, const DisplayImage& test);

SnrCurve snr_curve(const std::vector<SnrCurveConfig>& configs,
                   const std::vector<double>& theta_axis);

/// One exposure of a multi-capture bracket: the sensor (capacity, frames) plus
/// a relative exposure-time scale applied to the axis illumination.
struct BracketExposure {
    int capacity = 1;
    long frames = 1;
    double tau_scale = 1.0;
};

/// Combined SNR_H of a bracket under inverse-variance fusion:
/// 10 * log10(sum of squared linear SNRs) over non-saturated exposures.
std::vector<double> combined_snr_row(const std::vector<BracketExposure>& exposures,
                                     const std::vector<double>& theta_axis);

} // namespace qis::metrics
