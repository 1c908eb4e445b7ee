#pragma once

#include <stdexcept>

namespace qis::stats {

/// Parameters of the clipped Poisson sensor response: photon arrivals
/// X ~ Poisson(theta) are observed as B = min(X, capacity).
struct ClippedPoissonParams {
    double theta = 0.0; ///< expected photon count per frame (theta = tau * c)
    int capacity = 1;   ///< counter capacity L >= 1

    void validate() const;
};

struct SnrQuery {
    ClippedPoissonParams params;
    long frames = 1; ///< number of summed frames T >= 1

    void validate() const;
};

struct DynamicRangeReport {
    double theta_min = 0.0;     ///< lowest exposure meeting the SNR floor
    double theta_max = 0.0;     ///< highest exposure meeting the SNR floor
    double ratio_db = 0.0;      ///< 20 * log10(theta_max / theta_min)
    double snr_floor_db = 0.0;
};

/// Requested inversion of a mean at or beyond the clipping level.
struct SaturatedMeanError : std::domain_error {
    using std::domain_error::domain_error;
};

/// SNR requested where it is undefined (zero exposure or fully saturated).
struct UndefinedSnrError : std::domain_error {
    using std::domain_error::domain_error;
};

/// No exposure level reaches the requested SNR floor.
struct FloorUnreachableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Poisson CDF partial sum: psi_q(s) = sum_{k=0}^{q-1} s^k e^{-s} / k!.
/// Empty sum for q = 0.
double psi(long q, double s);

/// Mean of B = min(X, L): theta * psi_{L-1}(theta) + L * (1 - psi_L(theta)).
double mean_clipped(const ClippedPoissonParams& params);

/// Variance of B: L^2 - sum_{n=0}^{L-1} (2n+1) psi_{n+1}(theta) - mean^2.
double var_clipped(const ClippedPoissonParams& params);

/// Derivative of the clipped mean with respect to theta; equals e^{-theta}
/// for L = 1 and psi_{L-1} - theta pmf(L-2) + L pmf(L-1) for L >= 2.
double dmean_dtheta(const ClippedPoissonParams& params);

/// Exposure-referred SNR of a T-frame sum, linear scale:
/// sqrt(T) * theta * dmean/dtheta / sigma_B.
double snr_h_linear(const SnrQuery& query);

/// Exposure-referred SNR in decibels (20 * log10 of the linear value).
double snr_h(const SnrQuery& query);

/// Unique theta >= 0 with mean_clipped(theta, capacity) == observed_mean.
/// Bracketed bisection on log(theta) followed by Newton refinement.
double invert_mean(double observed_mean, int capacity);

/// Exposure interval over which snr_h stays at or above the floor.
DynamicRangeReport dynamic_range(int capacity, long frames, double snr_floor_db);

} // namespace qis::stats
