#include "qis/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qis::stats {
namespace {

// ---------------------------------------------------------------------------
// Compensated double-double arithmetic.
//
// The variance formula subtracts numbers of size L^2 (1.6e7 for a 4000-e full
// well) from each other while the result must stay accurate to 1e-10 absolute,
// which is beyond plain 53-bit accumulation. A hi/lo pair carries ~106 bits
// through the sums; only +, -, * and / are needed. Transcendental seeds stay
// in plain double: their common scale error cancels when the mass window is
// renormalized below.
// ---------------------------------------------------------------------------
struct dd {
    double hi = 0.0;
    double lo = 0.0;
    dd() = default;
    constexpr dd(double h) : hi(h) {}
    constexpr dd(double h, double l) : hi(h), lo(l) {}
    double value() const { return hi + lo; }
};

inline dd two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline dd quick_two_sum(double a, double b) { // requires |a| >= |b|
    const double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_prod(double a, double b) {
    const double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd operator+(dd a, dd b) {
    const dd s = two_sum(a.hi, b.hi);
    return quick_two_sum(s.hi, s.lo + a.lo + b.lo);
}

inline dd operator-(dd a, dd b) {
    const dd s = two_sum(a.hi, -b.hi);
    return quick_two_sum(s.hi, s.lo + a.lo - b.lo);
}

inline dd operator*(dd a, dd b) {
    const dd p = two_prod(a.hi, b.hi);
    return quick_two_sum(p.hi, p.lo + a.hi * b.lo + a.lo * b.hi);
}

inline dd operator*(dd a, double b) {
    const dd p = two_prod(a.hi, b);
    return quick_two_sum(p.hi, p.lo + a.lo * b);
}

inline dd& operator+=(dd& a, dd b) {
    a = a + b;
    return a;
}

// Quotient of two doubles with the correction term retained.
inline dd div_dd(double a, double b) {
    const double q = a / b;
    return quick_two_sum(q, std::fma(-q, b, a) / b);
}

inline dd operator/(dd a, dd b) {
    const double q1 = a.hi / b.hi;
    dd r = a - b * q1;
    const double q2 = r.hi / b.hi;
    r = r - b * q2;
    const double q3 = r.hi / b.hi;
    return quick_two_sum(q1, q2) + dd(q3);
}

// ---------------------------------------------------------------------------
// Windowed Poisson mass evaluation.
//
// All but < 1e-28 of Poisson(theta) mass lies within 13*sqrt(theta)+45 of
// theta, so the O(L) pass over k is restricted to that window; the omitted
// tails are closed analytically (cdf = 0 to the left of it, 1 to the right).
// Window-edge pmf values stay above the double underflow threshold for any
// representable theta, so the recurrence can be seeded directly.
// ---------------------------------------------------------------------------
struct MassWindow {
    long lo = 0;
    long hi = 0;
};

MassWindow mass_window(double theta) {
    const double sd = std::sqrt(theta);
    const double lo = std::floor(theta - 13.0 * sd - 45.0);
    const double hi = std::ceil(theta + 13.0 * sd + 45.0);
    MassWindow w;
    w.lo = lo > 0.0 ? static_cast<long>(lo) : 0;
    w.hi = static_cast<long>(hi);
    return w;
}

double log_pmf(long k, double theta) {
    return -theta + static_cast<double>(k) * std::log(theta) - std::lgamma(static_cast<double>(k) + 1.0);
}

// Walks pmf(k) = pmf(k-1) * theta / k across the window from a single seed.
struct WindowWalk {
    double theta;
    long k;
    dd pmf;

    WindowWalk(double theta_, const MassWindow& w) : theta(theta_), k(w.lo) {
        pmf = dd(w.lo == 0 ? std::exp(-theta_) : std::exp(log_pmf(w.lo, theta_)));
    }

    void advance() {
        ++k;
        pmf = pmf * div_dd(theta, static_cast<double>(k));
    }
};

struct ClippedMoments {
    dd mean;
    dd variance;
    dd psi_cap_minus1;          // psi_{L-1}(theta) = P(X <= L-2)
    dd psi_cap;                 // psi_L(theta)     = P(X <= L-1)
    double pmf_cap_minus2 = 0.0;
    double pmf_cap_minus1 = 0.0;
    bool clipping_negligible = false;
};

// Single evaluation of the clipped-response moments via the closed-form cdf
// identities: one pass accumulates the normalization, a second accumulates
// the cdf and the (2n+1)-weighted sum. Past theta/L = 4 the second moment
// switches to direct pmf accumulation; the L^2 - sum form would cancel to
// noise there.
ClippedMoments clipped_moments(double theta, long cap) {
    ClippedMoments m;
    if (theta == 0.0) {
        m.psi_cap_minus1 = dd(cap >= 2 ? 1.0 : 0.0);
        m.psi_cap = dd(1.0);
        m.pmf_cap_minus2 = cap == 2 ? 1.0 : 0.0;
        m.pmf_cap_minus1 = cap == 1 ? 1.0 : 0.0;
        return m;
    }

    const MassWindow w = mass_window(theta);
    if (w.hi < cap) {
        // Clipping is beyond every non-negligible mass point: B == X.
        m.mean = dd(theta);
        m.variance = dd(theta);
        m.psi_cap_minus1 = dd(1.0);
        m.psi_cap = dd(1.0);
        m.clipping_negligible = true;
        return m;
    }

    dd total;
    for (WindowWalk walk(theta, w);; walk.advance()) {
        total += walk.pmf;
        if (walk.k == w.hi) break;
    }
    const dd inv_total = dd(1.0) / total;

    const bool direct_moments = theta > 4.0 * static_cast<double>(cap);
    dd cdf;
    dd weighted;       // sum_{n <= L-1} (2n+1) psi_{n+1}
    dd m1, m2;         // direct moments restricted to k < L
    dd cdf_cap_minus1; // P(X <= L-1); stays 0 if L-1 is left of the window

    for (WindowWalk walk(theta, w);; walk.advance()) {
        const long k = walk.k;
        const dd p = walk.pmf * inv_total;
        cdf += p;
        if (k == cap - 2) {
            m.psi_cap_minus1 = cdf;
            m.pmf_cap_minus2 = p.value();
        }
        if (k == cap - 1) {
            m.psi_cap = cdf;
            m.pmf_cap_minus1 = p.value();
            cdf_cap_minus1 = cdf;
        }
        if (direct_moments) {
            if (k < cap) {
                const double kd = static_cast<double>(k);
                m1 += p * kd;
                m2 += p * (kd * kd);
            }
        } else if (k <= cap - 1) {
            weighted += cdf * (2.0 * static_cast<double>(k) + 1.0);
        }
        if (k == w.hi) break;
    }

    const double capd = static_cast<double>(cap);
    if (direct_moments) {
        const dd q_ge_cap = dd(1.0) - cdf_cap_minus1;
        m.mean = m1 + q_ge_cap * capd;
        const dd second = m2 + q_ge_cap * (capd * capd);
        m.variance = second - m.mean * m.mean;
    } else {
        m.mean = m.psi_cap_minus1 * theta + (dd(1.0) - m.psi_cap) * capd;
        const dd second = dd(capd) * capd - weighted;
        m.variance = second - m.mean * m.mean;
    }
    return m;
}

// Slope of the clipped mean from already-computed window quantities,
// evaluating the two-branch derivative formula.
double slope_from(const ClippedMoments& m, double theta, long cap) {
    if (m.clipping_negligible) return 1.0;
    if (cap == 1) return m.pmf_cap_minus1; // psi_0 = 0; reduces to pmf(0) = e^{-theta}
    return std::clamp(m.psi_cap_minus1.value() - theta * m.pmf_cap_minus2 +
                          static_cast<double>(cap) * m.pmf_cap_minus1,
                      0.0, 1.0);
}

double snr_linear_from(const ClippedMoments& m, double theta, long cap, long frames) {
    if (m.clipping_negligible) {
        // variance == theta and unit slope: sqrt(T * theta)
        return std::sqrt(static_cast<double>(frames) * theta);
    }
    const double var = std::max(0.0, m.variance.value());
    const double sigma = std::sqrt(var);
    if (!(sigma > 1e-300)) {
        throw UndefinedSnrError("snr_h: sensor fully saturated (sigma below floor)");
    }
    const double lin = std::sqrt(static_cast<double>(frames)) * theta * slope_from(m, theta, cap) / sigma;
    if (!(lin > 0.0) || !std::isfinite(lin)) {
        throw UndefinedSnrError("snr_h: signal term underflows");
    }
    return lin;
}

} // namespace

void ClippedPoissonParams::validate() const {
    if (!(theta >= 0.0) || !std::isfinite(theta)) {
        throw std::domain_error("ClippedPoissonParams: theta must be finite and >= 0");
    }
    if (capacity < 1) {
        throw std::domain_error("ClippedPoissonParams: capacity must be >= 1");
    }
}

void SnrQuery::validate() const {
    params.validate();
    if (frames < 1) {
        throw std::domain_error("SnrQuery: frames must be >= 1");
    }
}

double psi(long q, double s) {
    if (q < 0) throw std::domain_error("psi: q must be >= 0");
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::domain_error("psi: s must be finite and >= 0");
    if (q == 0) return 0.0;
    if (s == 0.0) return 1.0;

    const MassWindow w = mass_window(s);
    const long kq = q - 1; // psi_q(s) = P(X <= q-1)
    if (kq > w.hi) return 1.0;
    if (kq < w.lo) return 0.0;

    dd total;
    for (WindowWalk walk(s, w);; walk.advance()) {
        total += walk.pmf;
        if (walk.k == w.hi) break;
    }
    const dd inv_total = dd(1.0) / total;
    dd cdf;
    for (WindowWalk walk(s, w);; walk.advance()) {
        cdf += walk.pmf * inv_total;
        if (walk.k == kq) break;
    }
    return std::clamp(cdf.value(), 0.0, 1.0);
}

double mean_clipped(const ClippedPoissonParams& params) {
    params.validate();
    if (params.theta == 0.0) return 0.0;
    const ClippedMoments m = clipped_moments(params.theta, params.capacity);
    return std::clamp(m.mean.value(), 0.0, std::min(params.theta, static_cast<double>(params.capacity)));
}

double var_clipped(const ClippedPoissonParams& params) {
    params.validate();
    if (params.theta == 0.0) return 0.0;
    const ClippedMoments m = clipped_moments(params.theta, params.capacity);
    double var = m.variance.value();
    if (var < 0.0) {
        // Cancellation residue only; anything larger would be a defect.
        if (var < -1e-9) throw std::runtime_error("var_clipped: negative variance beyond tolerance");
        var = 0.0;
    }
    return var;
}

double dmean_dtheta(const ClippedPoissonParams& params) {
    params.validate();
    if (params.capacity == 1) return std::exp(-params.theta);
    if (params.theta == 0.0) return 1.0;
    const ClippedMoments m = clipped_moments(params.theta, params.capacity);
    return slope_from(m, params.theta, params.capacity);
}

double snr_h_linear(const SnrQuery& query) {
    query.validate();
    const double theta = query.params.theta;
    if (theta == 0.0) throw UndefinedSnrError("snr_h: undefined at theta = 0");
    const ClippedMoments m = clipped_moments(theta, query.params.capacity);
    return snr_linear_from(m, theta, query.params.capacity, query.frames);
}

double snr_h(const SnrQuery& query) {
    return 20.0 * std::log10(snr_h_linear(query));
}

double invert_mean(double observed_mean, int capacity) {
    if (capacity < 1) throw std::domain_error("invert_mean: capacity must be >= 1");
    if (!(observed_mean >= 0.0) || !std::isfinite(observed_mean)) {
        throw std::domain_error("invert_mean: observed mean must be finite and >= 0");
    }
    if (observed_mean >= static_cast<double>(capacity)) {
        throw SaturatedMeanError("invert_mean: observed mean at or above capacity");
    }
    if (observed_mean == 0.0) return 0.0;
    if (capacity == 1) return -std::log1p(-observed_mean); // inverse of 1 - e^{-theta}

    // Where the clipping level is beyond the mass window the mean is theta
    // itself to < 1e-28 relative, so the inverse is the identity. The same
    // holds below the bracket floor, where clipping loss is O(theta^L).
    if (observed_mean + 13.0 * std::sqrt(observed_mean) + 46.0 < static_cast<double>(capacity) ||
        observed_mean <= 1e-12) {
        return observed_mean;
    }

    const auto mean_at = [capacity](double th) {
        return mean_clipped({th, capacity});
    };

    double log_lo = std::log(1e-12);
    double log_hi = std::log(64.0 * static_cast<double>(capacity));
    // Bisection on log(theta) narrows the bracket; the monotone mean
    // guarantees convergence.
    for (int iter = 0; iter < 80 && (log_hi - log_lo) > 1e-6; ++iter) {
        const double mid = std::exp(0.5 * (log_lo + log_hi));
        if (mean_at(mid) < observed_mean) {
            log_lo = std::log(mid);
        } else {
            log_hi = std::log(mid);
        }
    }

    // Newton refinement with the closed-form derivative, kept inside the bracket.
    double x = std::exp(0.5 * (log_lo + log_hi));
    for (int iter = 0; iter < 8; ++iter) {
        const double f = mean_at(x) - observed_mean;
        if (f == 0.0) break;
        if (f < 0.0) log_lo = std::log(x); else log_hi = std::log(x);
        const double d = dmean_dtheta({x, capacity});
        double next = 0.0;
        if (d > 0.0) {
            next = x - f / d;
        }
        if (!(d > 0.0) || !(next > std::exp(log_lo)) || !(next < std::exp(log_hi))) {
            next = std::exp(0.5 * (log_lo + log_hi));
        }
        const double step = std::abs(next - x);
        x = next;
        if (step <= 1e-13 * x) break;
    }
    return x;
}

DynamicRangeReport dynamic_range(int capacity, long frames, double snr_floor_db) {
    if (capacity < 1) throw std::domain_error("dynamic_range: capacity must be >= 1");
    if (frames < 1) throw std::domain_error("dynamic_range: frames must be >= 1");

    const auto snr_at = [&](double theta) -> double {
        try {
            return snr_h({{theta, capacity}, frames});
        } catch (const UndefinedSnrError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    const double theta_lo = 1e-12;
    const double theta_hi = 64.0 * static_cast<double>(capacity) +
                            20.0 * std::log(static_cast<double>(frames) + 1.0) + 100.0;
    const int n = 600;
    const double log_lo = std::log(theta_lo);
    const double log_step = (std::log(theta_hi) - log_lo) / (n - 1);

    int first = -1;
    int last = -1;
    for (int i = 0; i < n; ++i) {
        const double theta = std::exp(log_lo + i * log_step);
        if (snr_at(theta) >= snr_floor_db) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) {
        throw FloorUnreachableError("dynamic_range: no exposure reaches the SNR floor");
    }

    // Refine each crossing by bisection between the bracketing grid points;
    // the returned edge is the side that still meets the floor.
    const auto refine = [&](int inside, int outside) -> double {
        double a = std::exp(log_lo + inside * log_step);  // meets the floor
        if (outside < 0 || outside >= n) return a;
        double b = std::exp(log_lo + outside * log_step); // misses the floor
        for (int iter = 0; iter < 60; ++iter) {
            const double mid = std::exp(0.5 * (std::log(a) + std::log(b)));
            if (snr_at(mid) >= snr_floor_db) a = mid; else b = mid;
        }
        return a;
    };

    DynamicRangeReport report;
    report.snr_floor_db = snr_floor_db;
    report.theta_min = refine(first, first - 1);
    report.theta_max = refine(last, last + 1);
    if (report.theta_min > report.theta_max) std::swap(report.theta_min, report.theta_max);
    report.ratio_db = 20.0 * std::log10(report.theta_max / report.theta_min);
    return report;
}

} // namespace qis::stats
