#pragma once

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>

#include "mici/error.hpp"
#include "mici/rng.hpp"

namespace mici {

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double std_normal_quantile(double p) {
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

// Draw from N(0,1) restricted to [a, b] with b <= 0 side dominant.
inline double truncated_std_normal(double a, double b, Rng& rng) {
    const double fa = std_normal_cdf(a);
    const double fb = std_normal_cdf(b);
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (fb - fa > 1e-300) {
        const double p = std::clamp(fa + u * (fb - fa), 1e-300, 1.0 - 1e-16);
        return std::clamp(std_normal_quantile(p), a, b);
    }
    // Far tail, both CDF values underflow: the density is close to an
    // exponential with rate |b| anchored at b.
    const double rate = std::max(std::abs(b), 1e-300);
    const double z = b + std::log1p(-u * -std::expm1(-rate * (b - a))) / rate;
    return std::clamp(z, a, b);
}

}  // namespace detail

/// Inverse-CDF draw from N(mean, std^2) conditioned on [lo, hi].
inline double sample_truncated_gaussian(double mean, double std, double lo, double hi, Rng& rng) {
    if (!(std > 0.0) || !std::isfinite(std)) {
        throw Error(ErrorCode::InvalidStd, "standard deviation must be positive and finite");
    }
    if (!(lo <= hi)) throw Error(ErrorCode::Range, "truncation bounds out of order");
    if (lo == hi) return lo;
    double a = (lo - mean) / std;
    double b = (hi - mean) / std;
    // Work on whichever side keeps the CDF away from 1 to avoid cancellation.
    const bool flip = a > 0.0;
    if (flip) {
        const double t = a;
        a = -b;
        b = -t;
    }
    double z = detail::truncated_std_normal(a, b, rng);
    if (flip) z = -z;
    return std::clamp(mean + std * z, lo, hi);
}

}  // namespace mici
