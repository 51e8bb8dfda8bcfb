#pragma once

#include <cmath>

#include "atex/rng.hpp"
#include "atex/types.hpp"

namespace atex {

/// Inverse-CDF draw from the Pareto density a*x_m^a / x^(a+1), x >= x_m.
inline double power_law_draw(double x_m, double alpha, double u) {
    if (x_m <= 0.0) throw Error("power_law_draw: x_m must be positive");
    if (alpha <= 0.0) throw Error("power_law_draw: alpha must be positive");
    if (u <= 0.0) u = 0x1.0p-53;
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return x_m * std::pow(u, -1.0 / alpha);
}

/// Order volume: the power-law draw rounded down to an integer >= x_m.
/// Capped at 10^9 shares so downstream integer aggregates cannot overflow;
/// at the tail indices used here the cap is hit with negligible probability.
inline Volume sample_power_law(double x_m, double alpha, double u) {
    const double x = power_law_draw(x_m, alpha, u);
    const double capped = std::min(x, 1e9);
    const Volume v = static_cast<Volume>(std::floor(capped));
    const Volume floor_volume = static_cast<Volume>(std::ceil(x_m));
    return v < floor_volume ? floor_volume : v;
}

/// Inverse CDF of an exponential with the given (untruncated) mean,
/// conditioned on [lo, hi]. u -> 0 gives lo, u -> 1 gives hi.
inline double trunc_exp_inv(double mean, double lo, double hi, double u) {
    if (!(0.0 < lo && lo < hi)) throw Error("trunc_exp_inv: need 0 < lo < hi");
    if (mean <= 0.0) throw Error("trunc_exp_inv: mean must be positive");
    const double a = std::exp(-lo / mean);
    const double b = std::exp(-hi / mean);
    if (u < 0.0) u = 0.0;
    if (u > 1.0) u = 1.0;
    const double x = -mean * std::log(a - u * (a - b));
    return std::min(std::max(x, lo), hi);
}

/// Closed-form mean of the truncated exponential above.
inline double trunc_exp_mean(double mean, double lo, double hi) {
    const double a = std::exp(-lo / mean);
    const double b = std::exp(-hi / mean);
    return mean + (lo * a - hi * b) / (a - b);
}

/// Gamma(shape k, rate beta) via Marsaglia-Tsang squeeze; shape < 1 boosted
/// through Gamma(k + 1) * U^(1/k).
inline double gamma_draw(Rng& rng, double shape, double rate) {
    if (shape <= 0.0) throw Error("gamma_draw: shape must be positive");
    if (rate <= 0.0) throw Error("gamma_draw: rate must be positive");
    double boost = 1.0;
    if (shape < 1.0) {
        boost = std::pow(rng.uniform_open(), 1.0 / shape);
        shape += 1.0;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v / rate;
    }
}

}  // namespace atex
