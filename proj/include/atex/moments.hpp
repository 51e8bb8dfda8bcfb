#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "atex/types.hpp"

namespace atex {

/// ln S_{k+1} - ln S_k. Throws on non-positive prices or fewer than two.
std::vector<double> log_returns(std::span<const double> prices);

struct BasicMoments {
    double mean = 0.0;
    double stdev = 0.0;     // sample, n-1
    double kurtosis = 0.0;  // raw Pearson: Normal -> 3
};

BasicMoments basic_moments(std::span<const double> r);

/// Two-sample Kolmogorov-Smirnov sup distance.
double ks_statistic(std::span<const double> a, std::span<const double> b);

/// Log-periodogram regression of ln I(w_j) on -2 ln(2 sin(w_j/2)) over the
/// first floor(sqrt(n)) Fourier frequencies; clamped to [-0.5, 0.5]. The
/// caller passes absolute returns when targeting long-range dependence.
double gph_estimate(std::span<const double> x);

/// Augmented Dickey-Fuller t-statistic with constant, lag order
/// floor((n-1)^(1/3)).
double adf_statistic(std::span<const double> r);

/// Rescaled-range estimate: slope of ln E[R/S] against ln w over dyadic
/// windows 16..n/4, clamped to [0, 1].
double hurst_exponent(std::span<const double> r);

struct GarchFit {
    double omega = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    bool converged = false;
    double neg_loglik = 0.0;

    double sum() const { return alpha + beta; }
};

/// Gaussian quasi-MLE of GARCH(1,1) on demeaned, rescaled returns via a
/// bounded simplex search with fixed deterministic restarts. Never throws
/// for non-convergence: the flag marks a fit whose likelihood failed to
/// improve over the starting points.
GarchFit fit_garch11(std::span<const double> r);

/// Modified Hill estimator on an explicit tail sample (all values > 0),
/// solved by bisection on (0.1, 20].
double hill_modified_tail(std::span<const double> tail);

/// Modified Hill on absolute returns above their 95th percentile.
double hill_modified(std::span<const double> r);

inline constexpr std::array<const char*, 9> kMomentNames = {
    "Mean", "StDev", "Kurtosis", "KS", "Hurst", "GPH", "ADF", "GARCH", "Hill"};

enum MomentIndex {
    kMean = 0,
    kStDev,
    kKurtosis,
    kKolmogorovSmirnov,
    kHurst,
    kGph,
    kAdf,
    kGarchSum,
    kHill
};

/// The 9 calibration moments in their fixed order. Entries whose estimator
/// preconditions fail (series too short, degenerate tail) are NaN.
struct MomentVector {
    std::array<double, 9> values{};
    bool garch_converged = true;

    double operator[](std::size_t i) const { return values[i]; }
    bool all_finite() const;
};

/// Assembles the full vector; the KS entry compares against `reference`.
MomentVector compute_moments(std::span<const double> returns,
                             std::span<const double> reference);

void write_moments_csv(const MomentVector& m, const std::string& path);
MomentVector read_moments_csv(const std::string& path);

/// Single-column CSV of returns (header "Return").
void write_returns_csv(std::span<const double> returns, const std::string& path);
std::vector<double> read_returns_csv(const std::string& path);

}  // namespace atex
