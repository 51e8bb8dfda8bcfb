#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

#include "atex/moments.hpp"
#include "atex/rng.hpp"

namespace atex {

using Matrix9 = Eigen::Matrix<double, 9, 9>;

/// Bootstrap covariance of the moment vector and its regularized inverse.
struct WeightMatrix {
    Matrix9 sigma = Matrix9::Zero();
    Matrix9 weight = Matrix9::Zero();
    double condition_number = 0.0;
    bool regularized = false;
    int replicates_used = 0;
};

/// Inversion is exact while cond(Sigma) <= kConditionLimit; beyond that a
/// ridge of kRidgeEpsilon * tr(Sigma)/9 is added to the (non-negative
/// clamped) eigenvalues. On the well-conditioned subspace -- eigenvalues at
/// least kWellConditionedCut * lambda_max -- the product W*Sigma then stays
/// within 1e-6 of the identity.
constexpr double kConditionLimit = 1e12;
constexpr double kRidgeEpsilon = 1e-13;
constexpr double kWellConditionedCut = 1e-6;

/// One moving-block resample: contiguous windows drawn with replacement and
/// concatenated to the original length.
std::vector<double> moving_block_resample(std::span<const double> series, std::size_t window,
                                          Rng& rng);

/// Moving-block bootstrap of the 9 moments: per-replicate moment vectors,
/// their sample covariance, and the regularized inverse used as the SMD
/// weight matrix. The KS entry of every replicate is computed against the
/// original series. Deterministic: replicate i uses stream seed + i.
WeightMatrix bootstrap_weight_matrix(std::span<const double> returns, std::size_t window = 2000,
                                     int n_boot = 1000, std::uint64_t seed = 1);

/// Regularized inverse alone (used on externally supplied covariances).
Matrix9 regularized_inverse(const Matrix9& sigma, double* condition_number = nullptr,
                            bool* regularized = nullptr);

void write_matrix_csv(const Matrix9& m, const std::string& path);
Matrix9 read_matrix_csv(const std::string& path);

}  // namespace atex
