#include "atex/bootstrap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace atex {

std::vector<double> moving_block_resample(std::span<const double> series, std::size_t window,
                                          Rng& rng) {
    const std::size_t n = series.size();
    if (n < window) throw Error("moving_block_resample: series shorter than the window");
    const std::size_t n_blocks = n - window + 1;
    std::vector<double> out;
    out.reserve(n);
    while (out.size() < n) {
        const std::size_t start = static_cast<std::size_t>(rng.below(n_blocks));
        const std::size_t take = std::min(window, n - out.size());
        out.insert(out.end(), series.begin() + static_cast<std::ptrdiff_t>(start),
                   series.begin() + static_cast<std::ptrdiff_t>(start + take));
    }
    return out;
}

Matrix9 regularized_inverse(const Matrix9& sigma, double* condition_number, bool* regularized) {
    Eigen::SelfAdjointEigenSolver<Matrix9> eig(sigma);
    if (eig.info() != Eigen::Success) throw Error("regularized_inverse: eigendecomposition failed");
    const Eigen::Matrix<double, 9, 1> lambda = eig.eigenvalues();
    const double lambda_max = lambda.maxCoeff();
    const double lambda_min = lambda.minCoeff();
    const double cond =
        lambda_min > 0.0 ? lambda_max / lambda_min : std::numeric_limits<double>::infinity();
    if (condition_number) *condition_number = cond;

    Eigen::Matrix<double, 9, 1> inv;
    const bool needs_ridge = !(cond <= kConditionLimit);
    if (regularized) *regularized = needs_ridge;
    if (needs_ridge) {
        const double ridge = kRidgeEpsilon * sigma.trace() / 9.0;
        if (!(ridge > 0.0)) throw Error("regularized_inverse: non-positive trace");
        for (int i = 0; i < 9; ++i) inv(i) = 1.0 / (std::max(lambda(i), 0.0) + ridge);
    } else {
        for (int i = 0; i < 9; ++i) inv(i) = 1.0 / lambda(i);
    }
    Matrix9 w = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    // Symmetrize away rounding in the triple product.
    return ((w + w.transpose()) / 2.0).eval();
}

WeightMatrix bootstrap_weight_matrix(std::span<const double> returns, std::size_t window,
                                     int n_boot, std::uint64_t seed) {
    if (returns.size() < window)
        throw Error("bootstrap_weight_matrix: series shorter than the window");
    if (n_boot < 2) throw Error("bootstrap_weight_matrix: need at least 2 replicates");

    std::vector<Eigen::Matrix<double, 9, 1>> samples;
    samples.reserve(static_cast<std::size_t>(n_boot));
    int failures = 0;
    for (int i = 0; i < n_boot; ++i) {
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(i));
        const auto replicate = moving_block_resample(returns, window, rng);
        const MomentVector m = compute_moments(replicate, returns);
        if (!m.all_finite()) {
            ++failures;
            continue;
        }
        Eigen::Matrix<double, 9, 1> v;
        for (int j = 0; j < 9; ++j) v(j) = m.values[static_cast<std::size_t>(j)];
        samples.push_back(v);
    }
    if (failures * 20 > n_boot)
        throw Error("bootstrap_weight_matrix: more than 5% of replicates failed");
    if (samples.size() < 2) throw Error("bootstrap_weight_matrix: not enough usable replicates");

    Eigen::Matrix<double, 9, 1> mean = Eigen::Matrix<double, 9, 1>::Zero();
    for (const auto& v : samples) mean += v;
    mean /= static_cast<double>(samples.size());

    WeightMatrix out;
    out.replicates_used = static_cast<int>(samples.size());
    for (const auto& v : samples) {
        const Eigen::Matrix<double, 9, 1> d = v - mean;
        out.sigma += d * d.transpose();
    }
    out.sigma /= static_cast<double>(samples.size() - 1);
    out.sigma = ((out.sigma + out.sigma.transpose()) / 2.0).eval();
    out.weight = regularized_inverse(out.sigma, &out.condition_number, &out.regularized);
    return out;
}

void write_matrix_csv(const Matrix9& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_matrix_csv: cannot open '" + path + "'");
    for (std::size_t i = 0; i < 9; ++i) {
        out << kMomentNames[i];
        char buf[64];
        for (int j = 0; j < 9; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(static_cast<int>(i), j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

Matrix9 read_matrix_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_matrix_csv: cannot open '" + path + "'");
    Matrix9 m = Matrix9::Zero();
    std::string line;
    int row = 0;
    while (std::getline(in, line) && row < 9) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        int col = -1;  // first column is the moment name
        while (std::getline(ss, field, ',')) {
            if (col >= 0) {
                if (col >= 9) throw ParseError("read_matrix_csv: too many columns");
                m(row, col) = std::stod(field);
            }
            ++col;
        }
        if (col != 9) throw ParseError("read_matrix_csv: expected 9 value columns");
        ++row;
    }
    if (row != 9) throw ParseError("read_matrix_csv: expected 9 rows");
    return m;
}

}  // namespace atex
