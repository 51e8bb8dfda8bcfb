#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "atex/bootstrap.hpp"
#include "atex/session.hpp"

namespace atex {

inline constexpr std::array<const char*, 5> kParamNames = {"N", "delta", "kappa", "nu", "sigma"};

std::array<double, 5> theta_to_array(const ThetaParams& theta);
ThetaParams theta_from_array(const std::array<double, 5>& values);

/// Feasible box for the five free parameters.
struct ThetaBox {
    std::array<double, 5> lo = {1.0, 0.0001, 0.5, 1.1, 0.0001};
    std::array<double, 5> hi = {20.0, 0.05, 10.0, 10.0, 0.1};

    std::array<double, 5> clamp(std::array<double, 5> x) const;
};

/// Objective value returned when any replication fails outright.
constexpr double kSimulationFailurePenalty = 1e12;

/// Simulated-minimum-distance objective G'WG. Each evaluation runs
/// `replications` sessions with seeds seed+1..seed+I (common random numbers
/// across the whole optimization), computes the moment vector of the
/// micro-price returns per replication, and averages the moment errors.
class SmdObjective {
public:
    SmdObjective(SessionConfig base, Eigen::Matrix<double, 9, 1> empirical_moments,
                 std::vector<double> empirical_returns, Matrix9 weight, int replications = 5);

    double operator()(const ThetaParams& theta) const;
    double operator()(const std::array<double, 5>& theta) const;

    /// Mean moment-error vector G for diagnostics / the comparison table.
    Eigen::Matrix<double, 9, 1> moment_gap(const ThetaParams& theta) const;
    Eigen::Matrix<double, 9, 1> mean_simulated_moments(const ThetaParams& theta) const;

    const Eigen::Matrix<double, 9, 1>& empirical_moments() const { return empirical_; }
    int replications() const { return replications_; }

private:
    SessionConfig base_;
    Eigen::Matrix<double, 9, 1> empirical_;
    std::vector<double> empirical_returns_;
    Matrix9 weight_;
    int replications_;
};

struct NmtaOptions {
    int budget = 44;  // iterations; the default threshold schedule spans 44
    double xi = 0.15;  // probability of a threshold-accepting random shift
    std::array<double, 4> thresholds = {0.2, 0.1, 0.05, 0.0};  // relative to best fitness
    std::array<int, 4> steps = {14, 12, 10, 8};
    std::uint64_t seed = 7;
    double spread_tolerance = 1e-4;  // relative simplex fitness spread
    double initial_step_fraction = 0.10;  // of the box width, per dimension
};

struct NmtaTraceRow {
    int iteration = 0;
    double best_fitness = 0.0;  // min over all evaluations so far
    std::array<double, 6> simplex_fitness{};
    double threshold = 0.0;
    char step = '?';  // R/E/C/S/T per NM reflect/expand/contract/shrink/TA
};

struct NmtaResult {
    std::array<double, 5> best;
    double best_fitness = 0.0;
    std::vector<NmtaTraceRow> trace;
    int evaluations = 0;
    bool converged = false;
};

/// Adaptive Nelder-Mead coefficients for dimension n:
/// reflection 1, expansion 1 + 2/n, contraction 0.75 - 1/(2n), shrink 1 - 1/n.
struct NmCoefficients {
    double reflection, expansion, contraction, shrink;

    static NmCoefficients adaptive(int dimension);
};

using ObjectiveFn = std::function<double(const std::array<double, 5>&)>;

/// Nelder-Mead simplex hybridized with threshold accepting: each iteration
/// runs a TA random shift with probability xi, otherwise a simplex step
/// whose accept tests all carry the current threshold, so bounded
/// deteriorations pass. Thresholds decrease over four rounds and every
/// candidate is clamped to the box.
NmtaResult nmta_minimize(const ObjectiveFn& objective, const std::array<double, 5>& theta0,
                         const ThetaBox& box, const NmtaOptions& options);

void write_trace_csv(const std::vector<NmtaTraceRow>& trace, const std::string& path);

/// One sensitivity-chain entry: a parameter vector and the moments its
/// simulation produced.
struct ChainPoint {
    std::array<double, 5> theta;
    std::array<double, 9> moments;
};

struct ParameterCI {
    std::array<double, 5> theta_hat;
    std::array<double, 5> lower;
    std::array<double, 5> upper;
    Eigen::Matrix<double, 5, 9> exposures;   // B_ij = Cov[theta_i, m_j] / Var[m_j]
    Eigen::Matrix<double, 5, 5> sigma_theta; // B Sigma_m B'
    std::vector<std::string> warnings;
};

/// 95% intervals theta_hat +- 1.96 sqrt(diag(Sigma_theta)). Zero-variance
/// moment columns contribute zero exposure and a warning.
ParameterCI parameter_confidence(const std::vector<ChainPoint>& chains, const Matrix9& sigma_m,
                                 const std::array<double, 5>& theta_hat);

void write_parameter_ci_csv(const ParameterCI& ci, const std::string& path);

}  // namespace atex
