#include "atex/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace atex {

std::array<double, 5> theta_to_array(const ThetaParams& theta) {
    return {theta.population_ratio, theta.aggression_cutoff, theta.placement_depth,
            theta.imbalance_scaling, theta.value_dispersion};
}

ThetaParams theta_from_array(const std::array<double, 5>& values) {
    ThetaParams theta;
    theta.population_ratio = values[0];
    theta.aggression_cutoff = values[1];
    theta.placement_depth = values[2];
    theta.imbalance_scaling = values[3];
    theta.value_dispersion = values[4];
    return theta;
}

std::array<double, 5> ThetaBox::clamp(std::array<double, 5> x) const {
    for (std::size_t i = 0; i < 5; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    return x;
}

SmdObjective::SmdObjective(SessionConfig base, Eigen::Matrix<double, 9, 1> empirical_moments,
                           std::vector<double> empirical_returns, Matrix9 weight,
                           int replications)
    : base_(std::move(base)),
      empirical_(std::move(empirical_moments)),
      empirical_returns_(std::move(empirical_returns)),
      weight_(std::move(weight)),
      replications_(replications) {
    if (replications_ < 1) throw Error("SmdObjective: need at least one replication");
}

Eigen::Matrix<double, 9, 1> SmdObjective::mean_simulated_moments(const ThetaParams& theta) const {
    Eigen::Matrix<double, 9, 1> mean = Eigen::Matrix<double, 9, 1>::Zero();
    for (int i = 1; i <= replications_; ++i) {
        SessionConfig config = base_;
        config.theta = theta;
        config.seed = base_.seed + static_cast<std::uint64_t>(i);
        const SessionResult result = run_session(config);
        const auto micro = micro_price_series(result.snapshots);
        if (micro.size() < 2) throw Error("smd: replication produced no price movement");
        const auto returns = log_returns(micro);
        const MomentVector m = compute_moments(returns, empirical_returns_);
        if (!m.all_finite()) throw Error("smd: moment vector has undefined entries");
        for (int j = 0; j < 9; ++j) mean(j) += m.values[static_cast<std::size_t>(j)];
    }
    return mean / static_cast<double>(replications_);
}

Eigen::Matrix<double, 9, 1> SmdObjective::moment_gap(const ThetaParams& theta) const {
    return empirical_ - mean_simulated_moments(theta);
}

double SmdObjective::operator()(const ThetaParams& theta) const {
    try {
        const Eigen::Matrix<double, 9, 1> gap = moment_gap(theta);
        return gap.dot(weight_ * gap);
    } catch (const Error&) {
        return kSimulationFailurePenalty;
    }
}

double SmdObjective::operator()(const std::array<double, 5>& theta) const {
    return (*this)(theta_from_array(theta));
}

NmCoefficients NmCoefficients::adaptive(int dimension) {
    const double n = static_cast<double>(dimension);
    return {1.0, 1.0 + 2.0 / n, 0.75 - 1.0 / (2.0 * n), 1.0 - 1.0 / n};
}

namespace {

constexpr std::size_t kDim = 5;
using Point = std::array<double, kDim>;

struct Vertex {
    Point x;
    double f;
};

double relative_spread(double best, double worst) {
    const double scale = std::max(std::abs(worst), 1e-300);
    return (worst - best) / scale;
}

}  // namespace

NmtaResult nmta_minimize(const ObjectiveFn& objective, const std::array<double, 5>& theta0,
                         const ThetaBox& box, const NmtaOptions& options) {
    if (options.budget < 1) throw Error("nmta_minimize: budget must be >= 1");
    const NmCoefficients coef = NmCoefficients::adaptive(static_cast<int>(kDim));
    Rng rng(options.seed);

    NmtaResult result;
    result.evaluations = 0;
    auto eval = [&](const Point& p) {
        ++result.evaluations;
        const double f = objective(p);
        if (result.evaluations == 1 || f < result.best_fitness) {
            result.best_fitness = f;
            result.best = p;
        }
        return f;
    };

    // Simplex: theta0 plus one step along each axis, everything clamped.
    std::vector<Vertex> simplex;
    simplex.reserve(kDim + 1);
    {
        const Point origin = box.clamp(theta0);
        simplex.push_back({origin, eval(origin)});
        for (std::size_t d = 0; d < kDim; ++d) {
            Point p = origin;
            const double width = box.hi[d] - box.lo[d];
            double step = options.initial_step_fraction * width;
            if (p[d] + step > box.hi[d]) step = -step;
            p[d] += step;
            p = box.clamp(p);
            simplex.push_back({p, eval(p)});
        }
    }

    auto order_simplex = [&] {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };

    auto threshold_at = [&](int iteration) {
        int boundary = 0;
        for (std::size_t round = 0; round < options.steps.size(); ++round) {
            boundary += options.steps[round];
            if (iteration < boundary) return options.thresholds[round];
        }
        return 0.0;
    };

    for (int iteration = 0; iteration < options.budget; ++iteration) {
        order_simplex();
        const double tau = threshold_at(iteration) * std::abs(simplex.front().f);
        char step_kind = '?';

        if (rng.uniform() < options.xi) {
            // TA random shift: nudge one coordinate of the worst vertex by a
            // fraction of that coordinate's simplex mean.
            step_kind = 'T';
            const std::size_t d = static_cast<std::size_t>(rng.below(kDim));
            double mean_d = 0.0;
            for (const auto& v : simplex) mean_d += v.x[d];
            mean_d /= static_cast<double>(simplex.size());
            double magnitude = mean_d != 0.0 ? mean_d : 0.1 * (box.hi[d] - box.lo[d]);
            Point candidate = simplex.back().x;
            candidate[d] += rng.uniform(-0.25, 0.25) * magnitude;
            candidate = box.clamp(candidate);
            const double fc = eval(candidate);
            if (fc <= simplex.back().f + tau) simplex.back() = {candidate, fc};
        } else {
            Vertex& worst = simplex.back();
            const double f_best = simplex.front().f;
            const double f_second = simplex[kDim - 1].f;

            Point centroid{};
            for (std::size_t i = 0; i < kDim; ++i)
                for (std::size_t d = 0; d < kDim; ++d) centroid[d] += simplex[i].x[d];
            for (double& c : centroid) c /= static_cast<double>(kDim);

            auto towards = [&](double coeff) {
                Point p;
                for (std::size_t d = 0; d < kDim; ++d)
                    p[d] = centroid[d] + coeff * (centroid[d] - worst.x[d]);
                return box.clamp(p);
            };

            const Point reflected = towards(coef.reflection);
            const double fr = eval(reflected);
            if (fr < f_best + tau) {
                // Greedy expansion beyond a (threshold-)improving reflection.
                Point expanded;
                for (std::size_t d = 0; d < kDim; ++d)
                    expanded[d] = centroid[d] + coef.expansion * (reflected[d] - centroid[d]);
                expanded = box.clamp(expanded);
                const double fe = eval(expanded);
                if (fe < fr) {
                    worst = {expanded, fe};
                    step_kind = 'E';
                } else {
                    worst = {reflected, fr};
                    step_kind = 'R';
                }
            } else if (fr < f_second + tau) {
                worst = {reflected, fr};
                step_kind = 'R';
            } else {
                const bool outside = fr < worst.f + tau;
                Point contracted;
                if (outside) {
                    for (std::size_t d = 0; d < kDim; ++d)
                        contracted[d] =
                            centroid[d] + coef.contraction * (reflected[d] - centroid[d]);
                } else {
                    for (std::size_t d = 0; d < kDim; ++d)
                        contracted[d] =
                            centroid[d] - coef.contraction * (centroid[d] - worst.x[d]);
                }
                contracted = box.clamp(contracted);
                const double fc = eval(contracted);
                const double gate = outside ? std::min(fr, worst.f) : worst.f;
                if (fc < gate + tau) {
                    worst = {contracted, fc};
                    step_kind = 'C';
                } else {
                    // Shrink everything toward the best vertex.
                    step_kind = 'S';
                    for (std::size_t i = 1; i <= kDim; ++i) {
                        for (std::size_t d = 0; d < kDim; ++d)
                            simplex[i].x[d] = simplex[0].x[d] +
                                              coef.shrink * (simplex[i].x[d] - simplex[0].x[d]);
                        simplex[i].x = box.clamp(simplex[i].x);
                        simplex[i].f = eval(simplex[i].x);
                    }
                }
            }
        }

        order_simplex();
        NmtaTraceRow row;
        row.iteration = iteration + 1;
        row.best_fitness = result.best_fitness;
        for (std::size_t i = 0; i <= kDim; ++i) row.simplex_fitness[i] = simplex[i].f;
        row.threshold = tau;
        row.step = step_kind;
        result.trace.push_back(row);

        if (relative_spread(simplex.front().f, simplex.back().f) < options.spread_tolerance) {
            result.converged = true;
            break;
        }
    }
    return result;
}

void write_trace_csv(const std::vector<NmtaTraceRow>& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_trace_csv: cannot open '" + path + "'");
    out << "Iteration,BestFitness,Threshold,Step";
    for (std::size_t i = 1; i <= 6; ++i) out << ",Vertex" << i;
    out << '\n';
    char buf[64];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof(buf), "%.17g", row.best_fitness);
        out << row.iteration << ',' << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.17g", row.threshold);
        out << buf << ',' << row.step;
        for (double f : row.simplex_fitness) {
            std::snprintf(buf, sizeof(buf), "%.17g", f);
            out << ',' << buf;
        }
        out << '\n';
    }
}

ParameterCI parameter_confidence(const std::vector<ChainPoint>& chains, const Matrix9& sigma_m,
                                 const std::array<double, 5>& theta_hat) {
    if (chains.size() < 2) throw Error("parameter_confidence: need at least two chain points");
    ParameterCI ci;
    ci.theta_hat = theta_hat;

    const double n = static_cast<double>(chains.size());
    Eigen::Matrix<double, 5, 1> theta_mean = Eigen::Matrix<double, 5, 1>::Zero();
    Eigen::Matrix<double, 9, 1> m_mean = Eigen::Matrix<double, 9, 1>::Zero();
    for (const auto& c : chains) {
        for (int i = 0; i < 5; ++i) theta_mean(i) += c.theta[static_cast<std::size_t>(i)];
        for (int j = 0; j < 9; ++j) m_mean(j) += c.moments[static_cast<std::size_t>(j)];
    }
    theta_mean /= n;
    m_mean /= n;

    Eigen::Matrix<double, 5, 9> cov_tm = Eigen::Matrix<double, 5, 9>::Zero();
    Eigen::Matrix<double, 9, 1> var_m = Eigen::Matrix<double, 9, 1>::Zero();
    for (const auto& c : chains) {
        Eigen::Matrix<double, 5, 1> dt;
        Eigen::Matrix<double, 9, 1> dm;
        for (int i = 0; i < 5; ++i) dt(i) = c.theta[static_cast<std::size_t>(i)] - theta_mean(i);
        for (int j = 0; j < 9; ++j) dm(j) = c.moments[static_cast<std::size_t>(j)] - m_mean(j);
        cov_tm += dt * dm.transpose();
        var_m += dm.cwiseProduct(dm);
    }
    cov_tm /= n - 1.0;
    var_m /= n - 1.0;

    ci.exposures = Eigen::Matrix<double, 5, 9>::Zero();
    for (int j = 0; j < 9; ++j) {
        if (var_m(j) <= 0.0) {
            ci.warnings.push_back(std::string("moment '") + kMomentNames[static_cast<std::size_t>(j)] +
                                  "' has zero variance; exposure column set to 0");
            continue;
        }
        ci.exposures.col(j) = cov_tm.col(j) / var_m(j);
    }

    // B is 5x9, so the 5x5 parameter covariance is B Sigma_m B'.
    ci.sigma_theta = ci.exposures * sigma_m * ci.exposures.transpose();
    for (int i = 0; i < 5; ++i) {
        const double sd = std::sqrt(std::max(ci.sigma_theta(i, i), 0.0));
        ci.lower[static_cast<std::size_t>(i)] = theta_hat[static_cast<std::size_t>(i)] - 1.96 * sd;
        ci.upper[static_cast<std::size_t>(i)] = theta_hat[static_cast<std::size_t>(i)] + 1.96 * sd;
    }
    return ci;
}

void write_parameter_ci_csv(const ParameterCI& ci, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_parameter_ci_csv: cannot open '" + path + "'");
    out << "Parameter,Lower,Estimate,Upper\n";
    char buf[64];
    for (std::size_t i = 0; i < 5; ++i) {
        out << kParamNames[i];
        for (double v : {ci.lower[i], ci.theta_hat[i], ci.upper[i]}) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace atex
