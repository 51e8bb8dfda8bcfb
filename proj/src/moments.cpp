#include "atex/moments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>

namespace atex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Ordinary least squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean_of(x), my = mean_of(y);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw Error("ols_slope: degenerate regressor");
    return sxy / sxx;
}

}  // namespace

std::vector<double> log_returns(std::span<const double> prices) {
    if (prices.size() < 2) throw Error("log_returns: need at least two prices");
    std::vector<double> r;
    r.reserve(prices.size() - 1);
    for (std::size_t i = 0; i + 1 < prices.size(); ++i) {
        if (prices[i] <= 0.0 || prices[i + 1] <= 0.0)
            throw Error("log_returns: prices must be positive");
        r.push_back(std::log(prices[i + 1]) - std::log(prices[i]));
    }
    return r;
}

BasicMoments basic_moments(std::span<const double> r) {
    const std::size_t n = r.size();
    if (n < 4) throw Error("basic_moments: need at least 4 observations");
    const double mean = mean_of(r);
    double m2 = 0.0, m4 = 0.0;
    for (double v : r) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const double variance = m2 / static_cast<double>(n - 1);
    if (m2 == 0.0) throw Error("basic_moments: zero variance, kurtosis undefined");
    const double kurtosis = static_cast<double>(n) * m4 / (m2 * m2);
    return {mean, std::sqrt(variance), kurtosis};
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw Error("ks_statistic: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < sa.size() && j < sb.size()) {
        const double x = std::min(sa[i], sb[j]);
        while (i < sa.size() && sa[i] <= x) ++i;
        while (j < sb.size() && sb[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double gph_estimate(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 128) throw Error("gph_estimate: need at least 128 observations");
    const std::size_t m = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    const double mean = mean_of(x);

    std::vector<double> regressor, log_periodogram;
    regressor.reserve(m);
    log_periodogram.reserve(m);
    for (std::size_t j = 1; j <= m; ++j) {
        const double w = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
        // DFT ordinate via incremental rotation: one complex multiply per
        // sample instead of a sin/cos pair.
        const double cw = std::cos(w), sw = std::sin(w);
        double c = 1.0, s = 0.0;
        double re = 0.0, im = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = x[t] - mean;
            re += v * c;
            im += v * s;
            const double c_next = c * cw - s * sw;
            s = s * cw + c * sw;
            c = c_next;
        }
        const double intensity =
            (re * re + im * im) / (2.0 * std::numbers::pi * static_cast<double>(n));
        if (!(intensity > 0.0) || !std::isfinite(intensity)) continue;
        regressor.push_back(-2.0 * std::log(2.0 * std::sin(w / 2.0)));
        log_periodogram.push_back(std::log(intensity));
    }
    if (regressor.size() < 8) throw Error("gph_estimate: too few usable frequencies");
    const double d = ols_slope(regressor, log_periodogram);
    return std::clamp(d, -0.5, 0.5);
}

double adf_statistic(std::span<const double> r) {
    const std::size_t n = r.size();
    if (n < 20) throw Error("adf_statistic: need at least 20 observations");
    const std::size_t lags =
        static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n - 1))));

    std::vector<double> dy(n - 1);
    for (std::size_t t = 1; t < n; ++t) dy[t - 1] = r[t] - r[t - 1];

    // Rows t = lags+1 .. n-1 of: dy_t = c + g*y_{t-1} + sum phi_i dy_{t-i}.
    const std::size_t k = 2 + lags;
    const std::size_t rows = n - 1 - lags;
    if (rows <= k) throw Error("adf_statistic: series too short for lag order");

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                                static_cast<Eigen::Index>(k));
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Eigen::VectorXd row(static_cast<Eigen::Index>(k));
    double yty = 0.0;
    for (std::size_t t = lags + 1; t < n; ++t) {
        row(0) = 1.0;
        row(1) = r[t - 1];
        for (std::size_t i = 1; i <= lags; ++i) row(static_cast<Eigen::Index>(1 + i)) = dy[t - 1 - i];
        const double y = dy[t - 1];
        xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
        xty += row * y;
        yty += y * y;
    }
    xtx = xtx.selfadjointView<Eigen::Lower>();

    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw Error("adf_statistic: singular regression");
    const Eigen::VectorXd beta = ldlt.solve(xty);
    const double rss = std::max(yty - 2.0 * beta.dot(xty) + beta.dot(xtx * beta), 0.0);
    const double dof = static_cast<double>(rows - k);
    if (dof <= 0.0) throw Error("adf_statistic: no degrees of freedom");
    const double s2 = rss / dof;

    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    e1(1) = 1.0;
    const double var_gamma = s2 * e1.dot(ldlt.solve(e1));
    if (!(var_gamma > 0.0)) throw Error("adf_statistic: singular regression");
    return beta(1) / std::sqrt(var_gamma);
}

double hurst_exponent(std::span<const double> r) {
    const std::size_t n = r.size();
    if (n < 256) throw Error("hurst_exponent: need at least 256 observations");

    std::vector<double> log_w, log_rs;
    for (std::size_t w = 16; w <= n / 4; w *= 2) {
        const std::size_t blocks = n / w;
        double rs_sum = 0.0;
        std::size_t rs_count = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto block = r.subspan(b * w, w);
            const double mean = mean_of(block);
            double cum = 0.0, cmin = 0.0, cmax = 0.0, ss = 0.0;
            for (double v : block) {
                const double d = v - mean;
                cum += d;
                cmin = std::min(cmin, cum);
                cmax = std::max(cmax, cum);
                ss += d * d;
            }
            const double sd = std::sqrt(ss / static_cast<double>(w));
            if (sd == 0.0) continue;
            rs_sum += (cmax - cmin) / sd;
            ++rs_count;
        }
        if (rs_count == 0) continue;
        log_w.push_back(std::log(static_cast<double>(w)));
        log_rs.push_back(std::log(rs_sum / static_cast<double>(rs_count)));
    }
    if (log_w.size() < 2) throw Error("hurst_exponent: degenerate series");
    return std::clamp(ols_slope(log_w, log_rs), 0.0, 1.0);
}

namespace {

/// Minimal bounded Nelder-Mead used by the GARCH fit (the calibration
/// optimizer is a separate, richer routine).
struct SimplexResult {
    std::vector<double> x;
    double f = 0.0;
    int evals = 0;
};

SimplexResult nelder_mead_box(const std::function<double(const std::vector<double>&)>& f,
                              std::vector<double> x0, const std::vector<double>& step,
                              const std::vector<double>& lo, const std::vector<double>& hi,
                              int max_evals, double ftol) {
    const std::size_t n = x0.size();
    auto clamp_point = [&](std::vector<double>& p) {
        for (std::size_t i = 0; i < n; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    };
    clamp_point(x0);

    std::vector<std::vector<double>> verts(n + 1, x0);
    std::vector<double> fv(n + 1);
    int evals = 0;
    auto eval = [&](const std::vector<double>& p) {
        ++evals;
        return f(p);
    };
    for (std::size_t i = 0; i < n; ++i) {
        verts[i + 1][i] += step[i];
        clamp_point(verts[i + 1]);
    }
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(verts[i]);

    while (evals < max_evals) {
        std::vector<std::size_t> order(n + 1);
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::abs(fv[worst] - fv[best]) <=
            ftol * (std::abs(fv[best]) + std::abs(fv[worst]) + 1e-300))
            break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t d = 0; d < n; ++d) centroid[d] += verts[i][d];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double coeff) {
            std::vector<double> p(n);
            for (std::size_t d = 0; d < n; ++d)
                p[d] = centroid[d] + coeff * (centroid[d] - verts[worst][d]);
            clamp_point(p);
            return p;
        };

        auto reflected = blend(1.0);
        const double fr = eval(reflected);
        if (fr < fv[best]) {
            auto expanded = blend(2.0);
            const double fe = eval(expanded);
            if (fe < fr) {
                verts[worst] = expanded;
                fv[worst] = fe;
            } else {
                verts[worst] = reflected;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            verts[worst] = reflected;
            fv[worst] = fr;
        } else {
            auto contracted = blend(-0.5);
            const double fc = eval(contracted);
            if (fc < fv[worst]) {
                verts[worst] = contracted;
                fv[worst] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t d = 0; d < n; ++d)
                        verts[i][d] = verts[best][d] + 0.5 * (verts[i][d] - verts[best][d]);
                    fv[i] = eval(verts[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return {verts[best], fv[best], evals};
}

}  // namespace

GarchFit fit_garch11(std::span<const double> r) {
    const std::size_t n = r.size();
    if (n < 500) throw Error("fit_garch11: need at least 500 observations");

    // Standardize: alpha and beta are invariant under scaling, omega is
    // mapped back at the end.
    const BasicMoments bm = basic_moments(r);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (r[i] - bm.mean) / bm.stdev;

    auto nll = [&](const std::vector<double>& p) {
        const double omega = p[0], alpha = p[1], beta = p[2];
        if (omega <= 0.0 || alpha < 0.0 || beta < 0.0 || alpha + beta >= 1.0) return 1e100;
        double h = 1.0;  // unconditional variance of standardized series
        double acc = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            acc += std::log(h) + z[t] * z[t] / h;
            h = omega + alpha * z[t] * z[t] + beta * h;
            if (!(h > 1e-12) || !std::isfinite(h)) return 1e100;
        }
        return 0.5 * acc;
    };

    const std::vector<double> lo = {1e-8, 0.0, 0.0};
    const std::vector<double> hi = {10.0, 0.999, 0.999};
    const std::vector<std::vector<double>> starts = {
        {0.05, 0.05, 0.90}, {0.20, 0.10, 0.60}, {0.90, 0.05, 0.05}};

    GarchFit fit;
    double best = std::numeric_limits<double>::infinity();
    double best_start_value = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) {
        best_start_value = std::min(best_start_value, nll(start));
        const auto res = nelder_mead_box(nll, start, {0.02, 0.02, 0.05}, lo, hi, 400, 1e-10);
        if (res.f < best) {
            best = res.f;
            fit.omega = res.x[0] * bm.stdev * bm.stdev;
            fit.alpha = res.x[1];
            fit.beta = res.x[2];
            fit.neg_loglik = res.f;
        }
    }
    // Flagged, not thrown: a sum from a stuck fit still enters the moment
    // vector and gets down-weighted through the bootstrap covariance.
    fit.converged = best < best_start_value && std::isfinite(best);
    if (fit.alpha + fit.beta >= 1.0) {
        const double scale = 0.9999 / (fit.alpha + fit.beta);
        fit.alpha *= scale;
        fit.beta *= scale;
    }
    return fit;
}

double hill_modified_tail(std::span<const double> tail) {
    if (tail.size() < 50) throw Error("hill_modified: need at least 50 tail observations");
    std::vector<double> x(tail.begin(), tail.end());
    std::sort(x.begin(), x.end());
    if (x.front() <= 0.0) throw Error("hill_modified: tail values must be positive");
    const double x_min = x.front();
    const double x_max = x.back() / x_min;  // work on the scale-free sample
    if (x_max <= 1.0) throw Error("hill_modified: degenerate tail (all values equal)");

    double mean_ln = 0.0;
    for (double v : x) mean_ln += std::log(v / x_min);
    mean_ln /= static_cast<double>(x.size());

    // Truncated-Pareto likelihood score; root is the tail index.
    auto g = [&](double a) {
        const double pmax = std::pow(x_max, -a);
        return 1.0 / a + std::log(x_max) * pmax / (pmax - 1.0) - mean_ln;
    };

    double lo = 0.1, hi = 20.0;
    double glo = g(lo), ghi = g(hi);
    if (!(glo * ghi < 0.0)) throw Error("hill_modified: no sign change in bracket (0.1, 20]");
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0) return mid;
        if (glo * gm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            glo = gm;
        }
    }
    return 0.5 * (lo + hi);
}

double hill_modified(std::span<const double> r) {
    std::vector<double> abs_r;
    abs_r.reserve(r.size());
    for (double v : r)
        if (v != 0.0) abs_r.push_back(std::abs(v));
    if (abs_r.size() < 50) throw Error("hill_modified: too few non-zero returns");
    std::vector<double> sorted = abs_r;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[static_cast<std::size_t>(
        std::floor(0.95 * static_cast<double>(sorted.size() - 1)))];
    std::vector<double> tail;
    for (double v : abs_r)
        if (v > cutoff) tail.push_back(v);
    return hill_modified_tail(tail);
}

bool MomentVector::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

MomentVector compute_moments(std::span<const double> returns,
                             std::span<const double> reference) {
    MomentVector m;
    m.values.fill(kNaN);
    auto guard = [](auto&& fn) {
        try {
            return fn();
        } catch (const Error&) {
            return kNaN;
        }
    };

    try {
        const BasicMoments bm = basic_moments(returns);
        m.values[kMean] = bm.mean;
        m.values[kStDev] = bm.stdev;
        m.values[kKurtosis] = bm.kurtosis;
    } catch (const Error&) {
    }
    m.values[kKolmogorovSmirnov] = guard([&] { return ks_statistic(returns, reference); });
    m.values[kHurst] = guard([&] { return hurst_exponent(returns); });
    m.values[kGph] = guard([&] {
        std::vector<double> abs_r(returns.size());
        for (std::size_t i = 0; i < returns.size(); ++i) abs_r[i] = std::abs(returns[i]);
        return gph_estimate(abs_r);
    });
    m.values[kAdf] = guard([&] { return adf_statistic(returns); });
    try {
        const GarchFit fit = fit_garch11(returns);
        m.values[kGarchSum] = fit.sum();
        m.garch_converged = fit.converged;
    } catch (const Error&) {
        m.garch_converged = false;
    }
    m.values[kHill] = guard([&] { return hill_modified(returns); });
    return m;
}

void write_moments_csv(const MomentVector& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_moments_csv: cannot open '" + path + "'");
    out << "Moment,Value\n";
    char buf[64];
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", m.values[i]);
        out << kMomentNames[i] << ',' << buf << '\n';
    }
    out << "GarchConverged," << (m.garch_converged ? 1 : 0) << '\n';
}

MomentVector read_moments_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_moments_csv: cannot open '" + path + "'");
    MomentVector m;
    m.values.fill(kNaN);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("read_moments_csv: line " + std::to_string(line_no));
        const std::string name = line.substr(0, comma);
        const std::string value = line.substr(comma + 1);
        if (name == "GarchConverged") {
            m.garch_converged = value == "1";
            continue;
        }
        bool found = false;
        for (std::size_t i = 0; i < kMomentNames.size(); ++i) {
            if (name == kMomentNames[i]) {
                m.values[i] = std::stod(value);
                found = true;
                break;
            }
        }
        if (!found)
            throw ParseError("read_moments_csv: line " + std::to_string(line_no) +
                             ": unknown moment '" + name + "'");
    }
    return m;
}

void write_returns_csv(std::span<const double> returns, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_returns_csv: cannot open '" + path + "'");
    out << "Return\n";
    char buf[64];
    for (double r : returns) {
        std::snprintf(buf, sizeof(buf), "%.17g", r);
        out << buf << '\n';
    }
}

std::vector<double> read_returns_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_returns_csv: cannot open '" + path + "'");
    std::vector<double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "Return") continue;
        try {
            out.push_back(std::stod(line));
        } catch (const std::exception&) {
            throw ParseError("read_returns_csv: line " + std::to_string(line_no) + ": bad value '" +
                             line + "'");
        }
    }
    return out;
}

}  // namespace atex
