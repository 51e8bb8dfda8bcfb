#include "atex/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "atex/mirror.hpp"
#include "atex/svg.hpp"

namespace atex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Snapshot snapshot_of(const MirrorBook& mirror, TimestampMs t_ms, int depth) {
    Snapshot snap;
    snap.t_ms = t_ms;
    snap.best_bid = mirror.best_bid();
    snap.best_ask = mirror.best_ask();
    snap.spread = mirror.spread();
    snap.mid = mirror.mid();
    snap.micro = mirror.micro_price();
    snap.imbalance = mirror.imbalance();
    snap.bid_depth = mirror.top_level_volumes(Side::Buy, static_cast<std::size_t>(depth));
    snap.ask_depth = mirror.top_level_volumes(Side::Sell, static_cast<std::size_t>(depth));
    return snap;
}

}  // namespace

TaqReplay replay_taq(const std::vector<TaqRecord>& records, Price initial_bid, Price initial_ask,
                     Price initial_reference, int snapshot_depth) {
    TaqReplay replay;
    MirrorBook mirror(initial_bid, initial_ask);
    Price reference = initial_reference;
    replay.snapshots.push_back(snapshot_of(mirror, records.empty() ? 0 : records.front().datetime_ms,
                                           snapshot_depth));

    std::optional<ReplayTrade> open_trade;
    auto finalize = [&] {
        if (!open_trade) return;
        open_trade->post_mid = mirror.mid().to_double();
        open_trade->post_micro = mirror.micro_price().to_double();
        if (open_trade->executed > 0) reference = open_trade->deepest_price;
        replay.trades.push_back(*open_trade);
        open_trade.reset();
    };

    for (const auto& row : records) {
        const bool is_split_leg = row.type == EventKind::Trade && row.price > 0 && open_trade &&
                                  row.side == open_trade->taker_side;
        if (!is_split_leg) finalize();

        switch (row.type) {
            case EventKind::New: {
                MarketEvent event{row.datetime_ms, EventKind::New, row.side, row.trader,
                                  {{row.client_order_id, row.price, row.volume}}};
                mirror.apply_event(event);
                break;
            }
            case EventKind::Trade: {
                if (row.price == 0) {
                    ReplayTrade trade;
                    trade.t_ms = row.datetime_ms;
                    trade.taker_side = row.side;
                    trade.submitted = row.volume;
                    trade.reference_before = reference;
                    trade.pre_mid = mirror.mid().to_double();
                    trade.pre_micro = mirror.micro_price().to_double();
                    open_trade = trade;
                } else {
                    MarketEvent event{row.datetime_ms, EventKind::Trade, row.side, row.trader,
                                      {{row.client_order_id, row.price, row.volume}}};
                    mirror.apply_event(event);
                    if (open_trade) {
                        open_trade->executed += row.volume;
                        open_trade->deepest_price = row.price;
                        if (open_trade->first_leg_price == 0.0)
                            open_trade->first_leg_price = static_cast<double>(row.price);
                    } else {
                        // Execution without an unbroken row: a marketable
                        // limit; book state still updates.
                        reference = row.price;
                    }
                }
                break;
            }
            case EventKind::Cancelled: {
                MarketEvent event{row.datetime_ms, EventKind::Cancelled, row.side, row.trader,
                                  {{row.client_order_id, 0, 0}}};
                mirror.apply_event(event);
                break;
            }
        }
        replay.snapshots.push_back(snapshot_of(mirror, row.datetime_ms, snapshot_depth));
    }
    finalize();

    replay.final_bids = mirror.level_volumes(Side::Buy);
    replay.final_asks = mirror.level_volumes(Side::Sell);
    return replay;
}

Level1Series level1_series_from_taq(const std::vector<TaqRecord>& records) {
    Level1Series series;
    std::optional<std::pair<double, Volume>> bid, ask;
    double last_micro = kNaN;
    auto push_micro = [&](TimestampMs t_ms) {
        if (!bid || !ask) return;
        const double mid = (bid->first + ask->first) / 2.0;
        const double vb = static_cast<double>(bid->second);
        const double va = static_cast<double>(ask->second);
        const double micro =
            (vb > 0.0 && va > 0.0) ? (va * bid->first + vb * ask->first) / (va + vb) : mid;
        series.quotes.push_back({t_ms, mid});
        if (micro != last_micro) {
            series.micro.push_back(micro);
            last_micro = micro;
        }
    };
    for (const auto& row : records) {
        if (row.type == EventKind::New) {
            auto& quote = row.side == Side::Buy ? bid : ask;
            quote = {static_cast<double>(row.price), row.volume};
            push_micro(row.datetime_ms);
        } else if (row.type == EventKind::Trade && row.price > 0) {
            series.trades.push_back({row.datetime_ms, static_cast<double>(row.price), row.volume, 0});
        }
    }
    return series;
}

AcfResult autocorrelation(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    AcfResult result;
    if (n < 2) throw Error("autocorrelation: need at least 2 observations");
    result.effective_max_lag = std::min(max_lag, n - 1);
    result.truncated = result.effective_max_lag < max_lag;
    result.band = 3.0 / std::sqrt(static_cast<double>(n));

    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double denom = 0.0;
    for (double v : x) denom += (v - mean) * (v - mean);
    if (denom == 0.0) throw Error("autocorrelation: constant series");
    result.values.resize(result.effective_max_lag);
    for (std::size_t k = 1; k <= result.effective_max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) num += (x[t] - mean) * (x[t + k] - mean);
        result.values[k - 1] = num / denom;
    }
    return result;
}

ReturnAcf return_acf(std::span<const double> returns, std::size_t max_lag) {
    if (returns.size() <= max_lag)
        max_lag = returns.empty() ? 0 : returns.size() - 1;
    ReturnAcf out;
    out.plain = autocorrelation(returns, max_lag);
    std::vector<double> abs_r(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) abs_r[i] = std::abs(returns[i]);
    out.absolute = autocorrelation(abs_r, max_lag);
    return out;
}

AcfResult order_flow_acf(std::span<const int> signs, std::size_t max_lag) {
    std::vector<double> x(signs.size());
    for (std::size_t i = 0; i < signs.size(); ++i) x[i] = static_cast<double>(signs[i]);
    if (x.size() < max_lag + 1) {
        // Fewer trades than requested lags: shrink and flag.
        return autocorrelation(x, x.size() - 1);
    }
    return autocorrelation(x, max_lag);
}

SignedTrades lee_ready_sign(const std::vector<TradeTick>& trades,
                            const std::vector<QuoteTick>& quotes) {
    SignedTrades out;
    out.signs.resize(trades.size(), 0);
    std::size_t qi = 0;
    double last_price = kNaN;
    int last_sign = 0;
    double prevailing_mid = kNaN;
    for (std::size_t i = 0; i < trades.size(); ++i) {
        const auto& trade = trades[i];
        while (qi < quotes.size() && quotes[qi].t_ms < trade.t_ms) {
            prevailing_mid = quotes[qi].mid;
            ++qi;
        }
        int sign = 0;
        if (std::isnan(prevailing_mid)) {
            ++out.skipped;
        } else if (trade.price > prevailing_mid) {
            sign = 1;
        } else if (trade.price < prevailing_mid) {
            sign = -1;
        } else if (!std::isnan(last_price)) {
            // Tick rule at the mid; a zero change carries the previous sign.
            if (trade.price > last_price)
                sign = 1;
            else if (trade.price < last_price)
                sign = -1;
            else
                sign = last_sign;
            if (sign == 0) ++out.skipped;
        } else {
            ++out.skipped;
        }
        out.signs[i] = sign;
        last_price = trade.price;
        if (sign != 0) last_sign = sign;
    }
    return out;
}

TailFit tail_fit(std::span<const double> returns, double percentile) {
    if (!(percentile > 0.0 && percentile < 1.0)) throw Error("tail_fit: bad percentile");
    std::vector<double> sorted(returns.begin(), returns.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) throw Error("tail_fit: empty sample");
    const double cutoff = sorted[static_cast<std::size_t>(
        std::floor(percentile * static_cast<double>(sorted.size() - 1)))];
    if (!(cutoff > 0.0)) throw Error("tail_fit: cutoff percentile is not positive");

    std::vector<double> tail;
    for (double v : sorted)
        if (v > cutoff) tail.push_back(v);
    if (tail.size() < 50) throw Error("tail_fit: fewer than 50 tail observations");

    double sum_log = 0.0;
    for (double v : tail) sum_log += std::log(v / cutoff);
    if (sum_log <= 0.0) throw Error("tail_fit: degenerate tail");
    const double n = static_cast<double>(tail.size());

    TailFit fit;
    fit.alpha = 1.0 + n / sum_log;
    fit.x_min = cutoff;
    fit.tail_count = tail.size();
    // QQ against the fitted complementary CDF (x/x_min)^(1 - alpha).
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const double p = (static_cast<double>(i) + 0.5) / n;
        const double fitted = cutoff * std::pow(1.0 - p, -1.0 / (fit.alpha - 1.0));
        fit.qq.emplace_back(tail[i], fitted);
    }
    return fit;
}

std::pair<ImpactCurve, ImpactCurve> price_impact(const std::vector<ImpactInput>& trades) {
    std::map<int, double> day_volume;
    std::map<int, std::size_t> day_trades;
    for (const auto& t : trades) {
        if (t.volume <= 0 || t.sign == 0) continue;
        day_volume[t.day] += static_cast<double>(t.volume);
        day_trades[t.day] += 1;
    }
    std::size_t total_trades = 0;
    for (const auto& [day, count] : day_trades) total_trades += count;
    const double days = static_cast<double>(day_trades.size());

    constexpr int kBins = 20;
    const double lo = 0.1, hi = 10.0;
    auto make_curve = [&](Side side) {
        ImpactCurve curve;
        curve.side = side;
        curve.bins.resize(kBins);
        for (int b = 0; b < kBins; ++b) {
            curve.bins[static_cast<std::size_t>(b)].omega_lo =
                lo * std::pow(hi / lo, static_cast<double>(b) / kBins);
            curve.bins[static_cast<std::size_t>(b)].omega_hi =
                lo * std::pow(hi / lo, static_cast<double>(b + 1) / kBins);
        }
        return curve;
    };
    ImpactCurve buyer = make_curve(Side::Buy);
    ImpactCurve seller = make_curve(Side::Sell);
    if (day_trades.empty()) return {buyer, seller};

    std::vector<std::array<double, 2>> sums_buyer(kBins, {0.0, 0.0});
    std::vector<std::array<double, 2>> sums_seller(kBins, {0.0, 0.0});
    std::vector<std::size_t> count_buyer(kBins, 0), count_seller(kBins, 0);

    const double trades_per_day = static_cast<double>(total_trades) / days;
    for (const auto& t : trades) {
        if (t.volume <= 0 || t.sign == 0) continue;
        const double total = day_volume[t.day];
        if (total <= 0.0) continue;  // day with zero volume: excluded
        const double omega = static_cast<double>(t.volume) / total * trades_per_day;
        if (omega < lo || omega > hi) continue;
        int b = static_cast<int>(std::floor(std::log(omega / lo) / std::log(hi / lo) * kBins));
        b = std::clamp(b, 0, kBins - 1);
        const double impact = (std::log(t.post_mid) - std::log(t.pre_mid)) *
                              (t.sign > 0 ? 1.0 : -1.0);
        auto& sums = t.sign > 0 ? sums_buyer : sums_seller;
        auto& counts = t.sign > 0 ? count_buyer : count_seller;
        sums[static_cast<std::size_t>(b)][0] += omega;
        sums[static_cast<std::size_t>(b)][1] += impact;
        counts[static_cast<std::size_t>(b)] += 1;
    }

    auto fill = [&](ImpactCurve& curve, const std::vector<std::array<double, 2>>& sums,
                    const std::vector<std::size_t>& counts) {
        for (int b = 0; b < kBins; ++b) {
            auto& bin = curve.bins[static_cast<std::size_t>(b)];
            bin.count = counts[static_cast<std::size_t>(b)];
            if (bin.count == 0) {
                bin.mean_omega = kNaN;
                bin.mean_impact = kNaN;
                continue;
            }
            bin.mean_omega =
                sums[static_cast<std::size_t>(b)][0] / static_cast<double>(bin.count);
            bin.mean_impact =
                sums[static_cast<std::size_t>(b)][1] / static_cast<double>(bin.count);
        }
    };
    fill(buyer, sums_buyer, count_buyer);
    fill(seller, sums_seller, count_seller);
    return {buyer, seller};
}

double impact_loglog_slope(const ImpactCurve& curve) {
    std::vector<double> lx, ly;
    for (const auto& bin : curve.bins) {
        if (bin.count == 0 || !(bin.mean_impact > 0.0) || !(bin.mean_omega > 0.0)) continue;
        lx.push_back(std::log(bin.mean_omega));
        ly.push_back(std::log(bin.mean_impact));
    }
    if (lx.size() < 2) return kNaN;
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) return kNaN;
    return sxy / sxx;
}

DepthProfile depth_profile(const std::vector<Snapshot>& snapshots, std::size_t levels) {
    if (snapshots.empty()) throw Error("depth_profile: no snapshots");
    DepthProfile profile;
    profile.bid_mean.assign(levels, 0.0);
    profile.ask_mean.assign(levels, 0.0);
    for (const auto& snap : snapshots) {
        for (std::size_t i = 0; i < levels; ++i) {
            profile.bid_mean[i] +=
                i < snap.bid_depth.size() ? static_cast<double>(snap.bid_depth[i]) : 0.0;
            profile.ask_mean[i] +=
                i < snap.ask_depth.size() ? static_cast<double>(snap.ask_depth[i]) : 0.0;
        }
    }
    const double n = static_cast<double>(snapshots.size());
    for (std::size_t i = 0; i < levels; ++i) {
        profile.bid_mean[i] /= n;
        profile.ask_mean[i] /= n;
    }
    return profile;
}

std::array<std::vector<double>, 5> default_sensitivity_values(const ThetaBox& box) {
    std::array<std::vector<double>, 5> values;
    for (std::size_t p = 0; p < 5; ++p) {
        for (int i = 0; i < 5; ++i)
            values[p].push_back(box.lo[p] +
                                (box.hi[p] - box.lo[p]) * static_cast<double>(i) / 4.0);
    }
    return values;
}

SensitivityGrid run_sensitivity(const SessionConfig& base,
                                const std::array<std::vector<double>, 5>& values,
                                std::uint64_t seed, std::span<const double> reference_returns,
                                const std::function<void(std::size_t, std::size_t)>& progress) {
    for (const auto& v : values)
        if (v.empty()) throw Error("run_sensitivity: every parameter needs at least one value");

    SensitivityGrid grid;
    grid.values = values;

    std::vector<double> reference(reference_returns.begin(), reference_returns.end());
    if (reference.empty()) {
        // No empirical series supplied: the base-config run is the KS anchor.
        SessionConfig ref_config = base;
        ref_config.seed = seed;
        const SessionResult ref = run_session(ref_config);
        const auto micro = micro_price_series(ref.snapshots);
        if (micro.size() >= 2) reference = log_returns(micro);
        if (reference.empty()) reference.assign(2, 0.0);
    }

    std::size_t total = 1;
    for (const auto& v : values) total *= v.size();

    for (std::size_t index = 0; index < total; ++index) {
        SensitivityCell cell;
        cell.index = index;
        std::size_t rest = index;
        for (std::size_t p = 0; p < 5; ++p) {
            const std::size_t count = values[p].size();
            cell.value_index[p] = static_cast<int>(rest % count);
            rest /= count;
            cell.theta[p] = values[p][static_cast<std::size_t>(cell.value_index[p])];
        }
        try {
            SessionConfig config = base;
            config.theta = theta_from_array(cell.theta);
            config.seed = seed + index;
            const SessionResult result = run_session(config);
            const auto micro = micro_price_series(result.snapshots);
            const auto mid = mid_price_series(result.snapshots);
            if (micro.size() < 2 || mid.size() < 2)
                throw Error("cell produced no price movement");
            cell.micro_moments = compute_moments(log_returns(micro), reference);
            cell.mid_moments = compute_moments(log_returns(mid), reference);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        grid.cells.push_back(std::move(cell));
        if (progress) progress(index + 1, total);
    }
    return grid;
}

std::vector<ChainPoint> chains_from_grid(const SensitivityGrid& grid, bool micro) {
    std::vector<ChainPoint> chains;
    for (const auto& cell : grid.cells) {
        if (!cell.ok) continue;
        const MomentVector& m = micro ? cell.micro_moments : cell.mid_moments;
        ChainPoint point;
        point.theta = cell.theta;
        bool usable = true;
        for (std::size_t j = 0; j < 9; ++j) {
            point.moments[j] = m.values[j];
            if (!std::isfinite(m.values[j])) usable = false;
        }
        if (usable) chains.push_back(point);
    }
    return chains;
}

std::vector<ChainPoint> read_chains_csv(const std::string& path, bool micro) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_chains_csv: cannot open '" + path + "'");
    std::vector<ChainPoint> chains;
    std::string line;
    std::size_t line_no = 0;
    // cells.csv layout: Cell,5 params,Ok,Error,9 mid moments,9 micro moments.
    const std::size_t moment_offset = micro ? 17 : 8;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 26)
            throw ParseError("read_chains_csv: line " + std::to_string(line_no) +
                             ": expected 26 columns");
        if (fields[6] != "1") continue;  // failed cell
        try {
            ChainPoint point;
            for (std::size_t p = 0; p < 5; ++p) point.theta[p] = std::stod(fields[1 + p]);
            bool usable = true;
            for (std::size_t m = 0; m < 9; ++m) {
                point.moments[m] = std::stod(fields[moment_offset + m]);
                if (!std::isfinite(point.moments[m])) usable = false;
            }
            if (usable) chains.push_back(point);
        } catch (const std::exception&) {
            throw ParseError("read_chains_csv: line " + std::to_string(line_no) + ": bad number");
        }
    }
    return chains;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;  // constant column: correlation 0
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::array<std::array<CorrelationCell, 9>, 5> parameter_moment_correlations(
    const SensitivityGrid& grid, int n_boot, std::uint64_t seed) {
    const std::vector<ChainPoint> chains = chains_from_grid(grid, true);
    std::array<std::array<CorrelationCell, 9>, 5> out{};
    if (chains.size() < 3) return out;

    const std::size_t n = chains.size();
    for (std::size_t p = 0; p < 5; ++p) {
        for (std::size_t m = 0; m < 9; ++m) {
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = chains[i].theta[p];
                y[i] = chains[i].moments[m];
            }
            out[p][m].estimate = pearson(x, y);

            std::vector<double> boot(static_cast<std::size_t>(n_boot));
            Rng rng = Rng::stream(seed, p * 9 + m);
            std::vector<double> bx(n), by(n);
            for (int b = 0; b < n_boot; ++b) {
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t pick = static_cast<std::size_t>(rng.below(n));
                    bx[i] = chains[pick].theta[p];
                    by[i] = chains[pick].moments[m];
                }
                boot[static_cast<std::size_t>(b)] = pearson(bx, by);
            }
            std::sort(boot.begin(), boot.end());
            out[p][m].lower = boot[static_cast<std::size_t>(0.025 * (n_boot - 1))];
            out[p][m].upper = boot[static_cast<std::size_t>(0.975 * (n_boot - 1))];
        }
    }
    return out;
}

namespace {

void write_cells_csv(const SensitivityGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_sensitivity_outputs: cannot open '" + path + "'");
    out << "Cell,N,delta,kappa,nu,sigma,Ok,Error";
    for (const char* name : kMomentNames) out << ",Mid" << name;
    for (const char* name : kMomentNames) out << ",Micro" << name;
    out << '\n';
    char buf[64];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        out << ',' << buf;
    };
    for (const auto& cell : grid.cells) {
        std::string error = cell.error;
        std::replace(error.begin(), error.end(), ',', ';');
        std::replace(error.begin(), error.end(), '\n', ' ');
        out << cell.index;
        for (double t : cell.theta) emit(t);
        out << ',' << (cell.ok ? 1 : 0) << ',' << error;
        for (double v : cell.mid_moments.values) emit(v);
        for (double v : cell.micro_moments.values) emit(v);
        out << '\n';
    }
}

struct BoxStats {
    double min = kNaN, q1 = kNaN, median = kNaN, q3 = kNaN, max = kNaN, mean = kNaN;
    std::size_t count = 0;
};

BoxStats box_stats(std::vector<double> v) {
    BoxStats s;
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
            v.end());
    s.count = v.size();
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(v.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
    };
    s.min = v.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = v.back();
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    return s;
}

void write_marginals_csv(const SensitivityGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_sensitivity_outputs: cannot open '" + path + "'");
    out << "Parameter,Value,Series,Moment,Count,Min,Q1,Median,Q3,Max,Mean\n";
    char buf[64];
    for (std::size_t p = 0; p < 5; ++p) {
        for (std::size_t vi = 0; vi < grid.values[p].size(); ++vi) {
            for (int series = 0; series < 2; ++series) {
                for (std::size_t m = 0; m < 9; ++m) {
                    std::vector<double> values;
                    for (const auto& cell : grid.cells) {
                        if (!cell.ok || cell.value_index[p] != static_cast<int>(vi)) continue;
                        const MomentVector& mv =
                            series == 0 ? cell.mid_moments : cell.micro_moments;
                        values.push_back(mv.values[m]);
                    }
                    const BoxStats s = box_stats(std::move(values));
                    out << kParamNames[p] << ',' << grid.values[p][vi] << ','
                        << (series == 0 ? "mid" : "micro") << ',' << kMomentNames[m] << ','
                        << s.count;
                    for (double v : {s.min, s.q1, s.median, s.q3, s.max, s.mean}) {
                        std::snprintf(buf, sizeof(buf), "%.12g", v);
                        out << ',' << buf;
                    }
                    out << '\n';
                }
            }
        }
    }
}

void write_surfaces_csv(const SensitivityGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_sensitivity_outputs: cannot open '" + path + "'");
    out << "Param1,Param2,Value1,Value2,Series,Moment,CellCount,Mean\n";
    char buf[64];
    for (std::size_t p = 0; p < 5; ++p) {
        for (std::size_t q = p + 1; q < 5; ++q) {
            for (std::size_t vi = 0; vi < grid.values[p].size(); ++vi) {
                for (std::size_t vj = 0; vj < grid.values[q].size(); ++vj) {
                    for (int series = 0; series < 2; ++series) {
                        std::array<double, 9> sums{};
                        std::array<std::size_t, 9> counts{};
                        for (const auto& cell : grid.cells) {
                            if (!cell.ok || cell.value_index[p] != static_cast<int>(vi) ||
                                cell.value_index[q] != static_cast<int>(vj))
                                continue;
                            const MomentVector& mv =
                                series == 0 ? cell.mid_moments : cell.micro_moments;
                            for (std::size_t m = 0; m < 9; ++m) {
                                if (!std::isfinite(mv.values[m])) continue;
                                sums[m] += mv.values[m];
                                counts[m] += 1;
                            }
                        }
                        for (std::size_t m = 0; m < 9; ++m) {
                            const double mean =
                                counts[m] > 0 ? sums[m] / static_cast<double>(counts[m]) : kNaN;
                            std::snprintf(buf, sizeof(buf), "%.12g", mean);
                            out << kParamNames[p] << ',' << kParamNames[q] << ','
                                << grid.values[p][vi] << ',' << grid.values[q][vj] << ','
                                << (series == 0 ? "mid" : "micro") << ',' << kMomentNames[m] << ','
                                << counts[m] << ',' << buf << '\n';
                        }
                    }
                }
            }
        }
    }
}

void write_correlations_csv(const SensitivityGrid& grid, const std::string& path) {
    const auto corr = parameter_moment_correlations(grid);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_sensitivity_outputs: cannot open '" + path + "'");
    out << "Parameter,Moment,Correlation,Lower,Upper\n";
    char buf[64];
    for (std::size_t p = 0; p < 5; ++p) {
        for (std::size_t m = 0; m < 9; ++m) {
            out << kParamNames[p] << ',' << kMomentNames[m];
            for (double v : {corr[p][m].estimate, corr[p][m].lower, corr[p][m].upper}) {
                std::snprintf(buf, sizeof(buf), "%.12g", v);
                out << ',' << buf;
            }
            out << '\n';
        }
    }
}

}  // namespace

void write_sensitivity_outputs(const SensitivityGrid& grid, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_cells_csv(grid, (base / "cells.csv").string());
    write_marginals_csv(grid, (base / "marginals.csv").string());
    write_surfaces_csv(grid, (base / "surfaces.csv").string());
    write_correlations_csv(grid, (base / "correlations.csv").string());
}

StylisedReport build_stylised_report(const TaqReplay& replay,
                                     std::span<const double> reference_returns) {
    StylisedReport report;
    const auto micro = micro_price_series(replay.snapshots);
    if (micro.size() < 2) throw Error("build_stylised_report: no price movement in session");
    report.micro_returns = log_returns(micro);
    report.moments = compute_moments(
        report.micro_returns,
        reference_returns.empty() ? std::span<const double>(report.micro_returns)
                                  : reference_returns);
    report.racf = return_acf(report.micro_returns, 500);

    // Order flow: simulated data carries true signs (the taker side).
    report.trade_count = replay.trades.size();
    std::vector<int> true_signs;
    std::vector<TradeTick> trade_ticks;
    std::vector<QuoteTick> quote_ticks;
    for (const auto& t : replay.trades) {
        if (t.executed <= 0) continue;
        true_signs.push_back(t.taker_side == Side::Buy ? 1 : -1);
        trade_ticks.push_back({t.t_ms, t.first_leg_price, t.executed,
                               t.taker_side == Side::Buy ? 1 : -1});
    }
    for (const auto& snap : replay.snapshots)
        quote_ticks.push_back({snap.t_ms, snap.mid.to_double()});
    if (true_signs.size() >= 2) report.flow_acf = order_flow_acf(true_signs);

    const SignedTrades inferred = lee_ready_sign(trade_ticks, quote_ticks);
    std::size_t agree = 0, considered = 0;
    for (std::size_t i = 0; i < trade_ticks.size(); ++i) {
        if (inferred.signs[i] == 0) continue;
        ++considered;
        if (inferred.signs[i] == trade_ticks[i].true_sign) ++agree;
    }
    report.lee_ready_agreement =
        considered > 0 ? static_cast<double>(agree) / static_cast<double>(considered) : 0.0;

    try {
        report.upper_tail = tail_fit(report.micro_returns, 0.95);
    } catch (const Error&) {
    }
    try {
        std::vector<double> negated(report.micro_returns.size());
        for (std::size_t i = 0; i < negated.size(); ++i) negated[i] = -report.micro_returns[i];
        report.lower_tail = tail_fit(negated, 0.95);
    } catch (const Error&) {
    }

    report.depth = depth_profile(replay.snapshots, 7);

    std::vector<ImpactInput> impacts;
    for (const auto& t : replay.trades) {
        if (t.executed <= 0) continue;
        impacts.push_back({t.pre_mid, t.post_mid, t.executed,
                           t.taker_side == Side::Buy ? 1 : -1, 0});
    }
    auto [buyer, seller] = price_impact(impacts);
    report.buyer_impact = std::move(buyer);
    report.seller_impact = std::move(seller);
    report.buyer_slope = impact_loglog_slope(report.buyer_impact);
    report.seller_slope = impact_loglog_slope(report.seller_impact);
    return report;
}

namespace {

void write_acf_csv(const AcfResult& acf, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_stylised_report: cannot open '" + path + "'");
    out << "Lag,Acf,Band\n";
    char buf[64];
    for (std::size_t k = 0; k < acf.values.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.12g", acf.values[k]);
        out << (k + 1) << ',' << buf << ',' << format_fixed(acf.band, 8) << '\n';
    }
}

SvgSeries acf_series(const AcfResult& acf, const std::string& color) {
    SvgSeries s;
    s.color = color;
    for (std::size_t k = 0; k < acf.values.size(); ++k)
        s.points.emplace_back(static_cast<double>(k + 1), acf.values[k]);
    return s;
}

void write_impact_csv(const ImpactCurve& curve, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_stylised_report: cannot open '" + path + "'");
    out << "OmegaLo,OmegaHi,MeanOmega,MeanImpact,Count\n";
    char buf[64];
    for (const auto& bin : curve.bins) {
        out << format_fixed(bin.omega_lo, 6) << ',' << format_fixed(bin.omega_hi, 6) << ',';
        std::snprintf(buf, sizeof(buf), "%.12g", bin.mean_omega);
        out << buf << ',';
        std::snprintf(buf, sizeof(buf), "%.12g", bin.mean_impact);
        out << buf << ',' << bin.count << '\n';
    }
}

}  // namespace

void write_stylised_report(const StylisedReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);

    write_returns_csv(report.micro_returns, (base / "micro_returns.csv").string());
    write_moments_csv(report.moments, (base / "moments.csv").string());
    write_acf_csv(report.racf.plain, (base / "return_acf.csv").string());
    write_acf_csv(report.racf.absolute, (base / "abs_return_acf.csv").string());
    write_acf_csv(report.flow_acf, (base / "order_flow_acf.csv").string());
    write_impact_csv(report.buyer_impact, (base / "impact_buyer.csv").string());
    write_impact_csv(report.seller_impact, (base / "impact_seller.csv").string());

    {
        std::ofstream out((base / "tail_fit.csv").string(), std::ios::binary);
        out << "Tail,Alpha,XMin,Count\n";
        out << "upper," << report.upper_tail.alpha << ',' << report.upper_tail.x_min << ','
            << report.upper_tail.tail_count << '\n';
        out << "lower," << report.lower_tail.alpha << ',' << report.lower_tail.x_min << ','
            << report.lower_tail.tail_count << '\n';
    }
    {
        std::ofstream out((base / "depth_profile.csv").string(), std::ios::binary);
        out << "Level,BidMeanVolume,AskMeanVolume\n";
        for (std::size_t i = 0; i < report.depth.bid_mean.size(); ++i)
            out << (i + 1) << ',' << format_fixed(report.depth.bid_mean[i], 4) << ','
                << format_fixed(report.depth.ask_mean[i], 4) << '\n';
    }
    {
        std::ofstream out((base / "summary.csv").string(), std::ios::binary);
        out << "Key,Value\n";
        out << "trades," << report.trade_count << '\n';
        out << "lee_ready_agreement," << format_fixed(report.lee_ready_agreement, 6) << '\n';
        out << "buyer_impact_slope," << report.buyer_slope << '\n';
        out << "seller_impact_slope," << report.seller_slope << '\n';
    }

    // Figures; the CSVs above are the canonical outputs.
    write_svg_plot((base / "return_acf.svg").string(),
                   {acf_series(report.racf.plain, "#1f77b4")},
                   {"Log-return autocorrelation", "lag", "acf", false, false});
    write_svg_plot((base / "abs_return_acf.svg").string(),
                   {acf_series(report.racf.absolute, "#d62728")},
                   {"Absolute log-return autocorrelation", "lag", "acf", false, false});
    if (!report.flow_acf.values.empty()) {
        write_svg_plot((base / "order_flow_acf.svg").string(),
                       {acf_series(report.flow_acf, "#2ca02c")},
                       {"Order-flow autocorrelation", "lag", "acf", false, false});
        write_svg_plot((base / "order_flow_acf_log.svg").string(),
                       {acf_series(report.flow_acf, "#2ca02c")},
                       {"Order-flow autocorrelation (log lags)", "lag", "acf", true, false});
    }

    SvgSeries bid_depth{{}, "#1f77b4", true, "bid"};
    SvgSeries ask_depth{{}, "#d62728", true, "ask"};
    for (std::size_t i = 0; i < report.depth.bid_mean.size(); ++i) {
        bid_depth.points.emplace_back(static_cast<double>(i + 1), report.depth.bid_mean[i]);
        ask_depth.points.emplace_back(static_cast<double>(i + 1), report.depth.ask_mean[i]);
    }
    write_svg_plot((base / "depth_profile.svg").string(), {bid_depth, ask_depth},
                   {"Mean depth profile", "level", "mean volume", false, false});

    SvgSeries buyer{{}, "#1f77b4", false, "buyer"};
    SvgSeries seller{{}, "#d62728", false, "seller"};
    for (const auto& bin : report.buyer_impact.bins)
        if (bin.count > 0 && bin.mean_impact > 0.0)
            buyer.points.emplace_back(bin.mean_omega, bin.mean_impact);
    for (const auto& bin : report.seller_impact.bins)
        if (bin.count > 0 && bin.mean_impact > 0.0)
            seller.points.emplace_back(bin.mean_omega, bin.mean_impact);
    write_svg_plot((base / "price_impact.svg").string(), {buyer, seller},
                   {"Price impact", "normalised volume", "mean impact", true, true});

    // Return distribution as a simple density polyline.
    if (report.micro_returns.size() > 10) {
        std::vector<double> sorted = report.micro_returns;
        std::sort(sorted.begin(), sorted.end());
        const double lo = sorted.front(), hi = sorted.back();
        const int bins = 60;
        std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
        if (hi > lo) {
            for (double r : sorted) {
                int b = static_cast<int>((r - lo) / (hi - lo) * bins);
                b = std::clamp(b, 0, bins - 1);
                counts[static_cast<std::size_t>(b)] += 1.0;
            }
            SvgSeries density{{}, "#1f77b4", true, ""};
            for (int b = 0; b < bins; ++b)
                density.points.emplace_back(lo + (hi - lo) * (b + 0.5) / bins,
                                            counts[static_cast<std::size_t>(b)]);
            write_svg_plot((base / "return_distribution.svg").string(), {density},
                           {"Micro-price log-return distribution", "return", "count", false,
                            false});
        }
    }
}

}  // namespace atex
