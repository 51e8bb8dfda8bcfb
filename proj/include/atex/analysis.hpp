#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atex/calibration.hpp"
#include "atex/session.hpp"
#include "atex/taq.hpp"

namespace atex {

// ---------------------------------------------------------------------------
// TAQ replay: rebuilds book state and per-trade context from a session file.

struct ReplayTrade {
    TimestampMs t_ms = 0;
    Side taker_side = Side::Buy;
    Volume submitted = 0;
    Volume executed = 0;
    Price deepest_price = 0;       // deepest level the sweep reached
    Price reference_before = 0;    // dynamic reference price before the order
    double pre_mid = 0.0, post_mid = 0.0;
    double pre_micro = 0.0, post_micro = 0.0;
    double first_leg_price = 0.0;  // execution price at the touched best level
};

struct TaqReplay {
    std::vector<Snapshot> snapshots;
    std::vector<ReplayTrade> trades;
    std::map<Price, Volume> final_bids, final_asks;
};

TaqReplay replay_taq(const std::vector<TaqRecord>& records, Price initial_bid = 9950,
                     Price initial_ask = 10050, Price initial_reference = 10000,
                     int snapshot_depth = 7);

// Level-1 interpretation for empirical files: every New row replaces that
// side's quote; Trade rows are transactions.
struct TradeTick {
    TimestampMs t_ms = 0;
    double price = 0.0;
    Volume volume = 0;
    int true_sign = 0;  // +1 buyer-initiated, -1 seller, 0 unknown
};

struct QuoteTick {
    TimestampMs t_ms = 0;
    double mid = 0.0;
};

struct Level1Series {
    std::vector<double> micro;  // tick-by-tick, consecutive repeats collapsed
    std::vector<QuoteTick> quotes;
    std::vector<TradeTick> trades;
};

Level1Series level1_series_from_taq(const std::vector<TaqRecord>& records);

// ---------------------------------------------------------------------------
// Stylised-fact estimators.

struct AcfResult {
    std::vector<double> values;  // values[k-1] is the lag-k autocorrelation
    double band = 0.0;           // +-3/sqrt(n)
    std::size_t effective_max_lag = 0;
    bool truncated = false;  // max_lag was reduced to fit the sample
};

AcfResult autocorrelation(std::span<const double> x, std::size_t max_lag);

struct ReturnAcf {
    AcfResult plain;
    AcfResult absolute;
};

ReturnAcf return_acf(std::span<const double> returns, std::size_t max_lag);

/// Autocorrelation of the +-1 trade-sign sequence up to 500 lags; the lag
/// count shrinks (flagged) when fewer trades are available.
AcfResult order_flow_acf(std::span<const int> signs, std::size_t max_lag = 500);

struct SignedTrades {
    std::vector<int> signs;  // aligned with the input trades; 0 = unclassified
    std::size_t skipped = 0;
};

/// Quote rule against the prevailing mid, tick rule at the mid (carrying the
/// previous sign on a zero price change). Trades before the first quote are
/// skipped and counted.
SignedTrades lee_ready_sign(const std::vector<TradeTick>& trades,
                            const std::vector<QuoteTick>& quotes);

struct TailFit {
    double alpha = 0.0;
    double x_min = 0.0;
    std::size_t tail_count = 0;
    // (empirical quantile, fitted power-law quantile) pairs for QQ plots.
    std::vector<std::pair<double, double>> qq;
};

/// Closed-form power-law MLE on the tail above the given percentile of the
/// passed sample (pass negated returns for the lower tail).
TailFit tail_fit(std::span<const double> returns, double percentile);

struct ImpactBin {
    double omega_lo = 0.0, omega_hi = 0.0;
    double mean_omega = 0.0;
    double mean_impact = 0.0;  // mean log mid change, toward the trade direction
    std::size_t count = 0;
};

struct ImpactCurve {
    Side side = Side::Buy;
    std::vector<ImpactBin> bins;  // 20 log-spaced bins over [0.1, 10]
};

struct ImpactInput {
    double pre_mid = 0.0, post_mid = 0.0;
    Volume volume = 0;
    int sign = 0;  // +1 buyer-initiated, -1 seller-initiated
    int day = 0;
};

/// Daily-normalised volume omega = (v / sum_day v) * (total trades / days),
/// bucketed per side. Empty bins keep count 0 and are excluded from fits.
std::pair<ImpactCurve, ImpactCurve> price_impact(const std::vector<ImpactInput>& trades);

/// Log-log slope of mean impact against mean normalised volume over the
/// populated bins with positive impact; NaN when fewer than two qualify.
double impact_loglog_slope(const ImpactCurve& curve);

struct DepthProfile {
    std::vector<double> bid_mean;  // level 1..k time-averaged volume
    std::vector<double> ask_mean;
};

DepthProfile depth_profile(const std::vector<Snapshot>& snapshots, std::size_t levels = 7);

// ---------------------------------------------------------------------------
// Sensitivity grid.

struct SensitivityCell {
    std::size_t index = 0;
    std::array<int, 5> value_index{};
    std::array<double, 5> theta{};
    MomentVector mid_moments;
    MomentVector micro_moments;
    bool ok = false;
    std::string error;
};

struct SensitivityGrid {
    std::array<std::vector<double>, 5> values;
    std::vector<SensitivityCell> cells;
};

/// 5 evenly spaced values per parameter across the box.
std::array<std::vector<double>, 5> default_sensitivity_values(const ThetaBox& box);

/// One fresh session per parameter combination (cell i runs on seed + i),
/// moments on both mid- and micro-price returns. Cell failures are recorded
/// and the grid continues. The KS reference is `reference_returns`, or a
/// base-config reference session when empty.
SensitivityGrid run_sensitivity(const SessionConfig& base,
                                const std::array<std::vector<double>, 5>& values,
                                std::uint64_t seed,
                                std::span<const double> reference_returns = {},
                                const std::function<void(std::size_t, std::size_t)>& progress = {});

std::vector<ChainPoint> chains_from_grid(const SensitivityGrid& grid, bool micro = true);

/// Reads (theta, moments) chains back from a sensitivity cells.csv.
std::vector<ChainPoint> read_chains_csv(const std::string& path, bool micro = true);

struct CorrelationCell {
    double estimate = 0.0;
    double lower = 0.0;   // bootstrap 2.5%
    double upper = 0.0;   // bootstrap 97.5%
};

/// Pearson correlations between each parameter and each micro-price moment
/// over the grid cells, with percentile intervals from `n_boot` resamples of
/// cells. Constant columns give 0 with degenerate intervals.
std::array<std::array<CorrelationCell, 9>, 5> parameter_moment_correlations(
    const SensitivityGrid& grid, int n_boot = 1000, std::uint64_t seed = 99);

/// cells.csv, marginals.csv, surfaces.csv, correlations.csv under `dir`.
void write_sensitivity_outputs(const SensitivityGrid& grid, const std::string& dir);

// ---------------------------------------------------------------------------
// Stylised-facts report bundle.

struct StylisedReport {
    std::vector<double> micro_returns;
    MomentVector moments;
    ReturnAcf racf;
    AcfResult flow_acf;
    std::size_t trade_count = 0;
    double lee_ready_agreement = 0.0;  // inferred vs true signs, when known
    TailFit upper_tail, lower_tail;
    DepthProfile depth;
    ImpactCurve buyer_impact, seller_impact;
    double buyer_slope = 0.0, seller_slope = 0.0;
};

StylisedReport build_stylised_report(const TaqReplay& replay,
                                     std::span<const double> reference_returns = {});

/// CSV bundle plus SVG figures (the CSVs are the contract).
void write_stylised_report(const StylisedReport& report, const std::string& dir);

}  // namespace atex
