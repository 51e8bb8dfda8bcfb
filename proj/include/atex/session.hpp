#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atex/agents.hpp"
#include "atex/engine.hpp"
#include "atex/mirror.hpp"
#include "atex/taq.hpp"

namespace atex {

enum class TransportKind { InProcess, Datagram };

struct SessionConfig {
    ThetaParams theta;
    FixedParams fixed;
    double horizon_s = 3600.0;
    std::uint64_t seed = 1;
    int n_fundamentalists = 1;
    int n_chartists = 1;
    TransportKind transport = TransportKind::InProcess;
    std::string host = "127.0.0.1";
    int port = 45911;
    /// Event-time compression: decisions run back-to-back with simulated
    /// timestamps attached. Requires the in-process transport.
    bool compressed = true;
    /// Wall-clock pacing speedup when not compressed (1 = real time).
    double pace = 0.0;
    TimestampMs start_epoch_ms = 1621414800000;  // fixed so output is byte-stable
    Price initial_best_bid = 9950;
    Price initial_best_ask = 10050;
    int snapshot_depth = 7;

    int taker_count() const { return n_fundamentalists + n_chartists; }
    int provider_count() const;
    void validate() const;
};

enum class AgentClass { Fundamentalist, Chartist, Provider };

struct DecisionPoint {
    double time_s = 0.0;
    int agent_index = 0;  // global: takers first, then providers
    AgentClass klass = AgentClass::Provider;
};

/// All decision times, pre-sampled and chronologically sorted (ties broken
/// by agent index). Expiry cancellations are resolved at runtime for orders
/// actually placed.
struct EventSchedule {
    std::vector<DecisionPoint> points;
    bool compressed = false;
};

EventSchedule build_schedule(const SessionConfig& config);

/// Marks the schedule for back-to-back execution. Rejected for the datagram
/// transport, which needs wall-clock pacing.
EventSchedule compress_event_time(EventSchedule schedule, const SessionConfig& config);

struct Snapshot {
    TimestampMs t_ms = 0;
    Price best_bid = 0;
    Price best_ask = 0;
    Price spread = 0;
    Rational mid;
    Rational micro;
    double imbalance = 0.0;
    std::vector<Volume> bid_depth;  // top levels, best first
    std::vector<Volume> ask_depth;
};

struct SessionSummary {
    std::uint64_t schedule_points = 0;
    std::uint64_t limit_orders = 0;
    std::uint64_t market_orders = 0;
    std::uint64_t cancellations = 0;
    std::uint64_t trade_events = 0;
    std::uint64_t trade_legs = 0;
    std::int64_t executed_volume = 0;
    std::int64_t lapsed_volume = 0;
    std::uint64_t blocked_circuit_breaker = 0;
    std::uint64_t blocked_empty_contra = 0;
    std::uint64_t taker_no_decision = 0;
    int fundamentalists = 0;
    int chartists = 0;
    int providers = 0;

    std::uint64_t total_orders() const { return limit_orders + market_orders + cancellations; }
    std::vector<std::pair<std::string, std::string>> to_kv() const;
};

struct SessionResult {
    std::vector<TaqRecord> taq;
    std::vector<Snapshot> snapshots;
    SessionSummary summary;
    // Final books for mirror-equivalence checks (price -> aggregate volume).
    std::map<Price, Volume> engine_bids, engine_asks;
    std::map<Price, Volume> mirror_bids, mirror_asks;
};

SessionResult run_session(const SessionConfig& config);

/// Tick-by-tick price series: the snapshot values with consecutive repeats
/// collapsed, so the series ticks exactly when an event moves the price.
std::vector<double> micro_price_series(const std::vector<Snapshot>& snapshots);
std::vector<double> mid_price_series(const std::vector<Snapshot>& snapshots);

void write_snapshots_csv(const std::vector<Snapshot>& snapshots, const std::string& path);
std::vector<Snapshot> read_snapshots_csv(const std::string& path);

/// taq.csv + snapshots.csv + summary.txt under `dir` (created if missing).
void write_session_outputs(const SessionResult& result, const std::string& dir);

/// Plain-text `key = value` config file, `#` comments.
SessionConfig parse_session_config(const std::string& path);
void write_session_config(const SessionConfig& config, const std::string& path);

}  // namespace atex
