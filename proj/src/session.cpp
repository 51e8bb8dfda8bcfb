#include "atex/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <queue>
#include <sstream>
#include <thread>
#include <tuple>

#include "atex/feed.hpp"

namespace atex {

int SessionConfig::provider_count() const {
    return static_cast<int>(std::llround(theta.population_ratio * taker_count()));
}

void SessionConfig::validate() const {
    theta.validate();
    fixed.validate();
    if (horizon_s < 0.0) throw Error("config: horizon must be >= 0");
    if (n_fundamentalists < 0 || n_chartists < 0) throw Error("config: negative agent count");
    if (initial_best_bid <= 0 || initial_best_ask <= 0 || initial_best_bid >= initial_best_ask)
        throw Error("config: initial references must satisfy 0 < bid < ask");
    if (transport == TransportKind::Datagram && compressed)
        throw Error("config: event-time compression requires the in-process transport");
    if (!compressed && pace <= 0.0)
        throw Error("config: uncompressed runs need a pacing factor > 0");
    if (snapshot_depth < 1) throw Error("config: snapshot depth must be >= 1");
}

namespace {

// Stream ids per agent: 3 reserved slots (schedule, decisions, init draws).
enum StreamSlot { kScheduleStream = 0, kDecisionStream = 1, kInitStream = 2 };

Rng agent_stream(const SessionConfig& config, int agent_index, StreamSlot slot) {
    return Rng::stream(config.seed,
                       static_cast<std::uint64_t>(agent_index) * 3 + static_cast<std::uint64_t>(slot));
}

struct PendingExpiry {
    double time_s;
    std::uint64_t seq;  // insertion order; deterministic heap tie-break
    OrderId order_id;
    Side side;
    Price price;

    bool operator>(const PendingExpiry& o) const {
        return std::tie(time_s, seq) > std::tie(o.time_s, o.seq);
    }
};

/// Feed leg: publication and reception of the frames for one engine event,
/// through either transport, handing decoded events to the mirror consumer.
class FeedChannel {
public:
    explicit FeedChannel(const SessionConfig& config) {
        if (config.transport == TransportKind::Datagram) {
            subscriber_ = std::make_unique<UdpSubscriber>(config.host, config.port);
            publisher_ = std::make_unique<UdpPublisher>(config.host, subscriber_->port());
        }
    }

    /// Publishes every frame of `event` and yields the decoded events back
    /// in arrival order.
    std::vector<MarketEvent> round_trip(const MarketEvent& event) {
        const auto frames = frames_for_event(event);
        std::vector<MarketEvent> received;
        received.reserve(frames.size());
        if (publisher_) {
            for (const auto& frame : frames) publisher_->publish(frame);
            for (std::size_t i = 0; i < frames.size(); ++i) {
                auto frame = subscriber_->receive(2000);
                if (!frame)
                    throw DesyncError("feed: datagram lost or delayed beyond 2000 ms");
                received.push_back(decode_event(*frame));
            }
        } else {
            for (const auto& frame : frames) loopback_.publish(frame);
            while (auto frame = loopback_.poll()) received.push_back(decode_event(*frame));
        }
        return received;
    }

private:
    LoopbackTransport loopback_;
    std::unique_ptr<UdpPublisher> publisher_;
    std::unique_ptr<UdpSubscriber> subscriber_;
};

class SessionRunner {
public:
    explicit SessionRunner(const SessionConfig& config)
        : config_(config),
          engine_(config.fixed.initial_mid),
          mirror_(config.initial_best_bid, config.initial_best_ask),
          channel_(config) {}

    SessionResult run(const EventSchedule& schedule) {
        result_.summary.schedule_points = schedule.points.size();
        result_.summary.fundamentalists = config_.n_fundamentalists;
        result_.summary.chartists = config_.n_chartists;
        result_.summary.providers = config_.provider_count();

        init_agents();
        record_snapshot(config_.start_epoch_ms);

        const bool paced = !config_.compressed && config_.pace > 0.0;
        const auto wall_start = std::chrono::steady_clock::now();

        for (const auto& point : schedule.points) {
            process_expiries_until(point.time_s);
            if (paced) {
                const auto target =
                    wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(point.time_s / config_.pace));
                std::this_thread::sleep_until(target);
            }
            dispatch(point);
        }
        process_expiries_until(config_.horizon_s);

        result_.engine_bids = engine_.level_volumes(Side::Buy);
        result_.engine_asks = engine_.level_volumes(Side::Sell);
        result_.mirror_bids = mirror_.level_volumes(Side::Buy);
        result_.mirror_asks = mirror_.level_volumes(Side::Sell);
        return std::move(result_);
    }

private:
    const SessionConfig& config_;
    EngineBook engine_;
    MirrorBook mirror_;
    FeedChannel channel_;
    SessionResult result_;

    std::vector<FundamentalistState> fundamentalists_;
    std::vector<ChartistState> chartists_;
    std::vector<Rng> decision_streams_;
    std::priority_queue<PendingExpiry, std::vector<PendingExpiry>, std::greater<PendingExpiry>>
        expiries_;
    std::uint64_t expiry_seq_ = 0;
    OrderId next_order_id_ = 1;

    void init_agents() {
        for (int i = 0; i < config_.n_fundamentalists; ++i) {
            Rng init = agent_stream(config_, i, kInitStream);
            fundamentalists_.push_back(
                FundamentalistState::draw(config_.fixed, config_.theta.value_dispersion, init));
        }
        for (int i = 0; i < config_.n_chartists; ++i)
            chartists_.push_back(ChartistState::init(config_.fixed));
        const int total = config_.taker_count() + config_.provider_count();
        decision_streams_.reserve(static_cast<std::size_t>(total));
        for (int i = 0; i < total; ++i)
            decision_streams_.push_back(agent_stream(config_, i, kDecisionStream));
    }

    TimestampMs to_ms(double time_s) const {
        return config_.start_epoch_ms + static_cast<TimestampMs>(std::llround(time_s * 1000.0));
    }

    std::string trader_tag(int agent_index, AgentClass klass) const {
        switch (klass) {
            case AgentClass::Fundamentalist: return "LF" + std::to_string(agent_index + 1);
            case AgentClass::Chartist:
                return "LF" + std::to_string(agent_index + 1);
            default:
                return "HF" + std::to_string(agent_index - config_.taker_count() + 1);
        }
    }

    void record_snapshot(TimestampMs t_ms) {
        Snapshot snap;
        snap.t_ms = t_ms;
        snap.best_bid = mirror_.best_bid();
        snap.best_ask = mirror_.best_ask();
        snap.spread = mirror_.spread();
        snap.mid = mirror_.mid();
        snap.micro = mirror_.micro_price();
        snap.imbalance = mirror_.imbalance();
        snap.bid_depth =
            mirror_.top_level_volumes(Side::Buy, static_cast<std::size_t>(config_.snapshot_depth));
        snap.ask_depth =
            mirror_.top_level_volumes(Side::Sell, static_cast<std::size_t>(config_.snapshot_depth));
        result_.snapshots.push_back(std::move(snap));
    }

    void feed_and_mirror(const MarketEvent& event) {
        for (const auto& decoded : channel_.round_trip(event)) {
            mirror_.apply_event(decoded);
            record_snapshot(decoded.timestamp_ms);
        }
    }

    void dispatch(const DecisionPoint& point) {
        switch (point.klass) {
            case AgentClass::Provider: provider_decision(point); break;
            case AgentClass::Fundamentalist: {
                const auto view = mirror_.view();
                auto intent = fundamentalist_decide(
                    fundamentalists_[static_cast<std::size_t>(point.agent_index)], view,
                    config_.theta, config_.fixed,
                    decision_streams_[static_cast<std::size_t>(point.agent_index)]);
                taker_submission(point, intent);
                break;
            }
            case AgentClass::Chartist: {
                const auto view = mirror_.view();
                const int slot = point.agent_index - config_.n_fundamentalists;
                auto intent = chartist_decide(chartists_[static_cast<std::size_t>(slot)], view,
                                              config_.theta, config_.fixed, point.time_s,
                                              decision_streams_[static_cast<std::size_t>(
                                                  point.agent_index)]);
                taker_submission(point, intent);
                break;
            }
        }
    }

    void provider_decision(const DecisionPoint& point) {
        const auto view = mirror_.view();
        const OrderIntent intent = liquidity_provider_decide(
            view, config_.theta, config_.fixed, point.time_s,
            decision_streams_[static_cast<std::size_t>(point.agent_index)]);

        const TimestampMs at = to_ms(point.time_s);
        EngineOrder order{next_order_id_++, trader_tag(point.agent_index, AgentClass::Provider),
                          intent.side, intent.price, intent.volume, at};
        const SubmitResult submitted = engine_.submit_limit(order);
        ++result_.summary.limit_orders;
        record_trade_bookkeeping(submitted);

        for (const auto& event : submitted.events) {
            if (event.kind == EventKind::New) {
                result_.taq.push_back({at, order.trader_id, order.order_id, order.price,
                                       event.legs.front().volume, order.side, EventKind::New});
            } else {
                append_trade_rows(event, order.trader_id);
            }
            feed_and_mirror(event);
        }
        if (submitted.rested > 0) {
            expiries_.push({intent.expiry_s, expiry_seq_++, order.order_id, order.side,
                            order.price});
        }
    }

    void taker_submission(const DecisionPoint& point, const std::optional<OrderIntent>& intent) {
        if (!intent) {
            ++result_.summary.taker_no_decision;
            return;
        }
        // Fail-safes: no market order into an empty contra side, none that
        // would break the 10% band around the dynamic reference price.
        if (mirror_.side_empty(contra(intent->side))) {
            ++result_.summary.blocked_empty_contra;
            return;
        }
        if (engine_.circuit_breaker_would_trip(intent->side, intent->volume)) {
            ++result_.summary.blocked_circuit_breaker;
            return;
        }

        const TimestampMs at = to_ms(point.time_s);
        const OrderId id = next_order_id_++;
        const std::string trader = trader_tag(point.agent_index, point.klass);
        const SubmitResult submitted =
            engine_.submit_market(id, trader, intent->side, intent->volume, at);
        ++result_.summary.market_orders;
        result_.summary.lapsed_volume += submitted.lapsed;
        record_trade_bookkeeping(submitted);

        // The unbroken market order row precedes its split legs.
        result_.taq.push_back({at, trader, id, 0, intent->volume, intent->side, EventKind::Trade});
        for (const auto& event : submitted.events) {
            append_trade_rows(event, trader);
            feed_and_mirror(event);
        }
    }

    void record_trade_bookkeeping(const SubmitResult& submitted) {
        for (const auto& event : submitted.events) {
            if (event.kind != EventKind::Trade) continue;
            ++result_.summary.trade_events;
            result_.summary.trade_legs += event.legs.size();
        }
        result_.summary.executed_volume += submitted.executed;
    }

    void append_trade_rows(const MarketEvent& event, const std::string& trader) {
        for (const auto& leg : event.legs) {
            result_.taq.push_back({event.timestamp_ms, trader, leg.order_id, leg.price, leg.volume,
                                   event.side, EventKind::Trade});
        }
    }

    void process_expiries_until(double time_s) {
        while (!expiries_.empty() && expiries_.top().time_s <= time_s) {
            const PendingExpiry expiry = expiries_.top();
            expiries_.pop();
            if (expiry.time_s > config_.horizon_s) continue;
            const TimestampMs at = to_ms(expiry.time_s);
            auto event = engine_.cancel(expiry.order_id, expiry.side, expiry.price, at);
            if (!event) continue;  // already fully executed
            ++result_.summary.cancellations;
            result_.taq.push_back({at, event->trader_id, expiry.order_id, expiry.price, 0,
                                   expiry.side, EventKind::Cancelled});
            feed_and_mirror(*event);
        }
    }
};

}  // namespace

EventSchedule build_schedule(const SessionConfig& config) {
    config.validate();
    EventSchedule schedule;
    schedule.compressed = config.compressed;

    auto add_agent = [&](int agent_index, AgentClass klass, double mean, double lo, double hi) {
        Rng stream = agent_stream(config, agent_index, kScheduleStream);
        double t = 0.0;
        while (true) {
            t += trunc_exp_inv(mean, lo, hi, stream.uniform());
            if (t > config.horizon_s) break;
            schedule.points.push_back({t, agent_index, klass});
        }
    };

    int agent = 0;
    for (int i = 0; i < config.n_fundamentalists; ++i, ++agent)
        add_agent(agent, AgentClass::Fundamentalist, config.fixed.lt_lambda_mean,
                  config.fixed.lt_lambda_min, config.fixed.lt_lambda_max);
    for (int i = 0; i < config.n_chartists; ++i, ++agent)
        add_agent(agent, AgentClass::Chartist, config.fixed.lt_lambda_mean,
                  config.fixed.lt_lambda_min, config.fixed.lt_lambda_max);
    const int providers = config.provider_count();
    for (int i = 0; i < providers; ++i, ++agent)
        add_agent(agent, AgentClass::Provider, config.fixed.lp_lambda_mean,
                  config.fixed.lp_lambda_min, config.fixed.lp_lambda_max);

    std::sort(schedule.points.begin(), schedule.points.end(),
              [](const DecisionPoint& a, const DecisionPoint& b) {
                  return std::tie(a.time_s, a.agent_index) < std::tie(b.time_s, b.agent_index);
              });
    return schedule;
}

EventSchedule compress_event_time(EventSchedule schedule, const SessionConfig& config) {
    if (config.transport == TransportKind::Datagram)
        throw Error("compress_event_time: rejected for the datagram transport");
    schedule.compressed = true;
    return schedule;
}

SessionResult run_session(const SessionConfig& config) {
    const EventSchedule schedule = build_schedule(config);
    SessionRunner runner(config);
    return runner.run(schedule);
}

std::vector<std::pair<std::string, std::string>> SessionSummary::to_kv() const {
    return {
        {"schedule_points", std::to_string(schedule_points)},
        {"limit_orders", std::to_string(limit_orders)},
        {"market_orders", std::to_string(market_orders)},
        {"cancellations", std::to_string(cancellations)},
        {"total_orders", std::to_string(total_orders())},
        {"trade_events", std::to_string(trade_events)},
        {"trade_legs", std::to_string(trade_legs)},
        {"executed_volume", std::to_string(executed_volume)},
        {"lapsed_volume", std::to_string(lapsed_volume)},
        {"blocked_circuit_breaker", std::to_string(blocked_circuit_breaker)},
        {"blocked_empty_contra", std::to_string(blocked_empty_contra)},
        {"taker_no_decision", std::to_string(taker_no_decision)},
        {"fundamentalists", std::to_string(fundamentalists)},
        {"chartists", std::to_string(chartists)},
        {"providers", std::to_string(providers)},
    };
}

namespace {

std::vector<double> price_series(const std::vector<Snapshot>& snapshots,
                                 Rational Snapshot::*field) {
    std::vector<double> out;
    const Rational* last = nullptr;
    for (const auto& snap : snapshots) {
        const Rational& value = snap.*field;
        if (last && value == *last) continue;
        out.push_back(value.to_double());
        last = &value;
    }
    return out;
}

}  // namespace

std::vector<double> micro_price_series(const std::vector<Snapshot>& snapshots) {
    return price_series(snapshots, &Snapshot::micro);
}

std::vector<double> mid_price_series(const std::vector<Snapshot>& snapshots) {
    return price_series(snapshots, &Snapshot::mid);
}

void write_snapshots_csv(const std::vector<Snapshot>& snapshots, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_snapshots_csv: cannot open '" + path + "'");
    out << "DateTimeMs,BestBid,BestAsk,Spread,Mid,Micro,Imbalance";
    std::size_t depth = 0;
    for (const auto& s : snapshots)
        depth = std::max({depth, s.bid_depth.size(), s.ask_depth.size()});
    for (std::size_t i = 1; i <= depth; ++i) out << ",BidVol" << i;
    for (std::size_t i = 1; i <= depth; ++i) out << ",AskVol" << i;
    out << '\n';
    for (const auto& s : snapshots) {
        out << s.t_ms << ',' << s.best_bid << ',' << s.best_ask << ',' << s.spread << ','
            << s.mid.to_fixed4() << ',' << s.micro.to_fixed4() << ','
            << format_fixed(s.imbalance, 6);
        for (std::size_t i = 0; i < depth; ++i)
            out << ',' << (i < s.bid_depth.size() ? s.bid_depth[i] : 0);
        for (std::size_t i = 0; i < depth; ++i)
            out << ',' << (i < s.ask_depth.size() ? s.ask_depth[i] : 0);
        out << '\n';
    }
}

std::vector<Snapshot> read_snapshots_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("read_snapshots_csv: cannot open '" + path + "'");
    std::vector<Snapshot> snapshots;
    std::string line;
    std::size_t line_no = 0;
    std::size_t depth = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line_no == 1) {
            depth = (fields.size() - 7) / 2;
            continue;
        }
        try {
            Snapshot s;
            s.t_ms = std::stoll(fields.at(0));
            s.best_bid = std::stoll(fields.at(1));
            s.best_ask = std::stoll(fields.at(2));
            s.spread = std::stoll(fields.at(3));
            const double mid = std::stod(fields.at(4));
            const double micro = std::stod(fields.at(5));
            s.mid = Rational(static_cast<std::int64_t>(std::llround(mid * 10000.0)), 10000);
            s.micro = Rational(static_cast<std::int64_t>(std::llround(micro * 10000.0)), 10000);
            s.imbalance = std::stod(fields.at(6));
            for (std::size_t i = 0; i < depth; ++i)
                s.bid_depth.push_back(std::stoll(fields.at(7 + i)));
            for (std::size_t i = 0; i < depth; ++i)
                s.ask_depth.push_back(std::stoll(fields.at(7 + depth + i)));
            snapshots.push_back(std::move(s));
        } catch (const std::exception&) {
            throw ParseError("read_snapshots_csv: line " + std::to_string(line_no));
        }
    }
    return snapshots;
}

void write_session_outputs(const SessionResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_taq(result.taq, (std::filesystem::path(dir) / "taq.csv").string());
    write_snapshots_csv(result.snapshots, (std::filesystem::path(dir) / "snapshots.csv").string());
    std::ofstream summary((std::filesystem::path(dir) / "summary.txt").string(),
                          std::ios::binary);
    if (!summary) throw Error("write_session_outputs: cannot open summary.txt");
    for (const auto& [key, value] : result.summary.to_kv()) summary << key << "=" << value << '\n';
}

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

SessionConfig parse_session_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("parse_session_config: cannot open '" + path + "'");
    SessionConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto comment = line.find('#');
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "N") config.theta.population_ratio = std::stod(value);
            else if (key == "delta") config.theta.aggression_cutoff = std::stod(value);
            else if (key == "kappa") config.theta.placement_depth = std::stod(value);
            else if (key == "nu") config.theta.imbalance_scaling = std::stod(value);
            else if (key == "sigma") config.theta.value_dispersion = std::stod(value);
            else if (key == "horizon") config.horizon_s = std::stod(value);
            else if (key == "seed") config.seed = std::stoull(value);
            else if (key == "n_fundamentalists") config.n_fundamentalists = std::stoi(value);
            else if (key == "n_chartists") config.n_chartists = std::stoi(value);
            else if (key == "lt_lambda_mean") config.fixed.lt_lambda_mean = std::stod(value);
            else if (key == "lt_lambda_min") config.fixed.lt_lambda_min = std::stod(value);
            else if (key == "lt_lambda_max") config.fixed.lt_lambda_max = std::stod(value);
            else if (key == "lp_lambda_mean") config.fixed.lp_lambda_mean = std::stod(value);
            else if (key == "lp_lambda_min") config.fixed.lp_lambda_min = std::stod(value);
            else if (key == "lp_lambda_max") config.fixed.lp_lambda_max = std::stod(value);
            else if (key == "order_ttl") config.fixed.order_ttl = std::stod(value);
            else if (key == "initial_mid") config.fixed.initial_mid = std::stoll(value);
            else if (key == "initial_best_bid") config.initial_best_bid = std::stoll(value);
            else if (key == "initial_best_ask") config.initial_best_ask = std::stoll(value);
            else if (key == "start_epoch_ms") config.start_epoch_ms = std::stoll(value);
            else if (key == "snapshot_depth") config.snapshot_depth = std::stoi(value);
            else if (key == "transport")
                config.transport =
                    value == "udp" ? TransportKind::Datagram : TransportKind::InProcess;
            else if (key == "host") config.host = value;
            else if (key == "port") config.port = std::stoi(value);
            else if (key == "compressed") config.compressed = value == "true" || value == "1";
            else if (key == "pace") config.pace = std::stod(value);
            else
                throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" +
                                 key + "'");
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception&) {
            throw ParseError("config line " + std::to_string(line_no) + ": bad value for '" + key +
                             "'");
        }
    }
    return config;
}

void write_session_config(const SessionConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_session_config: cannot open '" + path + "'");
    out << "# session configuration\n";
    out << "N = " << config.theta.population_ratio << '\n';
    out << "delta = " << config.theta.aggression_cutoff << '\n';
    out << "kappa = " << config.theta.placement_depth << '\n';
    out << "nu = " << config.theta.imbalance_scaling << '\n';
    out << "sigma = " << config.theta.value_dispersion << '\n';
    out << "horizon = " << config.horizon_s << '\n';
    out << "seed = " << config.seed << '\n';
    out << "n_fundamentalists = " << config.n_fundamentalists << '\n';
    out << "n_chartists = " << config.n_chartists << '\n';
    out << "lt_lambda_mean = " << config.fixed.lt_lambda_mean << '\n';
    out << "lt_lambda_min = " << config.fixed.lt_lambda_min << '\n';
    out << "lt_lambda_max = " << config.fixed.lt_lambda_max << '\n';
    out << "lp_lambda_mean = " << config.fixed.lp_lambda_mean << '\n';
    out << "lp_lambda_min = " << config.fixed.lp_lambda_min << '\n';
    out << "lp_lambda_max = " << config.fixed.lp_lambda_max << '\n';
    out << "order_ttl = " << config.fixed.order_ttl << '\n';
    out << "initial_mid = " << config.fixed.initial_mid << '\n';
    out << "initial_best_bid = " << config.initial_best_bid << '\n';
    out << "initial_best_ask = " << config.initial_best_ask << '\n';
    out << "transport = " << (config.transport == TransportKind::Datagram ? "udp" : "inproc")
        << '\n';
    out << "host = " << config.host << '\n';
    out << "port = " << config.port << '\n';
    out << "compressed = " << (config.compressed ? "true" : "false") << '\n';
    out << "pace = " << config.pace << '\n';
    out << "start_epoch_ms = " << config.start_epoch_ms << '\n';
    out << "snapshot_depth = " << config.snapshot_depth << '\n';
}

}  // namespace atex
