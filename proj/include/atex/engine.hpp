#pragma once

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "atex/types.hpp"

namespace atex {

struct EngineOrder {
    OrderId order_id = 0;
    std::string trader_id;
    Side side = Side::Buy;
    Price price = 0;  // 0 encodes a market order
    Volume volume = 0;
    TimestampMs submitted_at = 0;
};

struct Trade {
    OrderId taker_order_id = 0;
    OrderId maker_order_id = 0;
    Price price = 0;  // the maker's resting limit price
    Volume volume = 0;
    TimestampMs executed_at = 0;
};

struct EventLeg {
    OrderId order_id = 0;
    Price price = 0;
    Volume volume = 0;

    bool operator==(const EventLeg&) const = default;
};

/// One feed message. Trade events carry one leg per maker order consumed,
/// best price first; Cancelled events carry a single (id, 0, 0) leg.
struct MarketEvent {
    TimestampMs timestamp_ms = 0;
    EventKind kind = EventKind::New;
    Side side = Side::Buy;
    std::string trader_id;
    std::vector<EventLeg> legs;

    bool operator==(const MarketEvent&) const = default;
};

struct SubmitResult {
    std::vector<MarketEvent> events;
    std::vector<Trade> trades;
    Volume executed = 0;
    Volume rested = 0;
    Volume lapsed = 0;
};

/// Single-instrument continuous double auction book with price-time priority.
/// All mutating calls must be serialized by the owner (single-writer loop);
/// const queries are safe whenever no mutation is in flight.
class EngineBook {
public:
    static constexpr Price kInitialReferencePrice = 10000;

    explicit EngineBook(Price initial_reference_price = kInitialReferencePrice)
        : reference_price_(initial_reference_price) {}

    /// Rests a limit order, matching first if it crosses the contra side.
    /// Throws Error on duplicate order id or invalid price/volume.
    SubmitResult submit_limit(const EngineOrder& order);

    /// Walks the contra side best-price-first, FIFO within a level. Volume
    /// left when the contra side empties lapses. Empty contra side at
    /// submission is an event-free no-op.
    SubmitResult submit_market(OrderId taker_id, const std::string& trader_id, Side side,
                               Volume volume, TimestampMs at);

    /// Removes a resting order. Unknown id (already filled or cancelled)
    /// returns nullopt: benign, no event.
    std::optional<MarketEvent> cancel(OrderId order_id, Side side, Price price, TimestampMs at);

    /// Price of the deepest level a market order of this size would consume.
    /// Pure: the book is not mutated. nullopt when the contra side is empty.
    std::optional<Price> hypothetical_deepest_execution_price(Side side, Volume volume) const;

    /// True iff submitting would move execution more than 10% away from the
    /// dynamic reference price, or the contra side is empty.
    bool circuit_breaker_would_trip(Side side, Volume volume) const;

    Price dynamic_reference_price() const { return reference_price_; }

    std::optional<Price> best_bid() const;
    std::optional<Price> best_ask() const;
    Volume total_volume(Side side) const;

    /// price -> aggregate resting volume, for mirror-equivalence checks.
    std::map<Price, Volume> level_volumes(Side side) const;

    bool order_resting(OrderId id) const { return resting_.count(id) > 0; }
    std::size_t order_count() const { return resting_.size(); }

private:
    using LevelQueue = std::deque<EngineOrder>;
    // Bids keyed descending so begin() is the best level on both sides.
    std::map<Price, LevelQueue, std::greater<Price>> bids_;
    std::map<Price, LevelQueue> asks_;
    struct RestingRef {
        Side side;
        Price price;
    };
    std::unordered_map<OrderId, RestingRef> resting_;
    std::unordered_set<OrderId> seen_ids_;
    Price reference_price_;

    // Matches `volume` against the contra side of `taker_side` up to
    // `limit` (0 = no limit). Appends trades/legs, erases filled makers.
    Volume match(Side taker_side, OrderId taker_id, Volume volume, Price limit, TimestampMs at,
                 std::vector<Trade>& trades, std::vector<EventLeg>& legs);
};

}  // namespace atex
