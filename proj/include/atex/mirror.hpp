#pragma once

#include <map>
#include <unordered_map>
#include <vector>

#include "atex/engine.hpp"
#include "atex/types.hpp"

namespace atex {

/// Consistent view of the mirror between events; what an agent rule reads.
struct MirrorView {
    Price best_bid = 0;  // may be a retained reference if the side is empty
    Price best_ask = 0;
    Price spread = 0;
    Rational mid;
    Rational micro;
    double imbalance = 0.0;
    Volume bid_volume = 0;  // total over all levels
    Volume ask_volume = 0;
    bool bid_side_empty = true;
    bool ask_side_empty = true;
};

/// Listener-side LOB rebuilt purely from decoded feed events. Tracks price
/// priority only; order ids are the handle for trades and cancellations.
class MirrorBook {
public:
    MirrorBook(Price initial_best_bid = 9950, Price initial_best_ask = 10050)
        : best_bid_(initial_best_bid), best_ask_(initial_best_ask) {}

    /// New inserts on the stated side; Trade subtracts each leg from the
    /// maker on the contra side, erasing ids that reach zero; Cancelled
    /// removes the id. Throws DesyncError on unknown ids or excess volume.
    void apply_event(const MarketEvent& event);

    /// Retained reference when the side is empty, per feed semantics.
    Price best_bid() const { return best_bid_; }
    Price best_ask() const { return best_ask_; }
    Price spread() const { return best_ask_ - best_bid_; }
    Rational mid() const { return Rational(best_ask_ + best_bid_, 2); }

    /// (v_b - v_a) / (v_b + v_a) over total side volumes; 1 for an empty ask
    /// side, -1 for an empty bid side, 0 when both sides are empty.
    double imbalance() const;

    /// Level-1 volume-weighted mid; falls back to mid() when either level-1
    /// volume is zero.
    Rational micro_price() const;

    MirrorView view() const;

    bool side_empty(Side side) const {
        return side == Side::Buy ? bids_.empty() : asks_.empty();
    }
    Volume total_volume(Side side) const {
        return side == Side::Buy ? bid_volume_ : ask_volume_;
    }
    Volume level1_volume(Side side) const;
    std::size_t order_count(Side side) const {
        return side == Side::Buy ? bids_.size() : asks_.size();
    }

    /// price -> aggregate volume, comparable against EngineBook::level_volumes.
    std::map<Price, Volume> level_volumes(Side side) const;

    /// Volumes at the top `levels` occupied price levels, best first; shorter
    /// when fewer levels exist.
    std::vector<Volume> top_level_volumes(Side side, std::size_t levels) const;

private:
    struct Resting {
        Price price;
        Volume volume;
    };
    std::unordered_map<OrderId, Resting> bids_;
    std::unordered_map<OrderId, Resting> asks_;
    // Per-level aggregates; bids descending so begin() is best on both sides.
    std::map<Price, Volume, std::greater<Price>> bid_levels_;
    std::map<Price, Volume> ask_levels_;
    Volume bid_volume_ = 0;
    Volume ask_volume_ = 0;
    Price best_bid_;
    Price best_ask_;

    void insert_order(Side side, OrderId id, Price price, Volume volume);
    void reduce_order(Side side, OrderId id, Volume volume);
    void remove_order(Side side, OrderId id);
    void refresh_best();
};

}  // namespace atex
