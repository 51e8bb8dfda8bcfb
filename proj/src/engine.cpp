#include "atex/engine.hpp"

#include <cstdlib>

namespace atex {

namespace {

template <typename BookSide>
bool crosses(Side taker_side, Price limit, const BookSide& contra_levels) {
    if (contra_levels.empty()) return false;
    const Price best = contra_levels.begin()->first;
    return taker_side == Side::Buy ? limit >= best : limit <= best;
}

}  // namespace

Volume EngineBook::match(Side taker_side, OrderId taker_id, Volume volume, Price limit,
                         TimestampMs at, std::vector<Trade>& trades,
                         std::vector<EventLeg>& legs) {
    auto walk = [&](auto& levels) {
        Volume remaining = volume;
        Price deepest = 0;
        while (remaining > 0 && !levels.empty()) {
            auto level = levels.begin();
            const Price level_price = level->first;
            if (limit > 0) {
                const bool marketable =
                    taker_side == Side::Buy ? limit >= level_price : limit <= level_price;
                if (!marketable) break;
            }
            LevelQueue& queue = level->second;
            while (remaining > 0 && !queue.empty()) {
                EngineOrder& maker = queue.front();
                const Volume filled = std::min(remaining, maker.volume);
                trades.push_back({taker_id, maker.order_id, level_price, filled, at});
                legs.push_back({maker.order_id, level_price, filled});
                deepest = level_price;
                remaining -= filled;
                maker.volume -= filled;
                if (maker.volume == 0) {
                    resting_.erase(maker.order_id);
                    queue.pop_front();
                }
            }
            if (queue.empty()) levels.erase(level);
        }
        if (deepest != 0) reference_price_ = deepest;
        return volume - remaining;
    };
    return taker_side == Side::Buy ? walk(asks_) : walk(bids_);
}

SubmitResult EngineBook::submit_limit(const EngineOrder& order) {
    if (order.volume <= 0) throw Error("submit_limit: volume must be positive");
    if (order.price <= 0) throw Error("submit_limit: limit price must be positive");
    if (!seen_ids_.insert(order.order_id).second)
        throw Error("submit_limit: duplicate order id " + std::to_string(order.order_id));

    SubmitResult result;
    std::vector<EventLeg> trade_legs;
    result.executed = match(order.side, order.order_id, order.volume, order.price,
                            order.submitted_at, result.trades, trade_legs);
    if (!trade_legs.empty()) {
        result.events.push_back(
            {order.submitted_at, EventKind::Trade, order.side, order.trader_id, trade_legs});
    }

    const Volume remainder = order.volume - result.executed;
    if (remainder > 0) {
        EngineOrder resting = order;
        resting.volume = remainder;
        if (order.side == Side::Buy) {
            bids_[order.price].push_back(resting);
        } else {
            asks_[order.price].push_back(resting);
        }
        resting_.emplace(order.order_id, RestingRef{order.side, order.price});
        result.rested = remainder;
        result.events.push_back({order.submitted_at,
                                 EventKind::New,
                                 order.side,
                                 order.trader_id,
                                 {{order.order_id, order.price, remainder}}});
    }
    return result;
}

SubmitResult EngineBook::submit_market(OrderId taker_id, const std::string& trader_id, Side side,
                                       Volume volume, TimestampMs at) {
    if (volume <= 0) throw Error("submit_market: volume must be positive");
    if (!seen_ids_.insert(taker_id).second)
        throw Error("submit_market: duplicate order id " + std::to_string(taker_id));

    SubmitResult result;
    std::vector<EventLeg> trade_legs;
    result.executed = match(side, taker_id, volume, 0, at, result.trades, trade_legs);
    result.lapsed = volume - result.executed;
    if (!trade_legs.empty()) {
        result.events.push_back({at, EventKind::Trade, side, trader_id, trade_legs});
    }
    return result;
}

std::optional<MarketEvent> EngineBook::cancel(OrderId order_id, Side side, Price price,
                                              TimestampMs at) {
    auto ref = resting_.find(order_id);
    if (ref == resting_.end() || ref->second.side != side || ref->second.price != price)
        return std::nullopt;

    std::string trader;
    auto remove_from = [&](auto& levels) {
        auto level = levels.find(price);
        if (level == levels.end()) return false;
        auto& queue = level->second;
        for (auto it = queue.begin(); it != queue.end(); ++it) {
            if (it->order_id == order_id) {
                trader = it->trader_id;
                queue.erase(it);
                if (queue.empty()) levels.erase(level);
                return true;
            }
        }
        return false;
    };
    const bool removed = side == Side::Buy ? remove_from(bids_) : remove_from(asks_);
    if (!removed) return std::nullopt;

    resting_.erase(order_id);
    return MarketEvent{at, EventKind::Cancelled, side, trader, {{order_id, 0, 0}}};
}

std::optional<Price> EngineBook::hypothetical_deepest_execution_price(Side side,
                                                                      Volume volume) const {
    auto walk = [&](const auto& levels) -> std::optional<Price> {
        if (levels.empty()) return std::nullopt;
        Volume remaining = volume;
        Price deepest = levels.begin()->first;
        for (const auto& [price, queue] : levels) {
            deepest = price;
            for (const auto& order : queue) remaining -= order.volume;
            if (remaining <= 0) break;
        }
        return deepest;
    };
    return side == Side::Buy ? walk(asks_) : walk(bids_);
}

bool EngineBook::circuit_breaker_would_trip(Side side, Volume volume) const {
    const auto deepest = hypothetical_deepest_execution_price(side, volume);
    if (!deepest) return true;  // empty contra side: the driver must not submit
    const Price deviation = std::llabs(*deepest - reference_price_);
    return deviation * 10 > reference_price_;  // exact integer form of >10%
}

std::optional<Price> EngineBook::best_bid() const {
    if (bids_.empty()) return std::nullopt;
    return bids_.begin()->first;
}

std::optional<Price> EngineBook::best_ask() const {
    if (asks_.empty()) return std::nullopt;
    return asks_.begin()->first;
}

Volume EngineBook::total_volume(Side side) const {
    Volume total = 0;
    auto sum = [&](const auto& levels) {
        for (const auto& [price, queue] : levels)
            for (const auto& order : queue) total += order.volume;
    };
    side == Side::Buy ? sum(bids_) : sum(asks_);
    return total;
}

std::map<Price, Volume> EngineBook::level_volumes(Side side) const {
    std::map<Price, Volume> out;
    auto fill = [&](const auto& levels) {
        for (const auto& [price, queue] : levels) {
            Volume v = 0;
            for (const auto& order : queue) v += order.volume;
            out[price] = v;
        }
    };
    side == Side::Buy ? fill(bids_) : fill(asks_);
    return out;
}

}  // namespace atex
