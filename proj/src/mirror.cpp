#include "atex/mirror.hpp"

namespace atex {

void MirrorBook::insert_order(Side side, OrderId id, Price price, Volume volume) {
    auto& orders = side == Side::Buy ? bids_ : asks_;
    if (!orders.emplace(id, Resting{price, volume}).second)
        throw DesyncError("mirror: duplicate order id " + std::to_string(id) + " in New event");
    if (side == Side::Buy) {
        bid_levels_[price] += volume;
        bid_volume_ += volume;
    } else {
        ask_levels_[price] += volume;
        ask_volume_ += volume;
    }
}

void MirrorBook::reduce_order(Side side, OrderId id, Volume volume) {
    auto& orders = side == Side::Buy ? bids_ : asks_;
    auto it = orders.find(id);
    if (it == orders.end())
        throw DesyncError("mirror: trade leg references unknown order id " + std::to_string(id));
    if (volume > it->second.volume)
        throw DesyncError("mirror: trade leg volume exceeds resting volume for id " +
                          std::to_string(id));
    it->second.volume -= volume;
    if (side == Side::Buy) {
        auto level = bid_levels_.find(it->second.price);
        level->second -= volume;
        if (level->second == 0) bid_levels_.erase(level);
        bid_volume_ -= volume;
    } else {
        auto level = ask_levels_.find(it->second.price);
        level->second -= volume;
        if (level->second == 0) ask_levels_.erase(level);
        ask_volume_ -= volume;
    }
    if (it->second.volume == 0) orders.erase(it);
}

void MirrorBook::remove_order(Side side, OrderId id) {
    auto& orders = side == Side::Buy ? bids_ : asks_;
    auto it = orders.find(id);
    if (it == orders.end())
        throw DesyncError("mirror: cancel references unknown order id " + std::to_string(id));
    reduce_order(side, id, it->second.volume);
}

void MirrorBook::refresh_best() {
    // An emptied side retains the previous best as an indicative reference.
    if (!bid_levels_.empty()) best_bid_ = bid_levels_.begin()->first;
    if (!ask_levels_.empty()) best_ask_ = ask_levels_.begin()->first;
}

void MirrorBook::apply_event(const MarketEvent& event) {
    switch (event.kind) {
        case EventKind::New:
            for (const auto& leg : event.legs)
                insert_order(event.side, leg.order_id, leg.price, leg.volume);
            break;
        case EventKind::Trade: {
            // Event side is the taker's; makers rest on the contra side.
            const Side maker_side = contra(event.side);
            for (const auto& leg : event.legs) reduce_order(maker_side, leg.order_id, leg.volume);
            break;
        }
        case EventKind::Cancelled:
            for (const auto& leg : event.legs) remove_order(event.side, leg.order_id);
            break;
    }
    refresh_best();
}

double MirrorBook::imbalance() const {
    if (bids_.empty() && asks_.empty()) return 0.0;
    if (asks_.empty()) return 1.0;
    if (bids_.empty()) return -1.0;
    return static_cast<double>(bid_volume_ - ask_volume_) /
           static_cast<double>(bid_volume_ + ask_volume_);
}

Volume MirrorBook::level1_volume(Side side) const {
    if (side == Side::Buy)
        return bid_levels_.empty() ? 0 : bid_levels_.begin()->second;
    return ask_levels_.empty() ? 0 : ask_levels_.begin()->second;
}

Rational MirrorBook::micro_price() const {
    const Volume vb = level1_volume(Side::Buy);
    const Volume va = level1_volume(Side::Sell);
    if (vb == 0 || va == 0) return mid();
    return Rational(va * best_bid_ + vb * best_ask_, va + vb);
}

MirrorView MirrorBook::view() const {
    MirrorView v;
    v.best_bid = best_bid_;
    v.best_ask = best_ask_;
    v.spread = spread();
    v.mid = mid();
    v.micro = micro_price();
    v.imbalance = imbalance();
    v.bid_volume = bid_volume_;
    v.ask_volume = ask_volume_;
    v.bid_side_empty = bids_.empty();
    v.ask_side_empty = asks_.empty();
    return v;
}

std::map<Price, Volume> MirrorBook::level_volumes(Side side) const {
    std::map<Price, Volume> out;
    if (side == Side::Buy) {
        for (const auto& [price, volume] : bid_levels_) out[price] = volume;
    } else {
        for (const auto& [price, volume] : ask_levels_) out[price] = volume;
    }
    return out;
}

std::vector<Volume> MirrorBook::top_level_volumes(Side side, std::size_t levels) const {
    std::vector<Volume> out;
    out.reserve(levels);
    auto take = [&](const auto& level_map) {
        for (const auto& [price, volume] : level_map) {
            if (out.size() == levels) break;
            out.push_back(volume);
        }
    };
    side == Side::Buy ? take(bid_levels_) : take(ask_levels_);
    return out;
}

}  // namespace atex
