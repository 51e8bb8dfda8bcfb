#pragma once

#include <optional>

#include "atex/mirror.hpp"
#include "atex/rng.hpp"
#include "atex/samplers.hpp"
#include "atex/types.hpp"

namespace atex {

/// The five free model parameters.
struct ThetaParams {
    double population_ratio = 1.0;   // N: liquidity providers per liquidity taker
    double aggression_cutoff = 0.01; // delta: mid-price fraction switching the volume floor
    double placement_depth = 3.0;    // kappa: limit-placement depth multiplier, > 0
    double imbalance_scaling = 3.0;  // nu: shape damping, > 1 so alpha never reaches 0
    double value_dispersion = 0.01;  // sigma: fundamental-value log dispersion

    void validate() const;
};

struct FixedParams {
    double lt_lambda_mean = 15.0;  // liquidity-taker inter-arrival mean, seconds
    double lt_lambda_min = 1.0;
    double lt_lambda_max = 60.0;
    double lp_lambda_mean = 2.5;   // liquidity-provider inter-arrival mean, seconds
    double lp_lambda_min = 0.3;
    double lp_lambda_max = 10.0;
    double order_ttl = 600.0;      // gamma: limit-order time in force, seconds
    Volume lt_volume_floor_calm = 20;
    Volume lt_volume_floor_aggressive = 50;
    Volume lp_volume_floor = 10;
    Price initial_mid = 10000;     // m_0

    void validate() const;
};

struct OrderIntent {
    enum class Kind { Market, Limit };
    Kind kind = Kind::Market;
    Side side = Side::Buy;
    Price price = 0;  // limit only
    Volume volume = 0;
    double expiry_s = 0.0;  // limit only: submit time + gamma
};

/// Fixed private valuation for the session: f = m0 * exp(sigma * z).
struct FundamentalistState {
    double fundamental_value = 0.0;

    static FundamentalistState draw(const FixedParams& fixed, double sigma, Rng& rng) {
        return {static_cast<double>(fixed.initial_mid) * std::exp(sigma * rng.normal())};
    }
};

struct ChartistState {
    double ema = 0.0;       // private EMA of the mid-price
    double time_constant = 0.0;
    double last_decision_s = 0.0;

    static ChartistState init(const FixedParams& fixed) {
        return {static_cast<double>(fixed.initial_mid),
                trunc_exp_mean(fixed.lt_lambda_mean, fixed.lt_lambda_min, fixed.lt_lambda_max),
                0.0};
    }
};

/// Shape parameter for a taker's volume draw: 1 -/+ rho/nu for sell/buy.
inline double taker_alpha(Side side, double imbalance, double nu) {
    return side == Side::Sell ? 1.0 - imbalance / nu : 1.0 + imbalance / nu;
}

/// Volume floor switch: 50 when the valuation gap exceeds delta * mid.
inline Volume taker_volume_floor(double gap, double mid, const ThetaParams& theta,
                                 const FixedParams& fixed) {
    return std::abs(gap) > theta.aggression_cutoff * mid ? fixed.lt_volume_floor_aggressive
                                                         : fixed.lt_volume_floor_calm;
}

std::optional<OrderIntent> fundamentalist_decide(const FundamentalistState& state,
                                                 const MirrorView& view,
                                                 const ThetaParams& theta,
                                                 const FixedParams& fixed, Rng& rng);

/// Updates the EMA in place (the update happens whether or not an order is
/// produced) and returns the intent, if any.
std::optional<OrderIntent> chartist_decide(ChartistState& state, const MirrorView& view,
                                           const ThetaParams& theta, const FixedParams& fixed,
                                           double now_s, Rng& rng);

// Pure pieces of the provider rule, exposed for direct testing.
inline bool provider_places_ask(double u_side, double imbalance) {
    return u_side < (imbalance + 1.0) / 2.0;
}
inline double provider_gamma_rate(bool is_ask, double imbalance, double kappa) {
    return std::exp((is_ask ? -imbalance : imbalance) / kappa);
}
inline double provider_alpha(bool is_ask, double imbalance, double nu) {
    return is_ask ? 1.0 - imbalance / nu : 1.0 + imbalance / nu;
}
inline Price provider_limit_price(bool is_ask, Price best_bid, Price best_ask, double eta) {
    const Price depth = static_cast<Price>(std::floor(eta));
    const Price price = is_ask ? best_bid + 1 + depth : best_ask - 1 - depth;
    return price < 1 ? 1 : price;  // prices are positive ticks
}

OrderIntent liquidity_provider_decide(const MirrorView& view, const ThetaParams& theta,
                                      const FixedParams& fixed, double now_s, Rng& rng);

}  // namespace atex
