#include "atex/agents.hpp"

namespace atex {

void ThetaParams::validate() const {
    if (population_ratio < 1.0) throw Error("theta: N must be >= 1");
    if (aggression_cutoff < 0.0) throw Error("theta: delta must be >= 0");
    if (placement_depth <= 0.0) throw Error("theta: kappa must be > 0");
    if (imbalance_scaling <= 1.0) throw Error("theta: nu must be > 1");
    if (value_dispersion < 0.0) throw Error("theta: sigma must be >= 0");
}

void FixedParams::validate() const {
    if (!(0.0 < lt_lambda_min && lt_lambda_min < lt_lambda_max))
        throw Error("fixed: need 0 < lt_lambda_min < lt_lambda_max");
    if (!(0.0 < lp_lambda_min && lp_lambda_min < lp_lambda_max))
        throw Error("fixed: need 0 < lp_lambda_min < lp_lambda_max");
    if (order_ttl <= 0.0) throw Error("fixed: order_ttl must be positive");
    if (initial_mid <= 0) throw Error("fixed: initial_mid must be positive");
}

namespace {

std::optional<OrderIntent> taker_intent(Side side, double gap, const MirrorView& view,
                                        const ThetaParams& theta, const FixedParams& fixed,
                                        Rng& rng) {
    // A market order executes against the contra side; nothing to do if it
    // is empty (the driver re-checks against the engine as well).
    const bool contra_empty = side == Side::Sell ? view.bid_side_empty : view.ask_side_empty;
    if (contra_empty) return std::nullopt;

    const Volume floor = taker_volume_floor(gap, view.mid.to_double(), theta, fixed);
    const double alpha = taker_alpha(side, view.imbalance, theta.imbalance_scaling);
    OrderIntent intent;
    intent.kind = OrderIntent::Kind::Market;
    intent.side = side;
    intent.volume = sample_power_law(static_cast<double>(floor), alpha, rng.uniform_open());
    return intent;
}

}  // namespace

std::optional<OrderIntent> fundamentalist_decide(const FundamentalistState& state,
                                                 const MirrorView& view,
                                                 const ThetaParams& theta,
                                                 const FixedParams& fixed, Rng& rng) {
    const double mid = view.mid.to_double();
    const double f = state.fundamental_value;
    if (f == mid) return std::nullopt;  // strict inequalities leave a gap
    const Side side = f < mid ? Side::Sell : Side::Buy;
    return taker_intent(side, f - mid, view, theta, fixed, rng);
}

std::optional<OrderIntent> chartist_decide(ChartistState& state, const MirrorView& view,
                                           const ThetaParams& theta, const FixedParams& fixed,
                                           double now_s, Rng& rng) {
    const double dt = now_s - state.last_decision_s;
    const double mid = view.mid.to_double();
    const double weight = 1.0 - std::exp(-dt / state.time_constant);
    state.ema += weight * (mid - state.ema);
    state.last_decision_s = now_s;
    if (mid == state.ema) return std::nullopt;
    // Trend following: sell when the mid sits below its average, buy above.
    const Side side = mid < state.ema ? Side::Sell : Side::Buy;
    return taker_intent(side, mid - state.ema, view, theta, fixed, rng);
}

OrderIntent liquidity_provider_decide(const MirrorView& view, const ThetaParams& theta,
                                      const FixedParams& fixed, double now_s, Rng& rng) {
    const double rho = view.imbalance;
    const bool is_ask = provider_places_ask(rng.uniform(), rho);
    // Shape is the spread; floored at 1 since retained references can make
    // the spread transiently non-positive.
    const double shape = std::max<double>(static_cast<double>(view.spread), 1.0);
    const double rate = provider_gamma_rate(is_ask, rho, theta.placement_depth);
    const double eta = gamma_draw(rng, shape, rate);

    OrderIntent intent;
    intent.kind = OrderIntent::Kind::Limit;
    intent.side = is_ask ? Side::Sell : Side::Buy;
    intent.price = provider_limit_price(is_ask, view.best_bid, view.best_ask, eta);
    const double alpha = provider_alpha(is_ask, rho, theta.imbalance_scaling);
    intent.volume =
        sample_power_law(static_cast<double>(fixed.lp_volume_floor), alpha, rng.uniform_open());
    intent.expiry_s = now_s + fixed.order_ttl;
    return intent;
}

}  // namespace atex
