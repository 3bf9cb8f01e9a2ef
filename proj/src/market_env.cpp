#include "gasrl/market_env.hpp"

#include "gasrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gasrl {

namespace {

void require(bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + ": must satisfy " + rule);
}

}  // namespace

void MarketParams::validate() const {
    require(horizon >= 1, "market.horizon", "T >= 1");
    for (auto [v, name] : {std::pair{eta_d, "market.eta_d"}, {eta_s, "market.eta_s"}, {tau, "market.tau"},
                           {r, "market.r"}, {initial_bank, "market.initial_bank"},
                           {initial_log_price, "market.initial_log_price"}}) {
        require(std::isfinite(v), name, "finite value");
    }
    require(lambda_d >= 0.0 && lambda_d < 1.0, "market.lambda_d", "0 <= lambda_d < 1");
    require(lambda_s >= 0.0 && lambda_s < 1.0, "market.lambda_s", "0 <= lambda_s < 1");
    require(rho_d >= 0.0 && rho_d < 1.0, "market.rho_d", "0 <= rho_d < 1");
    require(rho_s >= 0.0 && rho_s < 1.0, "market.rho_s", "0 <= rho_s < 1");
    require(sigma_d >= 0.0 && std::isfinite(sigma_d), "market.sigma_d", "sigma_d >= 0");
    require(sigma_s >= 0.0 && std::isfinite(sigma_s), "market.sigma_s", "sigma_s >= 0");
    require(i_max > 0.0 && std::isfinite(i_max), "market.i_max", "i_max > 0");
    require(action_lo > 0.0, "market.action_lo", "0 < L");
    require(action_hi > action_lo && std::isfinite(action_hi), "market.action_hi", "L < U");
    require(gamma > 0.0 && gamma <= 1.0, "market.gamma", "0 < gamma <= 1");
    require(initial_inventory_fraction >= 0.0 && initial_inventory_fraction <= 1.0,
            "market.initial_inventory_fraction", "0 <= fraction <= 1");
}

double MarketParams::log_lo() const { return std::log(action_lo); }
double MarketParams::log_hi() const { return std::log(action_hi); }

void RewardWeights::validate() const {
    require(theta_v >= 0.0 && std::isfinite(theta_v), "reward.theta_v", "theta_v >= 0");
    require(theta_m >= 0.0 && std::isfinite(theta_m), "reward.theta_m", "theta_m >= 0");
    require(theta_n >= 0.0 && std::isfinite(theta_n), "reward.theta_n", "theta_n >= 0");
    require(refill_fraction >= 0.0 && refill_fraction <= 1.0, "reward.refill_fraction", "0 <= fraction <= 1");
    require(refill_month >= 1 && refill_month <= 12, "reward.refill_month", "1 <= month <= 12");
}

PriceSignals update_price_signals(double p_d_prev, double p_s_prev, double price, const MarketParams& params) {
    if (!(price > 0.0)) throw DomainError("update_price_signals: price must be positive");
    return {std::log(params.lambda_d * std::exp(p_d_prev) + (1.0 - params.lambda_d) * price),
            std::log(params.lambda_s * std::exp(p_s_prev) + (1.0 - params.lambda_s) * price)};
}

double update_shock(double u_prev, double rho, double sigma, double eps) {
    return rho * u_prev + sigma * eps;
}

DemandSupply compute_demand_supply(double seasonal, double p_d, double p_s, double u_d, double u_s,
                                   const MarketParams& params) {
    const double d = seasonal - params.eta_d * p_d + u_d;
    const double s = params.eta_s * p_s + u_s;
    return {d, s, std::exp(d) - std::exp(s)};
}

InventoryTransition inventory_transition(double inventory, double excess_demand, double i_max) {
    const double headroom = i_max - inventory;
    if (excess_demand > inventory) {
        return {0.0, true, excess_demand - inventory};  // unmet demand
    }
    if (excess_demand < -headroom) {
        return {i_max, true, std::abs(excess_demand) - headroom};  // wasted supply
    }
    return {inventory - excess_demand, false, 0.0};
}

ThresholdCheck threshold_check(double closing_inventory, int month, const RewardWeights& weights, double i_max) {
    if (month != weights.refill_month) return {false, 0.0};
    const double required = weights.refill_fraction * i_max;
    if (closing_inventory < required) return {true, required - closing_inventory};
    return {false, 0.0};
}

double update_bank(double g_prev, double i_prev, double i_next, double price, bool final_step,
                   const MarketParams& params, double p_d, double p_s) {
    double g = (1.0 + params.r) * g_prev - params.tau * i_prev - price * (i_next - i_prev);
    if (final_step) {
        const double liquidation_price = 0.5 * (std::exp(p_d) + std::exp(p_s));
        g += i_next * liquidation_price;
    }
    return g;
}

RewardParts compute_reward_parts(double delta_g, double log_price, double prev_log_price, bool failure,
                                 double failure_severity, bool miss, double gap, const RewardWeights& weights) {
    const double dp = log_price - prev_log_price;
    RewardParts parts;
    parts.delta_g = delta_g;
    parts.volatility_term = weights.theta_v * dp * dp;
    parts.clearing_term = failure ? weights.theta_m * (1.0 + failure_severity) : 0.0;
    parts.threshold_term = miss ? weights.theta_n * (1.0 + gap) : 0.0;
    return parts;
}

double total_reward(const RewardParts& parts) {
    return parts.delta_g - parts.volatility_term - parts.clearing_term - parts.threshold_term;
}

int calendar_month(int t) {
    int m = t % 12;
    if (m < 0) m += 12;
    return m + 1;
}

MarketEnv::MarketEnv(MarketParams params, RewardWeights weights, SeasonalCoefficients seasonal)
    : params_(params), weights_(weights), seasonal_(std::move(seasonal)) {
    params_.validate();
    weights_.validate();
    seasonal_.validate();
    reset(0);
}

void MarketEnv::set_params(const MarketParams& params) {
    params.validate();
    params_ = params;
}

Observation MarketEnv::reset(std::uint64_t seed) {
    rng_ = CounterRng(seed);
    state_ = MarketState{};
    state_.t = 0;
    state_.p_d = params_.initial_log_price;
    state_.p_s = params_.initial_log_price;
    state_.u_d = 0.0;
    state_.u_s = 0.0;
    state_.inventory = params_.initial_inventory_fraction * params_.i_max;
    state_.bank = params_.initial_bank;
    state_.last_log_price = params_.initial_log_price;
    state_.rng = rng_.state();
    return observe();
}

void MarketEnv::set_state(const MarketState& s) {
    state_ = s;
    rng_.set_state(s.rng);
}

Observation MarketEnv::observe() const {
    const double phi = month_phase(state_.t);
    return {seasonal_value(seasonal_, state_.t),
            std::cos(phi),
            std::sin(phi),
            state_.u_d,
            state_.u_s,
            state_.p_d,
            state_.p_s,
            std::log(0.5 + state_.inventory),
            state_.last_log_price};
}

StepOutcome MarketEnv::step(double action) {
    if (done()) throw ProtocolError("MarketEnv::step: episode is done; call reset()");
    if (std::isnan(action)) throw DomainError("MarketEnv::step: action is NaN");

    const double p = std::clamp(action, params_.log_lo(), params_.log_hi());
    const double price = std::exp(p);
    const PriceSignals signals = update_price_signals(state_.p_d, state_.p_s, price, params_);

    const int t = state_.t + 1;
    const double seasonal = seasonal_value(seasonal_, t);
    const double eps_d = rng_.normal();
    const double eps_s = rng_.normal();
    const double u_d = update_shock(state_.u_d, params_.rho_d, params_.sigma_d, eps_d);
    const double u_s = update_shock(state_.u_s, params_.rho_s, params_.sigma_s, eps_s);
    const DemandSupply ds = compute_demand_supply(seasonal, signals.p_d, signals.p_s, u_d, u_s, params_);

    const InventoryTransition tr = inventory_transition(state_.inventory, ds.excess, params_.i_max);
    const int month = calendar_month(t);
    const ThresholdCheck th = threshold_check(tr.next, month, weights_, params_.i_max);

    const bool final_step = t == params_.horizon;
    const double bank = update_bank(state_.bank, state_.inventory, tr.next, price, final_step, params_,
                                    signals.p_d, signals.p_s);
    const RewardParts parts = compute_reward_parts(bank - state_.bank, p, state_.last_log_price, tr.failure,
                                                   tr.severity, th.miss, th.gap, weights_);

    state_.t = t;
    state_.p_d = signals.p_d;
    state_.p_s = signals.p_s;
    state_.u_d = u_d;
    state_.u_s = u_s;
    state_.inventory = tr.next;
    state_.bank = bank;
    state_.last_log_price = p;
    state_.rng = rng_.state();

    StepOutcome out;
    out.observation = observe();
    out.reward_parts = parts;
    out.reward = total_reward(parts);
    out.failure = tr.failure;
    out.failure_severity = tr.severity;
    out.threshold_miss = th.miss;
    out.threshold_gap = th.gap;
    out.demand = std::exp(ds.log_demand);
    out.supply = std::exp(ds.log_supply);
    out.excess_demand = ds.excess;
    out.price = price;
    out.log_price = p;
    out.inventory = tr.next;
    out.bank = bank;
    out.t = t;
    out.month = month;
    out.done = done();
    return out;
}

}  // namespace gasrl
