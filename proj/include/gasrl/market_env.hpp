#pragma once

#include "gasrl/rng.hpp"
#include "gasrl/seasonality.hpp"

#include <array>
#include <cstdint>

namespace gasrl {

/// Calibrated market constants. Defaults are the Italian-market calibration.
struct MarketParams {
    int horizon = 360;  // months per episode (30 years)

    double eta_d = 0.20;     // demand elasticity
    double lambda_d = 0.975; // demand stickiness
    double rho_d = 0.98;     // demand AR(1) persistence
    double sigma_d = 0.01;   // demand shock volatility

    double eta_s = 0.30;
    double lambda_s = 0.95;
    double rho_s = 0.75;
    double sigma_s = 0.04;

    double i_max = 3.0;      // storage capacity
    double tau = 0.005;      // monthly storage cost per unit held
    double r = 0.0025;       // monthly interest rate

    double action_lo = 0.01;  // price bounds L, U
    double action_hi = 100.0;
    double gamma = 0.99;

    // Initial state. Not part of the calibration; see README.
    double initial_inventory_fraction = 0.5;
    double initial_bank = 0.0;
    double initial_log_price = 0.0;  // p_d, p_s and p_{-1} at t = 0

    /// Throws ConfigError naming the first offending field.
    void validate() const;

    double log_lo() const;
    double log_hi() const;

    bool operator==(const MarketParams&) const = default;
};

struct RewardWeights {
    double theta_v = 20.0;    // volatility penalty
    double theta_m = 1000.0;  // market-clearing penalty
    double theta_n = 750.0;   // refill-threshold penalty
    double refill_fraction = 0.83;
    int refill_month = 11;    // calendar month (1-12) at which the threshold is checked

    void validate() const;
    bool operator==(const RewardWeights&) const = default;
};

inline constexpr std::size_t kObservationSize = 9;

/// (S_t, cos phi_t, sin phi_t, u_d, u_s, p_d, p_s, ln(0.5 + I_t), p_t)
using Observation = std::array<double, kObservationSize>;

struct MarketState {
    int t = 0;
    double p_d = 0.0;
    double p_s = 0.0;
    double u_d = 0.0;
    double u_s = 0.0;
    double inventory = 0.0;
    double bank = 0.0;
    double last_log_price = 0.0;
    CounterRng::State rng{};

    bool operator==(const MarketState&) const = default;
};

struct RewardParts {
    double delta_g = 0.0;
    double volatility_term = 0.0;
    double clearing_term = 0.0;
    double threshold_term = 0.0;
};

struct StepOutcome {
    Observation observation{};
    double reward = 0.0;
    RewardParts reward_parts;
    bool failure = false;           // m_t
    double failure_severity = 0.0;  // m~_t
    bool threshold_miss = false;    // n_t
    double threshold_gap = 0.0;     // n~_t
    double demand = 0.0;            // e^{d_t}
    double supply = 0.0;            // e^{s_t}
    double excess_demand = 0.0;     // D_t
    double price = 0.0;             // P_t
    double log_price = 0.0;         // clipped action p_t
    double inventory = 0.0;         // closing inventory
    double bank = 0.0;
    int t = 0;                      // month index of this step (1..T)
    int month = 1;                  // calendar month 1..12
    bool done = false;
};

// ---- Single-equation building blocks -------------------------------------

struct PriceSignals {
    double p_d;
    double p_s;
};

/// Sticky log-price signals: p = ln(lambda e^{p_prev} + (1 - lambda) P). Throws DomainError if P <= 0.
PriceSignals update_price_signals(double p_d_prev, double p_s_prev, double price, const MarketParams& params);

/// AR(1) shock u = rho u_prev + sigma eps.
double update_shock(double u_prev, double rho, double sigma, double eps);

struct DemandSupply {
    double log_demand;   // d_t
    double log_supply;   // s_t
    double excess;       // D_t = e^d - e^s
};

DemandSupply compute_demand_supply(double seasonal, double p_d, double p_s, double u_d, double u_s,
                                   const MarketParams& params);

struct InventoryTransition {
    double next;
    bool failure;
    double severity;
};

/// Storage absorbs excess demand within [0, i_max]; clamping is a market failure.
InventoryTransition inventory_transition(double inventory, double excess_demand, double i_max);

struct ThresholdCheck {
    bool miss;
    double gap;
};

/// Refill-threshold test on the closing inventory of the step in calendar month `month`.
ThresholdCheck threshold_check(double closing_inventory, int month, const RewardWeights& weights, double i_max);

/// g = (1 + r) g_prev - tau I_prev - P (I_next - I_prev) [+ I_next P^m on the final step].
double update_bank(double g_prev, double i_prev, double i_next, double price, bool final_step,
                   const MarketParams& params, double p_d, double p_s);

/// R = delta_g - theta_v (p - p_prev)^2 - theta_m m (1 + m~) - theta_n n (1 + n~).
RewardParts compute_reward_parts(double delta_g, double log_price, double prev_log_price, bool failure,
                                 double failure_severity, bool miss, double gap, const RewardWeights& weights);
double total_reward(const RewardParts& parts);

/// Calendar month (1-12) of month index t, with t = 0 January.
int calendar_month(int t);

// ---- Environment ----------------------------------------------------------

/// One episode of the monthly gas market. Strictly sequential; cheap to copy,
/// and copies evolve independently.
class MarketEnv {
public:
    MarketEnv(MarketParams params, RewardWeights weights, SeasonalCoefficients seasonal);

    /// Reinitializes the state and reseeds the noise stream.
    Observation reset(std::uint64_t seed);

    /// Advances one month with log-price action `action` (clipped to [ln L, ln U]).
    /// Throws ProtocolError after the episode is done.
    StepOutcome step(double action);

    Observation observe() const;
    bool done() const { return state_.t >= params_.horizon; }

    const MarketState& state() const { return state_; }
    void set_state(const MarketState& s);

    const MarketParams& params() const { return params_; }
    const RewardWeights& weights() const { return weights_; }
    const SeasonalCoefficients& seasonal() const { return seasonal_; }
    /// Swaps in new market parameters (e.g. a sigma_s override) without touching the state.
    void set_params(const MarketParams& params);

private:
    MarketParams params_;
    RewardWeights weights_;
    SeasonalCoefficients seasonal_;
    MarketState state_{};
    CounterRng rng_;
};

}  // namespace gasrl
