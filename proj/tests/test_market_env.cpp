#include "gasrl/error.hpp"
#include "gasrl/market_env.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace gasrl;

namespace {

constexpr double kTol = 1e-12;

SeasonalCoefficients zero_seasonal() { return SeasonalCoefficients{{{1, 0.0, 0.0}}}; }

}  // namespace

TEST_CASE("price signals") {
    MarketParams p;
    auto s = update_price_signals(0.0, 0.0, 1.0, p);
    CHECK(std::abs(s.p_d) < kTol);
    CHECK(std::abs(s.p_s) < kTol);

    MarketParams sticky0 = p;
    sticky0.lambda_d = 0.0;
    s = update_price_signals(0.0, 0.0, 2.0, sticky0);
    CHECK(std::abs(s.p_d - std::log(2.0)) < kTol);
    CHECK(std::abs(s.p_d - 0.693147) < 1e-6);

    s = update_price_signals(0.0, 0.0, 2.0, p);
    CHECK(std::abs(s.p_d - std::log(1.025)) < kTol);
    CHECK(std::abs(s.p_d - 0.0246926) < 1e-7);

    CHECK_THROWS_AS(update_price_signals(0.0, 0.0, 0.0, p), DomainError);
    CHECK_THROWS_AS(update_price_signals(0.0, 0.0, -1.0, p), DomainError);
}

TEST_CASE("AR(1) shock") {
    CHECK(std::abs(update_shock(0.1, 0.98, 0.01, 0.0) - 0.098) < kTol);
    CHECK(std::abs(update_shock(0.3, 0.0, 0.04, 1.0) - 0.04) < kTol);
}

TEST_CASE("demand and supply") {
    MarketParams p;
    auto ds = compute_demand_supply(0, 0, 0, 0, 0, p);
    CHECK(ds.log_demand == 0.0);
    CHECK(ds.log_supply == 0.0);
    CHECK(ds.excess == 0.0);

    ds = compute_demand_supply(0.2, 0.5, 0.0, 0.01, 0.0, p);
    CHECK(std::abs(ds.log_demand - 0.11) < kTol);

    ds = compute_demand_supply(0.0, 0.0, 1.0, 0.0, 0.0, p);
    CHECK(std::abs(ds.log_supply - 0.3) < kTol);
    CHECK(std::abs(std::exp(ds.log_supply) - 1.349859) < 1e-6);
    CHECK(std::abs(ds.excess - (1.0 - std::exp(0.3))) < kTol);
}

TEST_CASE("inventory transition branches") {
    auto tr = inventory_transition(1.5, 0.5, 3.0);
    CHECK(std::abs(tr.next - 1.0) < kTol);
    CHECK_FALSE(tr.failure);
    CHECK(tr.severity == 0.0);

    tr = inventory_transition(1.0, 1.2, 3.0);
    CHECK(tr.next == 0.0);
    CHECK(tr.failure);
    CHECK(std::abs(tr.severity - 0.2) < kTol);

    tr = inventory_transition(2.8, -0.5, 3.0);
    CHECK(tr.next == 3.0);
    CHECK(tr.failure);
    CHECK(std::abs(tr.severity - 0.3) < kTol);

    // Boundaries belong to the interior branch.
    tr = inventory_transition(1.0, 1.0, 3.0);
    CHECK(tr.next == 0.0);
    CHECK_FALSE(tr.failure);
    tr = inventory_transition(1.0, -2.0, 3.0);
    CHECK(tr.next == 3.0);
    CHECK_FALSE(tr.failure);
}

TEST_CASE("bank account") {
    MarketParams p;
    CHECK(std::abs(update_bank(0.0, 1.0, 0.8, 1.0, false, p, 0, 0) - 0.195) < kTol);
    CHECK(std::abs(update_bank(100.0, 0.0, 0.0, 1.0, false, p, 0, 0) - 100.25) < kTol);
    const double no_liq = update_bank(0.0, 2.0, 2.0, 1.0, false, p, 0, 0);
    const double liq = update_bank(0.0, 2.0, 2.0, 1.0, true, p, 0, 0);
    CHECK(std::abs(liq - no_liq - 2.0) < kTol);
    // Liquidation values stock at the mean of the exponentiated signals.
    const double liq2 = update_bank(0.0, 2.0, 2.0, 1.0, true, p, std::log(2.0), std::log(4.0));
    CHECK(std::abs(liq2 - no_liq - 2.0 * 3.0) < kTol);
}

TEST_CASE("reward") {
    RewardWeights w;
    auto parts = compute_reward_parts(1.0, 0.3, 0.3, false, 0, false, 0, w);
    CHECK(total_reward(parts) == 1.0);

    parts = compute_reward_parts(0.0, 0.1, 0.0, false, 0, false, 0, w);
    CHECK(std::abs(total_reward(parts) + 0.2) < kTol);

    parts = compute_reward_parts(0.0, 0.0, 0.0, true, 0.2, false, 0, w);
    CHECK(std::abs(total_reward(parts) + 1200.0) < 1e-9);
    CHECK(std::abs(parts.clearing_term - 1200.0) < 1e-9);

    parts = compute_reward_parts(0.0, 0.0, 0.0, false, 0, true, 0.49, w);
    CHECK(std::abs(parts.threshold_term - 750.0 * 1.49) < 1e-9);
}

TEST_CASE("refill threshold") {
    RewardWeights w;
    auto th = threshold_check(2.0, 11, w, 3.0);
    CHECK(th.miss);
    CHECK(std::abs(th.gap - 0.49) < kTol);
    th = threshold_check(2.0, 10, w, 3.0);
    CHECK_FALSE(th.miss);
    CHECK(th.gap == 0.0);
    th = threshold_check(2.6, 11, w, 3.0);
    CHECK_FALSE(th.miss);
    CHECK(th.gap == 0.0);
}

TEST_CASE("calendar months") {
    CHECK(calendar_month(0) == 1);
    CHECK(calendar_month(10) == 11);
    CHECK(calendar_month(11) == 12);
    CHECK(calendar_month(12) == 1);
    CHECK(calendar_month(359) == 12);
}

TEST_CASE("reset initial state and observation") {
    MarketEnv env(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    const Observation obs = env.reset(7);
    CHECK(env.state().inventory == 1.5);
    CHECK(env.state().bank == 0.0);
    CHECK(obs[1] == 1.0);
    CHECK(obs[2] == 0.0);
    CHECK(obs[3] == 0.0);
    CHECK(obs[4] == 0.0);
    CHECK(obs[5] == 0.0);
    CHECK(obs[6] == 0.0);
    CHECK(std::abs(obs[7] - std::log(2.0)) < kTol);
    CHECK(obs[8] == 0.0);
    CHECK(obs[0] == seasonal_value(default_seasonal_coefficients(), 0));
}

TEST_CASE("invalid parameters are rejected with the field name") {
    MarketParams p;
    p.lambda_d = 1.0;
    try {
        MarketEnv env(p, RewardWeights{}, zero_seasonal());
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("lambda_d") != std::string::npos);
    }
    RewardWeights w;
    w.refill_month = 13;
    CHECK_THROWS_AS(MarketEnv(MarketParams{}, w, zero_seasonal()), ConfigError);
    p = MarketParams{};
    p.action_lo = 200;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("step clips the action and enforces the protocol") {
    MarketParams p;
    p.horizon = 2;
    MarketEnv env(p, RewardWeights{}, default_seasonal_coefficients());
    env.reset(1);
    StepOutcome out = env.step(10.0);
    CHECK(std::abs(out.log_price - std::log(100.0)) < kTol);
    CHECK(std::abs(out.log_price - 4.60517) < 1e-5);
    CHECK(std::abs(out.price - 100.0) < 1e-12);
    CHECK_THROWS_AS(env.step(std::nan("")), DomainError);
    out = env.step(-10.0);
    CHECK(std::abs(out.price - 0.01) < 1e-15);
    CHECK(out.done);
    CHECK_THROWS_AS(env.step(0.0), ProtocolError);
}

TEST_CASE("equal seeds and actions give identical outcome streams") {
    MarketEnv a(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    MarketEnv b = a;
    a.reset(7);
    b.reset(7);
    CounterRng actions(3);
    while (!a.done()) {
        const double act = actions.uniform(-5, 5);
        const StepOutcome x = a.step(act), y = b.step(act);
        REQUIRE(x.observation == y.observation);
        REQUIRE(x.reward == y.reward);
        REQUIRE(x.bank == y.bank);
    }
    CHECK(a.state() == b.state());
}

TEST_CASE("properties under random actions") {
    MarketEnv env(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    CounterRng actions(11);
    for (int ep = 0; ep < 20; ++ep) {
        env.reset(static_cast<std::uint64_t>(ep));
        while (!env.done()) {
            const StepOutcome out = env.step(actions.uniform(-6, 6));
            REQUIRE(out.inventory >= 0.0);
            REQUIRE(out.inventory <= 3.0);
            const auto& rp = out.reward_parts;
            REQUIRE(out.reward == rp.delta_g - rp.volatility_term - rp.clearing_term - rp.threshold_term);
            REQUIRE(out.failure == (out.failure_severity > 0.0));
            REQUIRE(out.threshold_miss == (out.threshold_gap > 0.0));
            const double c = out.observation[1], s = out.observation[2];
            REQUIRE(std::abs(c * c + s * s - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("observation phase and seasonal component repeat every 12 months") {
    MarketEnv env(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    env.reset(5);
    std::vector<Observation> obs;
    while (!env.done()) obs.push_back(env.step(0.0).observation);
    for (std::size_t i = 12; i < obs.size(); ++i) {
        REQUIRE(obs[i][0] == obs[i - 12][0]);
        REQUIRE(obs[i][1] == obs[i - 12][1]);
        REQUIRE(obs[i][2] == obs[i - 12][2]);
    }
}

TEST_CASE("signals converge monotonically to a constant price without noise") {
    MarketParams p;
    p.sigma_d = p.sigma_s = 0.0;
    MarketEnv env(p, RewardWeights{}, zero_seasonal());
    env.reset(0);
    const double target = std::log(2.5);
    double gap_d = std::abs(env.state().p_d - target), gap_s = std::abs(env.state().p_s - target);
    for (int i = 0; i < 200; ++i) {
        env.step(target);
        const double nd = std::abs(env.state().p_d - target), ns = std::abs(env.state().p_s - target);
        REQUIRE(nd <= gap_d);
        REQUIRE(ns <= gap_s);
        gap_d = nd;
        gap_s = ns;
    }
    CHECK(gap_d < 0.01);
    CHECK(gap_s < 1e-4);
}

TEST_CASE("zero-noise constant-price episode equals an independent scalar recurrence") {
    MarketParams p;
    p.sigma_d = p.sigma_s = 0.0;
    const RewardWeights w;
    const SeasonalCoefficients sc = default_seasonal_coefficients();
    for (double price : {1.0, 0.8, 1.3}) {
        MarketEnv env(p, w, sc);
        env.reset(123);
        double env_total = 0.0;
        while (!env.done()) env_total += env.step(std::log(price)).reward;

        // Straight-line oracle.
        const double pi = std::acos(-1.0);
        double pd = 0, ps = 0, ud = 0, us = 0, inv = 1.5, g = 0, prev = 0, total = 0;
        for (int t = 1; t <= 360; ++t) {
            const double lp = std::log(price);
            pd = std::log(0.975 * std::exp(pd) + 0.025 * price);
            ps = std::log(0.95 * std::exp(ps) + 0.05 * price);
            ud = 0.98 * ud;
            us = 0.75 * us;
            double S = 0;
            for (const auto& term : sc.terms) {
                const double phi = 2 * pi * (t % 12) / 12.0;
                S += term.a * std::cos(term.harmonic * phi) + term.b * std::sin(term.harmonic * phi);
            }
            const double D = std::exp(S - 0.2 * pd + ud) - std::exp(0.3 * ps + us);
            double next = inv - D, m = 0, mt = 0;
            if (next < 0) {
                mt = -next;
                next = 0;
                m = 1;
            } else if (next > 3.0) {
                mt = next - 3.0;
                next = 3.0;
                m = 1;
            }
            double n = 0, nt = 0;
            if (t % 12 == 10 && next < 0.83 * 3.0) {
                n = 1;
                nt = 0.83 * 3.0 - next;
            }
            double g_next = 1.0025 * g - 0.005 * inv - price * (next - inv);
            if (t == 360) g_next += next * 0.5 * (std::exp(pd) + std::exp(ps));
            total += (g_next - g) - 20 * (lp - prev) * (lp - prev) - 1000 * m * (1 + mt) - 750 * n * (1 + nt);
            g = g_next;
            inv = next;
            prev = lp;
        }
        CHECK(std::abs(env_total - total) < 1e-9 * std::max(1.0, std::abs(total)));
    }
}

TEST_CASE("AR(1) long-run standard deviation") {
    MarketParams p;
    CounterRng rng(99);
    const long n = 1'000'000;
    double ud = 0, us = 0, sd = 0, ss = 0, md = 0, ms = 0;
    for (long i = 0; i < n; ++i) {
        ud = update_shock(ud, p.rho_d, p.sigma_d, rng.normal());
        us = update_shock(us, p.rho_s, p.sigma_s, rng.normal());
        md += ud;
        ms += us;
        sd += ud * ud;
        ss += us * us;
    }
    md /= n;
    ms /= n;
    const double std_d = std::sqrt(sd / n - md * md), std_s = std::sqrt(ss / n - ms * ms);
    const double th_d = p.sigma_d / std::sqrt(1 - p.rho_d * p.rho_d);
    const double th_s = p.sigma_s / std::sqrt(1 - p.rho_s * p.rho_s);
    CHECK(std::abs(th_d - 0.050252) < 1e-6);
    CHECK(std::abs(std_d / th_d - 1) < 0.03);
    CHECK(std::abs(std_s / th_s - 1) < 0.03);
}
