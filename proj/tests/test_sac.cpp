#include "gasrl/error.hpp"
#include "gasrl/sac.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

using namespace gasrl;
using namespace gasrl::sac;

namespace {

AgentConfig tiny_config() {
    AgentConfig c;
    c.hidden = {4};
    c.batch_size = 3;
    c.warmup_steps = 3;
    c.replay_capacity = 100;
    return c;
}

Observation make_obs(double base) {
    Observation o{};
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = std::sin(base + 0.7 * static_cast<double>(k));
    return o;
}

Batch synthetic_batch(int n, std::uint64_t seed, const AgentConfig& cfg) {
    CounterRng rng(seed);
    std::vector<Transition> items;
    for (int i = 0; i < n; ++i) {
        Transition t;
        t.observation = make_obs(rng.uniform(-3, 3));
        t.next_observation = make_obs(rng.uniform(-3, 3));
        t.action = rng.uniform(cfg.action_lo, cfg.action_hi);
        t.reward = rng.normal();
        t.done = i % 4 == 3;
        items.push_back(t);
    }
    return Batch::from(items);
}

// Actor whose output head is set by hand: mean = m, log_std = ls, independent of the input.
Mlp constant_actor(double m, double ls) {
    nn::DenseLayer l{Matrix::Zero(2, kObservationSize), Vector(2)};
    l.bias << m, ls;
    return Mlp({l});
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)}); }

template <typename Loss>
double max_fd_error(Mlp& net, const std::vector<double>& analytic, Loss loss, double h = 1e-5) {
    std::vector<double> p = net.parameters();
    double worst = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double keep = p[i];
        p[i] = keep + h;
        net.set_parameters(p);
        const double up = loss();
        p[i] = keep - h;
        net.set_parameters(p);
        const double down = loss();
        p[i] = keep;
        net.set_parameters(p);
        const double numeric = (up - down) / (2 * h);
        // Absolute floor for gradients that are zero up to rounding.
        if (std::abs(analytic[i]) < 1e-8 && std::abs(numeric) < 1e-8) continue;
        worst = std::max(worst, rel_err(analytic[i], numeric));
    }
    return worst;
}

}  // namespace

TEST_CASE("action scale for the default price bounds") {
    const AgentConfig cfg;
    const auto s = ActionScale::from_bounds(cfg.action_lo, cfg.action_hi);
    CHECK(std::abs(s.center) < 1e-15);
    CHECK(std::abs(s.half_width - std::log(100.0)) < 1e-15);
}

TEST_CASE("sample_action basics") {
    const AgentConfig cfg;
    const Observation obs = make_obs(0.3);
    const Mlp zero_actor = constant_actor(0.0, 0.0);
    CHECK(sample_action_with_noise(zero_actor, obs, 0.0, cfg).action == 0.0);
    CHECK(deterministic_action(zero_actor, obs, cfg) == 0.0);
    CHECK(std::exp(deterministic_action(zero_actor, obs, cfg)) == 1.0);

    const Mlp big = constant_actor(50.0, -5.0);
    const double a = deterministic_action(big, obs, cfg);
    CHECK(a <= cfg.action_hi);
    CHECK(cfg.action_hi - a < 1e-12);

    // Deterministic action = sample with zero noise.
    CounterRng rng(3);
    const Mlp actor = Mlp::create(std::vector<int>{9, 4, 2}, rng);
    CHECK(deterministic_action(actor, obs, cfg) == sample_action_with_noise(actor, obs, 0.0, cfg).action);
    CHECK(deterministic_action(actor, obs, cfg) == deterministic_action(actor, obs, cfg));

    for (int i = 0; i < 1000; ++i) {
        const auto s = sample_action(actor, make_obs(i * 0.1), rng, cfg);
        CHECK(s.action > cfg.action_lo);
        CHECK(s.action < cfg.action_hi);
    }
}

TEST_CASE("non-finite actor output raises NumericError") {
    const AgentConfig cfg;
    Mlp actor = constant_actor(std::nan(""), 0.0);
    CHECK_THROWS_AS(deterministic_action(actor, make_obs(0), cfg), NumericError);
    CHECK_THROWS_AS(sample_action_with_noise(actor, make_obs(0), 0.1, cfg), NumericError);
}

TEST_CASE("log_prob integrates to one over the action interval") {
    const AgentConfig cfg;
    const auto scale = ActionScale::from_bounds(cfg.action_lo, cfg.action_hi);
    for (auto [mu, ls] : {std::pair{0.0, 0.0}, std::pair{0.7, -0.5}, std::pair{-1.2, 0.4}}) {
        const Mlp actor = constant_actor(mu, ls);
        const double sigma = std::exp(ls);
        // Integrate over z with a fine grid, mapping each z to its action and density.
        const int n = 200000;
        const double z_lo = mu - 12 * sigma, z_hi = mu + 12 * sigma;
        double total = 0, prev_a = 0, prev_d = 0;
        for (int i = 0; i <= n; ++i) {
            const double z = z_lo + (z_hi - z_lo) * i / n;
            const double eps = (z - mu) / sigma;
            const auto s = sample_action_with_noise(actor, make_obs(0), eps, cfg);
            const double dens = std::exp(s.log_prob);
            if (i > 0) total += 0.5 * (dens + prev_d) * (s.action - prev_a);
            prev_a = s.action;
            prev_d = dens;
        }
        CHECK(std::abs(total - 1.0) < 1e-3);
        // Closed form: N(eps) / (s (1 - tanh^2 z)).
        const double eps = 0.37, z = mu + sigma * eps, u = std::tanh(z);
        const double expected = -0.5 * eps * eps - std::log(std::sqrt(2 * std::numbers::pi)) - ls -
                                std::log(scale.half_width * (1 - u * u));
        CHECK(std::abs(sample_action_with_noise(actor, make_obs(0), eps, cfg).log_prob - expected) < 1e-10);
    }
}

TEST_CASE("log1m_tanh_sq is stable") {
    for (double z : {-30.0, -3.0, -0.1, 0.0, 0.2, 4.0, 40.0}) {
        const double direct = std::log(1 - std::tanh(z) * std::tanh(z));
        if (std::abs(z) < 10) CHECK(std::abs(log1m_tanh_sq(z) - direct) < 1e-10);
        CHECK(std::isfinite(log1m_tanh_sq(z)));
    }
    CHECK(std::abs(log1m_tanh_sq(40.0) - (2 * std::log(2.0) - 80.0)) < 1e-9);
}

TEST_CASE("critic targets: myopic, terminal and hand-computed cases") {
    AgentConfig cfg = tiny_config();
    SacAgent agent(cfg, 1);
    Networks nets = agent.networks();
    Batch b = synthetic_batch(5, 2, cfg);
    const Vector noise = Vector::Constant(5, 0.3);

    AgentConfig myopic = cfg;
    myopic.gamma = 0.0;
    const Vector y0 = critic_targets(b, nets, 0.7, noise, myopic);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(y0(i) == b.rewards(i));

    b.dones.setOnes();
    const Vector y1 = critic_targets(b, nets, 0.7, noise, cfg);
    for (Eigen::Index i = 0; i < 5; ++i) CHECK(y1(i) == b.rewards(i));

    // Single transition, by hand.
    Batch one = synthetic_batch(1, 9, cfg);
    one.dones(0) = 0.0;
    const double eps = -0.45, alpha = 0.3;
    const auto out = nets.actor.forward(std::span<const double>(one.next_observations.col(0).data(), 9));
    const double ls = std::clamp(out[1], cfg.log_std_min, cfg.log_std_max);
    const double z = out[0] + std::exp(ls) * eps, u = std::tanh(z);
    const double logp = -0.5 * eps * eps - ls - 0.5 * std::log(2 * std::numbers::pi) - std::log(1 - u * u);
    std::vector<double> xin(one.next_observations.col(0).data(), one.next_observations.col(0).data() + 9);
    xin.push_back(u);
    const double q1 = nets.target1.forward(std::span<const double>(xin))[0];
    const double q2 = nets.target2.forward(std::span<const double>(xin))[0];
    const double expected = one.rewards(0) + cfg.gamma * (std::min(q1, q2) - alpha * logp);
    const Vector y = critic_targets(one, nets, alpha, Vector::Constant(1, eps), cfg);
    CHECK(std::abs(y(0) - expected) < 1e-10);
}

TEST_CASE("critic loss gradients match finite differences") {
    AgentConfig cfg = tiny_config();
    SacAgent agent(cfg, 4);
    Networks nets = agent.networks();
    const Batch b = synthetic_batch(6, 5, cfg);
    const Vector y = critic_targets(b, nets, 0.5, Vector::Constant(6, 0.2), cfg);
    nn::Gradients g1, g2;
    critic_loss(b, nets.critic1, nets.critic2, y, cfg, &g1, &g2);
    auto loss = [&] { return critic_loss(b, nets.critic1, nets.critic2, y, cfg, nullptr, nullptr); };
    CHECK(max_fd_error(nets.critic1, nn::flatten(g1), loss) < 1e-4);
    CHECK(max_fd_error(nets.critic2, nn::flatten(g2), loss) < 1e-4);
}

TEST_CASE("actor loss gradient matches finite differences") {
    AgentConfig cfg = tiny_config();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SacAgent agent(cfg, seed);
        Networks nets = agent.networks();
        const Batch b = synthetic_batch(5, seed + 10, cfg);
        Vector noise(5);
        noise << 0.3, -1.1, 0.8, 0.05, -0.4;
        for (double alpha : {0.0, 0.2, 1.5}) {
            nn::Gradients g;
            actor_loss(b, nets.actor, nets.critic1, nets.critic2, alpha, noise, cfg, &g);
            auto loss = [&] { return actor_loss(b, nets.actor, nets.critic1, nets.critic2, alpha, noise, cfg, nullptr); };
            CHECK(max_fd_error(nets.actor, nn::flatten(g), loss) < 1e-3);
        }
    }
}

TEST_CASE("actor gradient respects the log_std clamp") {
    AgentConfig cfg = tiny_config();
    cfg.log_std_max = -3.0;  // force clamping of the default head output
    SacAgent agent(cfg, 6);
    Networks nets = agent.networks();
    const Batch b = synthetic_batch(4, 8, cfg);
    const Vector noise = Vector::Constant(4, 0.6);
    nn::Gradients g;
    actor_loss(b, nets.actor, nets.critic1, nets.critic2, 0.4, noise, cfg, &g);
    auto loss = [&] { return actor_loss(b, nets.actor, nets.critic1, nets.critic2, 0.4, noise, cfg, nullptr); };
    CHECK(max_fd_error(nets.actor, nn::flatten(g), loss) < 1e-3);
}

TEST_CASE("flat objective: alpha 0 and a constant critic give a zero actor gradient") {
    AgentConfig cfg = tiny_config();
    SacAgent agent(cfg, 2);
    Networks nets = agent.networks();
    const std::vector<int> critic_sizes{10, 4, 1};
    Mlp flat = Mlp::zeros(critic_sizes);
    flat.layers().back().bias(0) = 3.0;
    const Batch b = synthetic_batch(5, 1, cfg);
    nn::Gradients g;
    actor_loss(b, nets.actor, flat, flat, 0.0, Vector::Constant(5, 0.5), cfg, &g);
    for (double v : nn::flatten(g)) CHECK(v == 0.0);
}

TEST_CASE("actor loss decreases against a fixed critic") {
    AgentConfig cfg = tiny_config();
    cfg.actor_lr = 1e-2;
    SacAgent agent(cfg, 12);
    Networks& nets = agent.networks();
    // Critic preferring unit actions near 0.5: Q = -(u - 0.5)^2 is not representable by a ReLU
    // net exactly, so use the learned random critic and only check descent.
    const Batch b = synthetic_batch(32, 3, cfg);
    const Vector noise = Vector::Constant(32, 0.1);
    nn::Adam opt(nets.actor, {1e-2});
    const double start = actor_loss(b, nets.actor, nets.critic1, nets.critic2, 0.1, noise, cfg, nullptr);
    for (int i = 0; i < 100; ++i) {
        nn::Gradients g;
        actor_loss(b, nets.actor, nets.critic1, nets.critic2, 0.1, noise, cfg, &g);
        opt.step(nets.actor, g);
    }
    const double end = actor_loss(b, nets.actor, nets.critic1, nets.critic2, 0.1, noise, cfg, nullptr);
    CHECK(end < start);
}

TEST_CASE("temperature loss") {
    Vector at_target = Vector::Constant(8, 1.0);  // log pi = -target_entropy
    auto [loss, grad] = temperature_loss(0.3, at_target, -1.0);
    CHECK(grad == 0.0);
    CHECK(loss == 0.0);

    // Entropy below target (log pi large) -> gradient negative -> log alpha increases.
    Vector confident = Vector::Constant(8, 3.0);
    std::tie(loss, grad) = temperature_loss(0.3, confident, -1.0);
    CHECK(grad < 0.0);
    nn::ScalarAdam opt;
    double la = 0.3;
    la = opt.step(la, grad);
    CHECK(la > 0.3);

    // Finite difference of the scalar loss.
    const Vector lp = (Vector(3) << 0.2, -1.4, 2.2).finished();
    const double h = 1e-6;
    const double numeric = (temperature_loss(0.1 + h, lp, -1.0).first - temperature_loss(0.1 - h, lp, -1.0).first) / (2 * h);
    CHECK(rel_err(temperature_loss(0.1, lp, -1.0).second, numeric) < 1e-6);

    // alpha stays positive for many updates in log space.
    nn::ScalarAdam o2;
    double v = 0.0;
    for (int i = 0; i < 100000; ++i) {
        v = o2.step(v, 1.0);
        REQUIRE(std::exp(v) > 0.0);
    }
}

TEST_CASE("replay buffer ring semantics and protocol") {
    ReplayBuffer buf(2);
    CounterRng rng(1);
    CHECK_THROWS_AS(buf.sample(1, rng), ProtocolError);
    Transition t;
    for (int i = 0; i < 3; ++i) {
        t.reward = i;
        buf.push(t);
    }
    CHECK(buf.size() == 2);
    std::vector<double> rewards{buf.at(0).reward, buf.at(1).reward};
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(buf.sample(3, rng), ProtocolError);

    CounterRng a(5), b(5);
    CHECK(buf.sample_indices(2, a) == buf.sample_indices(2, b));

    const ReplayBuffer back = ReplayBuffer::from_json(nlohmann::json::from_cbor(nlohmann::json::to_cbor(buf.to_json())));
    CHECK(back == buf);
}

TEST_CASE("replay sampling is uniform (chi-square)") {
    const std::size_t k = 50;
    ReplayBuffer buf(k);
    for (std::size_t i = 0; i < k; ++i) buf.push(Transition{});
    CounterRng rng(31);
    std::vector<double> counts(k, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws / 50; ++i)
        for (auto idx : buf.sample_indices(50, rng)) counts[idx] += 1;
    const double expected = static_cast<double>(draws) / k;
    double chi2 = 0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 49 degrees of freedom: mean 49, sd ~9.9; 3 sigma above the mean.
    CHECK(chi2 < 49 + 3 * std::sqrt(2 * 49.0));
}

TEST_CASE("targets equal online critics after a unit polyak step and are not trained directly") {
    AgentConfig cfg = tiny_config();
    SacAgent agent(cfg, 7);
    CHECK(agent.networks().target1 == agent.networks().critic1);
    ReplayBuffer buf(100);
    CounterRng rng(2);
    for (int i = 0; i < 20; ++i) buf.push({make_obs(i), rng.uniform(-4, 4), rng.normal(), make_obs(i + 1), false});
    const Mlp target_before = agent.networks().target1;
    const Mlp critic_before = agent.networks().critic1;
    agent.update(buf);
    // target' = (1 - tau) target + tau critic_after.
    Mlp expected = target_before;
    nn::soft_update(expected, agent.networks().critic1, cfg.polyak);
    CHECK(agent.networks().target1 == expected);
    CHECK_FALSE(agent.networks().critic1 == critic_before);
    nn::soft_update(agent.networks().target1, agent.networks().critic1, 1.0);
    CHECK(agent.networks().target1 == agent.networks().critic1);
}

TEST_CASE("agent serialization and determinism") {
    AgentConfig cfg = tiny_config();
    SacAgent a(cfg, 99), b(cfg, 99);
    CHECK(a == b);
    ReplayBuffer buf(100);
    CounterRng rng(2);
    for (int i = 0; i < 20; ++i) buf.push({make_obs(i), rng.uniform(-4, 4), rng.normal(), make_obs(i + 1), i == 19});
    for (int i = 0; i < 5; ++i) {
        a.update(buf);
        b.update(buf);
    }
    CHECK(a == b);
    SacAgent c = SacAgent::from_json(nlohmann::json::from_cbor(nlohmann::json::to_cbor(a.to_json())));
    CHECK(c == a);
    const auto sa = a.update(buf), sc = c.update(buf);
    CHECK(sa.critic_loss == sc.critic_loss);
    CHECK(a == c);
    for (int i = 0; i < 100; ++i) {
        const double act = a.act(make_obs(i));
        CHECK(act > cfg.action_lo);
        CHECK(act < cfg.action_hi);
    }
}

TEST_CASE("config validation") {
    AgentConfig cfg;
    cfg.warmup_steps = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AgentConfig{};
    cfg.replay_capacity = 10;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = AgentConfig{};
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
