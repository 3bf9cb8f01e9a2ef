#pragma once

#include "gasrl/market_env.hpp"
#include "gasrl/neuralnet.hpp"
#include "gasrl/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace gasrl::sac {

using nn::Matrix;
using nn::Mlp;
using nn::Vector;

/// Soft Actor-Critic settings. Defaults follow the common library defaults.
struct AgentConfig {
    double gamma = 0.99;
    std::size_t replay_capacity = 1'000'000;
    std::size_t batch_size = 256;
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double alpha_lr = 3e-4;
    double polyak = 0.005;
    double target_entropy = -1.0;  // on the normalized [-1, 1] action scale
    std::size_t warmup_steps = 1000;
    int updates_per_step = 1;
    std::vector<int> hidden{256, 256};
    double initial_log_alpha = 0.0;
    double log_std_min = -20.0;
    double log_std_max = 2.0;
    // log-price action bounds [ln L, ln U]
    double action_lo = -4.605170185988091;
    double action_hi = 4.605170185988091;

    void validate() const;
    bool operator==(const AgentConfig&) const = default;
};

/// Affine map between the squashed unit interval and the log-price action.
struct ActionScale {
    double center = 0.0;
    double half_width = 1.0;

    static ActionScale from_bounds(double lo, double hi) { return {0.5 * (lo + hi), 0.5 * (hi - lo)}; }
    double to_action(double unit) const { return center + half_width * unit; }
    double to_unit(double action) const { return (action - center) / half_width; }
};

struct Transition {
    Observation observation{};
    double action = 0.0;  // log price in [ln L, ln U]
    double reward = 0.0;
    Observation next_observation{};
    bool done = false;

    bool operator==(const Transition&) const = default;
};

/// Column-major minibatch: one transition per column.
struct Batch {
    Matrix observations;       // 9 x B
    Vector actions;            // B, log-price scale
    Vector rewards;            // B
    Matrix next_observations;  // 9 x B
    Vector dones;              // B, 0 or 1

    Eigen::Index size() const { return actions.size(); }
    static Batch from(const std::vector<Transition>& items);
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 1);

    /// Overwrites the oldest transition once full.
    void push(const Transition& t);
    /// Uniform with replacement over filled slots. Throws ProtocolError if size() < batch_size.
    Batch sample(std::size_t batch_size, CounterRng& rng) const;
    std::vector<std::size_t> sample_indices(std::size_t batch_size, CounterRng& rng) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t cursor() const { return cursor_; }
    /// Slot i in storage order (not insertion order).
    const Transition& at(std::size_t i) const { return storage_.at(i); }

    nlohmann::json to_json() const;
    static ReplayBuffer from_json(const nlohmann::json& j);
    bool operator==(const ReplayBuffer& other) const;

private:
    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    std::vector<Transition> storage_;
};

// ---- Squashed Gaussian policy ------------------------------------------

struct PolicySample {
    double action;    // log price, strictly inside (lo, hi) for finite pre-activations
    double log_prob;  // log density w.r.t. the log-price action
};

/// Stable log(1 - tanh(z)^2).
double log1m_tanh_sq(double z);

/// Draws a = c + s tanh(z), z ~ N(mu(obs), sigma(obs)). Throws NumericError on non-finite network output.
PolicySample sample_action(const Mlp& actor, const Observation& obs, CounterRng& rng, const AgentConfig& config);
/// Same as sample_action with the Gaussian noise forced to `noise`.
PolicySample sample_action_with_noise(const Mlp& actor, const Observation& obs, double noise,
                                      const AgentConfig& config);
/// Squashed mean c + s tanh(mu(obs)); used for every evaluation episode.
double deterministic_action(const Mlp& actor, const Observation& obs, const AgentConfig& config);

/// Batched reparameterized policy pass kept for backpropagation.
struct PolicyPass {
    nn::Tape tape;
    Vector mean;
    Vector log_std;        // after clamping
    Vector clamp_mask;     // 1 where log_std was not clamped
    Vector noise;
    Vector pre_tanh;       // z
    Vector unit_action;    // tanh(z)
    Vector unit_log_prob;  // log density on the normalized [-1, 1] scale
};

PolicyPass policy_pass(const Mlp& actor, const Matrix& observations, const Vector& noise, const AgentConfig& config);

/// Critic input: observation rows stacked over the normalized action row.
Matrix critic_input(const Matrix& observations, const Vector& unit_actions);

struct Networks {
    Mlp actor;
    Mlp critic1;
    Mlp critic2;
    Mlp target1;
    Mlp target2;
};

/// y = r + gamma (1 - done) (min(Q'1, Q'2)(s', a') - alpha log pi(a'|s')), with a' drawn using `next_noise`.
Vector critic_targets(const Batch& batch, const Networks& nets, double alpha, const Vector& next_noise,
                      const AgentConfig& config);

/// 0.5 * (MSE(Q1, y) + MSE(Q2, y)) and its gradients with respect to both critics.
double critic_loss(const Batch& batch, const Mlp& critic1, const Mlp& critic2, const Vector& targets,
                   const AgentConfig& config, nn::Gradients* grad1, nn::Gradients* grad2);

/// mean(alpha log pi(a|s) - min(Q1, Q2)(s, a)) with reparameterized a; gradient w.r.t. the actor only.
double actor_loss(const Batch& batch, const Mlp& actor, const Mlp& critic1, const Mlp& critic2, double alpha,
                  const Vector& noise, const AgentConfig& config, nn::Gradients* grad);

/// -mean(log_alpha (log pi + target_entropy)); returns (loss, d loss / d log_alpha).
std::pair<double, double> temperature_loss(double log_alpha, const Vector& unit_log_probs, double target_entropy);

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha = 0.0;
    double entropy = 0.0;  // -mean unit log prob of the batch
};

/// Owns the networks, optimizers, temperature and the agent's random stream.
class SacAgent {
public:
    SacAgent() = default;
    SacAgent(AgentConfig config, std::uint64_t seed);

    double act(const Observation& obs);                  // stochastic, for training
    double act_deterministic(const Observation& obs) const;
    double act_uniform();                                // warmup exploration

    /// One full gradient step: temperature, critics, actor, then target blending.
    UpdateStats update(const ReplayBuffer& buffer);

    double critic_update(const Batch& batch);
    double actor_update(const Batch& batch);
    double temperature_update(const Batch& batch);

    double alpha() const;
    double log_alpha() const { return log_alpha_; }
    void set_log_alpha(double v) { log_alpha_ = v; }

    const AgentConfig& config() const { return config_; }
    Networks& networks() { return nets_; }
    const Networks& networks() const { return nets_; }
    CounterRng& rng() { return rng_; }
    long update_count() const { return updates_; }

    nlohmann::json to_json() const;
    static SacAgent from_json(const nlohmann::json& j);
    bool operator==(const SacAgent& other) const;

private:
    Vector draw_noise(Eigen::Index n);

    AgentConfig config_;
    Networks nets_;
    nn::Adam actor_opt_;
    nn::Adam critic1_opt_;
    nn::Adam critic2_opt_;
    double log_alpha_ = 0.0;
    nn::ScalarAdam alpha_opt_;
    CounterRng rng_;
    long updates_ = 0;
};

nlohmann::json to_json(const AgentConfig& c);
AgentConfig agent_config_from_json(const nlohmann::json& j);

}  // namespace gasrl::sac
