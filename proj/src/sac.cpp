#include "gasrl/sac.hpp"

#include "gasrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gasrl::sac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

void require(bool ok, const char* field, const char* rule) {
    if (!ok) throw ConfigError(std::string(field) + ": must satisfy " + rule);
}

}  // namespace

void AgentConfig::validate() const {
    require(gamma > 0.0 && gamma <= 1.0, "agent.gamma", "0 < gamma <= 1");
    require(batch_size >= 1, "agent.batch_size", "batch_size >= 1");
    require(replay_capacity >= batch_size, "agent.replay_capacity", "capacity >= batch_size");
    require(warmup_steps >= batch_size, "agent.warmup_steps", "warmup >= batch_size");
    require(actor_lr > 0.0, "agent.actor_lr", "> 0");
    require(critic_lr > 0.0, "agent.critic_lr", "> 0");
    require(alpha_lr > 0.0, "agent.alpha_lr", "> 0");
    require(polyak >= 0.0 && polyak <= 1.0, "agent.polyak", "0 <= polyak <= 1");
    require(updates_per_step >= 1, "agent.updates_per_step", ">= 1");
    require(!hidden.empty(), "agent.hidden", "at least one hidden layer");
    for (int h : hidden) require(h > 0, "agent.hidden", "positive layer widths");
    require(log_std_min < log_std_max, "agent.log_std_min", "log_std_min < log_std_max");
    require(action_lo < action_hi, "agent.action_lo", "action_lo < action_hi");
    require(std::isfinite(target_entropy), "agent.target_entropy", "finite value");
}

Batch Batch::from(const std::vector<Transition>& items) {
    const auto n = static_cast<Eigen::Index>(items.size());
    Batch b;
    b.observations.resize(kObservationSize, n);
    b.next_observations.resize(kObservationSize, n);
    b.actions.resize(n);
    b.rewards.resize(n);
    b.dones.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& t = items[static_cast<std::size_t>(i)];
        for (std::size_t k = 0; k < kObservationSize; ++k) {
            b.observations(static_cast<Eigen::Index>(k), i) = t.observation[k];
            b.next_observations(static_cast<Eigen::Index>(k), i) = t.next_observation[k];
        }
        b.actions(i) = t.action;
        b.rewards(i) = t.reward;
        b.dones(i) = t.done ? 1.0 : 0.0;
    }
    return b;
}

// ---- Replay buffer ---------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("agent.replay_capacity: must be positive");
}

void ReplayBuffer::push(const Transition& t) {
    if (storage_.size() < capacity_) {
        storage_.push_back(t);
    } else {
        storage_[cursor_] = t;
    }
    cursor_ = (cursor_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, CounterRng& rng) const {
    if (batch_size == 0 || size_ < batch_size) {
        throw ProtocolError("ReplayBuffer::sample: buffer holds " + std::to_string(size_) +
                            " transitions, batch needs " + std::to_string(batch_size));
    }
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = static_cast<std::size_t>(rng.below(size_));
    return idx;
}

Batch ReplayBuffer::sample(std::size_t batch_size, CounterRng& rng) const {
    const auto idx = sample_indices(batch_size, rng);
    std::vector<Transition> items;
    items.reserve(idx.size());
    for (auto i : idx) items.push_back(storage_[i]);
    return Batch::from(items);
}

nlohmann::json ReplayBuffer::to_json() const {
    // Columnar blobs: 9 obs, action, reward, 9 next obs, done per transition.
    constexpr std::size_t width = 2 * kObservationSize + 3;
    std::vector<double> flat;
    flat.reserve(storage_.size() * width);
    for (const auto& t : storage_) {
        flat.insert(flat.end(), t.observation.begin(), t.observation.end());
        flat.push_back(t.action);
        flat.push_back(t.reward);
        flat.insert(flat.end(), t.next_observation.begin(), t.next_observation.end());
        flat.push_back(t.done ? 1.0 : 0.0);
    }
    return {{"capacity", capacity_}, {"size", size_}, {"cursor", cursor_}, {"width", width},
            {"data", nn::encode_doubles(flat)}};
}

ReplayBuffer ReplayBuffer::from_json(const nlohmann::json& j) {
    try {
        ReplayBuffer b(j.at("capacity").get<std::size_t>());
        b.size_ = j.at("size").get<std::size_t>();
        b.cursor_ = j.at("cursor").get<std::size_t>();
        const auto width = j.at("width").get<std::size_t>();
        const auto flat = nn::decode_doubles(j.at("data"));
        if (width != 2 * kObservationSize + 3 || flat.size() != width * b.size_ || b.size_ > b.capacity_ ||
            b.cursor_ >= b.capacity_) {
            throw FormatError("replay buffer blob is inconsistent with its header");
        }
        b.storage_.resize(b.size_);
        for (std::size_t i = 0; i < b.size_; ++i) {
            const double* row = flat.data() + i * width;
            auto& t = b.storage_[i];
            std::copy(row, row + kObservationSize, t.observation.begin());
            t.action = row[kObservationSize];
            t.reward = row[kObservationSize + 1];
            std::copy(row + kObservationSize + 2, row + 2 * kObservationSize + 2, t.next_observation.begin());
            t.done = row[2 * kObservationSize + 2] != 0.0;
        }
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed replay buffer: ") + e.what());
    }
}

bool ReplayBuffer::operator==(const ReplayBuffer& other) const {
    return capacity_ == other.capacity_ && size_ == other.size_ && cursor_ == other.cursor_ &&
           storage_ == other.storage_;
}

// ---- Policy ----------------------------------------------------------------

double log1m_tanh_sq(double z) {
    return 2.0 * (std::numbers::ln2 - z - softplus(-2.0 * z));
}

PolicyPass policy_pass(const Mlp& actor, const Matrix& observations, const Vector& noise, const AgentConfig& config) {
    if (actor.output_size() != 2) throw ShapeError("policy: actor must output (mean, log_std)");
    if (noise.size() != observations.cols()) throw ShapeError("policy: one noise draw per observation required");
    PolicyPass pass;
    const Matrix out = actor.forward(observations, pass.tape);
    if (!out.allFinite()) throw NumericError("policy: non-finite actor output");
    const Eigen::Index n = observations.cols();
    pass.mean = out.row(0).transpose();
    pass.log_std.resize(n);
    pass.clamp_mask.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double raw = out(1, i);
        const double clamped = std::clamp(raw, config.log_std_min, config.log_std_max);
        pass.log_std(i) = clamped;
        pass.clamp_mask(i) = (raw == clamped) ? 1.0 : 0.0;
    }
    pass.noise = noise;
    pass.pre_tanh = pass.mean.array() + pass.log_std.array().exp() * noise.array();
    pass.unit_action = pass.pre_tanh.array().tanh();
    pass.unit_log_prob.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        pass.unit_log_prob(i) =
            -0.5 * noise(i) * noise(i) - pass.log_std(i) - kHalfLog2Pi - log1m_tanh_sq(pass.pre_tanh(i));
    }
    return pass;
}

namespace {

Matrix obs_column(const Observation& obs) {
    Matrix m(kObservationSize, 1);
    for (std::size_t k = 0; k < kObservationSize; ++k) m(static_cast<Eigen::Index>(k), 0) = obs[k];
    return m;
}

}  // namespace

PolicySample sample_action_with_noise(const Mlp& actor, const Observation& obs, double noise,
                                      const AgentConfig& config) {
    const auto scale = ActionScale::from_bounds(config.action_lo, config.action_hi);
    const PolicyPass pass = policy_pass(actor, obs_column(obs), Vector::Constant(1, noise), config);
    return {scale.to_action(pass.unit_action(0)), pass.unit_log_prob(0) - std::log(scale.half_width)};
}

PolicySample sample_action(const Mlp& actor, const Observation& obs, CounterRng& rng, const AgentConfig& config) {
    return sample_action_with_noise(actor, obs, rng.normal(), config);
}

double deterministic_action(const Mlp& actor, const Observation& obs, const AgentConfig& config) {
    const Matrix out = actor.forward(obs_column(obs));
    if (!out.allFinite()) throw NumericError("policy: non-finite actor output");
    const auto scale = ActionScale::from_bounds(config.action_lo, config.action_hi);
    return scale.to_action(std::tanh(out(0, 0)));
}

Matrix critic_input(const Matrix& observations, const Vector& unit_actions) {
    Matrix x(observations.rows() + 1, observations.cols());
    x.topRows(observations.rows()) = observations;
    x.row(observations.rows()) = unit_actions.transpose();
    return x;
}

// ---- Losses ----------------------------------------------------------------

Vector critic_targets(const Batch& batch, const Networks& nets, double alpha, const Vector& next_noise,
                      const AgentConfig& config) {
    const PolicyPass next = policy_pass(nets.actor, batch.next_observations, next_noise, config);
    const Matrix x = critic_input(batch.next_observations, next.unit_action);
    const Matrix q1 = nets.target1.forward(x);
    const Matrix q2 = nets.target2.forward(x);
    Vector y(batch.size());
    for (Eigen::Index i = 0; i < batch.size(); ++i) {
        const double soft_value = std::min(q1(0, i), q2(0, i)) - alpha * next.unit_log_prob(i);
        y(i) = batch.rewards(i) + config.gamma * (1.0 - batch.dones(i)) * soft_value;
    }
    return y;
}

double critic_loss(const Batch& batch, const Mlp& critic1, const Mlp& critic2, const Vector& targets,
                   const AgentConfig& config, nn::Gradients* grad1, nn::Gradients* grad2) {
    const auto scale = ActionScale::from_bounds(config.action_lo, config.action_hi);
    const Vector unit = batch.actions.unaryExpr([&](double a) { return scale.to_unit(a); });
    const Matrix x = critic_input(batch.observations, unit);
    const double n = static_cast<double>(batch.size());
    double loss = 0.0;
    auto one = [&](const Mlp& critic, nn::Gradients* grad) {
        nn::Tape tape;
        const Matrix q = critic.forward(x, tape);
        const Matrix err = q - targets.transpose();
        loss += 0.5 * err.squaredNorm() / n;
        if (grad) critic.backward(tape, err / n, grad);
    };
    one(critic1, grad1);
    one(critic2, grad2);
    return loss;
}

double actor_loss(const Batch& batch, const Mlp& actor, const Mlp& critic1, const Mlp& critic2, double alpha,
                  const Vector& noise, const AgentConfig& config, nn::Gradients* grad) {
    const PolicyPass pass = policy_pass(actor, batch.observations, noise, config);
    const Matrix x = critic_input(batch.observations, pass.unit_action);
    nn::Tape t1, t2;
    const Matrix q1 = critic1.forward(x, t1);
    const Matrix q2 = critic2.forward(x, t2);
    const Eigen::Index n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);

    double loss = 0.0;
    Matrix up1 = Matrix::Zero(1, n);
    Matrix up2 = Matrix::Zero(1, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool first = q1(0, i) <= q2(0, i);
        loss += alpha * pass.unit_log_prob(i) - (first ? q1(0, i) : q2(0, i));
        (first ? up1 : up2)(0, i) = -inv_n;
    }
    loss *= inv_n;
    if (!grad) return loss;

    // d loss / d unit action through whichever critic attained the minimum.
    const Matrix dx1 = critic1.backward(t1, up1, nullptr);
    const Matrix dx2 = critic2.backward(t2, up2, nullptr);
    const Eigen::Index action_row = x.rows() - 1;

    Matrix head_grad(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = pass.unit_action(i);
        const double d_unit = dx1(action_row, i) + dx2(action_row, i);
        // log pi = -eps^2/2 - log_std - c - log(1 - tanh^2 z);  d/dz of the last term is -2 tanh z.
        const double d_z = alpha * inv_n * 2.0 * u + d_unit * (1.0 - u * u);
        const double sigma = std::exp(pass.log_std(i));
        head_grad(0, i) = d_z;
        head_grad(1, i) = pass.clamp_mask(i) * (d_z * sigma * pass.noise(i) - alpha * inv_n);
    }
    actor.backward(pass.tape, head_grad, grad);
    return loss;
}

std::pair<double, double> temperature_loss(double log_alpha, const Vector& unit_log_probs, double target_entropy) {
    const double m = (unit_log_probs.array() + target_entropy).mean();
    return {-log_alpha * m, -m};
}

// ---- Agent -----------------------------------------------------------------

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> s{in};
    s.insert(s.end(), hidden.begin(), hidden.end());
    s.push_back(out);
    return s;
}

}  // namespace

SacAgent::SacAgent(AgentConfig config, std::uint64_t seed) : config_(std::move(config)), rng_(seed) {
    config_.validate();
    CounterRng init(derive_seed(seed, "init"));
    const auto actor_sizes = layer_sizes(static_cast<int>(kObservationSize), config_.hidden, 2);
    const auto critic_sizes = layer_sizes(static_cast<int>(kObservationSize) + 1, config_.hidden, 1);
    nets_.actor = Mlp::create(actor_sizes, init);
    nets_.critic1 = Mlp::create(critic_sizes, init);
    nets_.critic2 = Mlp::create(critic_sizes, init);
    nets_.target1 = nets_.critic1;
    nets_.target2 = nets_.critic2;
    actor_opt_ = nn::Adam(nets_.actor, {config_.actor_lr});
    critic1_opt_ = nn::Adam(nets_.critic1, {config_.critic_lr});
    critic2_opt_ = nn::Adam(nets_.critic2, {config_.critic_lr});
    log_alpha_ = config_.initial_log_alpha;
    alpha_opt_.hyper.learning_rate = config_.alpha_lr;
    rng_ = CounterRng(derive_seed(seed, "agent"));
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

double SacAgent::act(const Observation& obs) {
    return sample_action(nets_.actor, obs, rng_, config_).action;
}

double SacAgent::act_deterministic(const Observation& obs) const {
    return deterministic_action(nets_.actor, obs, config_);
}

double SacAgent::act_uniform() {
    return rng_.uniform(config_.action_lo, config_.action_hi);
}

Vector SacAgent::draw_noise(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng_.normal();
    return v;
}

double SacAgent::temperature_update(const Batch& batch) {
    const PolicyPass pass = policy_pass(nets_.actor, batch.observations, draw_noise(batch.size()), config_);
    const auto [loss, grad] = temperature_loss(log_alpha_, pass.unit_log_prob, config_.target_entropy);
    log_alpha_ = alpha_opt_.step(log_alpha_, grad);
    return loss;
}

double SacAgent::critic_update(const Batch& batch) {
    const Vector y = critic_targets(batch, nets_, alpha(), draw_noise(batch.size()), config_);
    nn::Gradients g1, g2;
    const double loss = critic_loss(batch, nets_.critic1, nets_.critic2, y, config_, &g1, &g2);
    if (!std::isfinite(loss)) throw NumericError("critic_update: non-finite loss");
    critic1_opt_.step(nets_.critic1, g1);
    critic2_opt_.step(nets_.critic2, g2);
    return loss;
}

double SacAgent::actor_update(const Batch& batch) {
    nn::Gradients g;
    const double loss =
        actor_loss(batch, nets_.actor, nets_.critic1, nets_.critic2, alpha(), draw_noise(batch.size()), config_, &g);
    if (!std::isfinite(loss)) throw NumericError("actor_update: non-finite loss");
    actor_opt_.step(nets_.actor, g);
    return loss;
}

UpdateStats SacAgent::update(const ReplayBuffer& buffer) {
    const Batch batch = buffer.sample(config_.batch_size, rng_);
    const Vector noise = draw_noise(batch.size());
    const Vector next_noise = draw_noise(batch.size());

    UpdateStats stats;
    // Temperature first; the rest of this step uses the pre-update value.
    const double alpha_now = alpha();
    {
        const PolicyPass pass = policy_pass(nets_.actor, batch.observations, noise, config_);
        const auto [loss, grad] = temperature_loss(log_alpha_, pass.unit_log_prob, config_.target_entropy);
        log_alpha_ = alpha_opt_.step(log_alpha_, grad);
        stats.entropy = -pass.unit_log_prob.mean();
    }

    const Vector y = critic_targets(batch, nets_, alpha_now, next_noise, config_);
    nn::Gradients g1, g2;
    stats.critic_loss = critic_loss(batch, nets_.critic1, nets_.critic2, y, config_, &g1, &g2);
    if (!std::isfinite(stats.critic_loss)) throw NumericError("SAC update: non-finite critic loss");
    critic1_opt_.step(nets_.critic1, g1);
    critic2_opt_.step(nets_.critic2, g2);

    nn::Gradients ga;
    stats.actor_loss = actor_loss(batch, nets_.actor, nets_.critic1, nets_.critic2, alpha_now, noise, config_, &ga);
    if (!std::isfinite(stats.actor_loss)) throw NumericError("SAC update: non-finite actor loss");
    actor_opt_.step(nets_.actor, ga);

    nn::soft_update(nets_.target1, nets_.critic1, config_.polyak);
    nn::soft_update(nets_.target2, nets_.critic2, config_.polyak);
    stats.alpha = alpha();
    ++updates_;
    return stats;
}

nlohmann::json to_json(const AgentConfig& c) {
    return {{"gamma", c.gamma},
            {"replay_capacity", c.replay_capacity},
            {"batch_size", c.batch_size},
            {"actor_lr", c.actor_lr},
            {"critic_lr", c.critic_lr},
            {"alpha_lr", c.alpha_lr},
            {"polyak", c.polyak},
            {"target_entropy", c.target_entropy},
            {"warmup_steps", c.warmup_steps},
            {"updates_per_step", c.updates_per_step},
            {"hidden", c.hidden},
            {"initial_log_alpha", c.initial_log_alpha},
            {"log_std_min", c.log_std_min},
            {"log_std_max", c.log_std_max},
            {"action_lo", c.action_lo},
            {"action_hi", c.action_hi}};
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig c;
    c.gamma = j.at("gamma").get<double>();
    c.replay_capacity = j.at("replay_capacity").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.actor_lr = j.at("actor_lr").get<double>();
    c.critic_lr = j.at("critic_lr").get<double>();
    c.alpha_lr = j.at("alpha_lr").get<double>();
    c.polyak = j.at("polyak").get<double>();
    c.target_entropy = j.at("target_entropy").get<double>();
    c.warmup_steps = j.at("warmup_steps").get<std::size_t>();
    c.updates_per_step = j.at("updates_per_step").get<int>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.initial_log_alpha = j.at("initial_log_alpha").get<double>();
    c.log_std_min = j.at("log_std_min").get<double>();
    c.log_std_max = j.at("log_std_max").get<double>();
    c.action_lo = j.at("action_lo").get<double>();
    c.action_hi = j.at("action_hi").get<double>();
    return c;
}

nlohmann::json SacAgent::to_json() const {
    return {{"config", sac::to_json(config_)},
            {"actor", nn::to_json(nets_.actor)},
            {"critic1", nn::to_json(nets_.critic1)},
            {"critic2", nn::to_json(nets_.critic2)},
            {"target1", nn::to_json(nets_.target1)},
            {"target2", nn::to_json(nets_.target2)},
            {"actor_opt", actor_opt_.to_json()},
            {"critic1_opt", critic1_opt_.to_json()},
            {"critic2_opt", critic2_opt_.to_json()},
            {"log_alpha", log_alpha_},
            {"alpha_opt",
             {{"steps", alpha_opt_.steps},
              {"first", alpha_opt_.first},
              {"second", alpha_opt_.second},
              {"learning_rate", alpha_opt_.hyper.learning_rate}}},
            {"rng", {{"key", rng_.state().key}, {"counter", rng_.state().counter}}},
            {"updates", updates_}};
}

SacAgent SacAgent::from_json(const nlohmann::json& j) {
    try {
        SacAgent a;
        a.config_ = agent_config_from_json(j.at("config"));
        a.config_.validate();
        a.nets_.actor = nn::mlp_from_json(j.at("actor"));
        a.nets_.critic1 = nn::mlp_from_json(j.at("critic1"));
        a.nets_.critic2 = nn::mlp_from_json(j.at("critic2"));
        a.nets_.target1 = nn::mlp_from_json(j.at("target1"));
        a.nets_.target2 = nn::mlp_from_json(j.at("target2"));
        a.actor_opt_ = nn::Adam::from_json(j.at("actor_opt"));
        a.critic1_opt_ = nn::Adam::from_json(j.at("critic1_opt"));
        a.critic2_opt_ = nn::Adam::from_json(j.at("critic2_opt"));
        a.log_alpha_ = j.at("log_alpha").get<double>();
        const auto& ao = j.at("alpha_opt");
        a.alpha_opt_.steps = ao.at("steps").get<long>();
        a.alpha_opt_.first = ao.at("first").get<double>();
        a.alpha_opt_.second = ao.at("second").get<double>();
        a.alpha_opt_.hyper.learning_rate = ao.at("learning_rate").get<double>();
        a.rng_.set_state({j.at("rng").at("key").get<std::uint64_t>(), j.at("rng").at("counter").get<std::uint64_t>()});
        a.updates_ = j.at("updates").get<long>();
        if (a.nets_.actor.input_size() != static_cast<Eigen::Index>(kObservationSize) ||
            a.nets_.actor.output_size() != 2) {
            throw FormatError("actor network has the wrong input/output size");
        }
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed agent document: ") + e.what());
    }
}

bool SacAgent::operator==(const SacAgent& o) const {
    return config_ == o.config_ && nets_.actor == o.nets_.actor && nets_.critic1 == o.nets_.critic1 &&
           nets_.critic2 == o.nets_.critic2 && nets_.target1 == o.nets_.target1 &&
           nets_.target2 == o.nets_.target2 && actor_opt_ == o.actor_opt_ && critic1_opt_ == o.critic1_opt_ &&
           critic2_opt_ == o.critic2_opt_ && log_alpha_ == o.log_alpha_ && alpha_opt_ == o.alpha_opt_ &&
           rng_.state() == o.rng_.state() && updates_ == o.updates_;
}

}  // namespace gasrl::sac
