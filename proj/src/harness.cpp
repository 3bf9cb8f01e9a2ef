#include "gasrl/harness.hpp"

#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

namespace gasrl {

using nlohmann::json;

// ---- RunSpec -----------------------------------------------------------------

void RunSpec::sync_agent() {
    agent.gamma = market.gamma;
    agent.action_lo = market.log_lo();
    agent.action_hi = market.log_hi();
}

void RunSpec::validate() const {
    market.validate();
    reward.validate();
    seasonal.validate();
    agent.validate();
    if (training_steps <= 0) throw ConfigError("run.training_steps: must be positive");
    if (checkpoint_interval <= 0) throw ConfigError("run.checkpoint_interval: must be positive");
    if (eval_episodes < 1) throw ConfigError("run.eval_episodes: must be at least 1");
    if (test_episodes < 1) throw ConfigError("run.test_episodes: must be at least 1");
    if (workers < 0) throw ConfigError("run.workers: must be >= 0");
    if (agent.gamma != market.gamma) throw ConfigError("agent.gamma: must equal market.gamma");
    if (agent.action_lo != market.log_lo() || agent.action_hi != market.log_hi()) {
        throw ConfigError("agent.action_lo/action_hi: must equal [ln L, ln U] of the market");
    }
}

json to_json(const MarketParams& p) {
    return {{"horizon", p.horizon},
            {"eta_d", p.eta_d},
            {"lambda_d", p.lambda_d},
            {"rho_d", p.rho_d},
            {"sigma_d", p.sigma_d},
            {"eta_s", p.eta_s},
            {"lambda_s", p.lambda_s},
            {"rho_s", p.rho_s},
            {"sigma_s", p.sigma_s},
            {"i_max", p.i_max},
            {"tau", p.tau},
            {"r", p.r},
            {"action_lo", p.action_lo},
            {"action_hi", p.action_hi},
            {"gamma", p.gamma},
            {"initial_inventory_fraction", p.initial_inventory_fraction},
            {"initial_bank", p.initial_bank},
            {"initial_log_price", p.initial_log_price}};
}

MarketParams market_params_from_json(const json& j) {
    MarketParams p;
    p.horizon = j.at("horizon").get<int>();
    p.eta_d = j.at("eta_d").get<double>();
    p.lambda_d = j.at("lambda_d").get<double>();
    p.rho_d = j.at("rho_d").get<double>();
    p.sigma_d = j.at("sigma_d").get<double>();
    p.eta_s = j.at("eta_s").get<double>();
    p.lambda_s = j.at("lambda_s").get<double>();
    p.rho_s = j.at("rho_s").get<double>();
    p.sigma_s = j.at("sigma_s").get<double>();
    p.i_max = j.at("i_max").get<double>();
    p.tau = j.at("tau").get<double>();
    p.r = j.at("r").get<double>();
    p.action_lo = j.at("action_lo").get<double>();
    p.action_hi = j.at("action_hi").get<double>();
    p.gamma = j.at("gamma").get<double>();
    p.initial_inventory_fraction = j.at("initial_inventory_fraction").get<double>();
    p.initial_bank = j.at("initial_bank").get<double>();
    p.initial_log_price = j.at("initial_log_price").get<double>();
    return p;
}

json to_json(const RewardWeights& w) {
    return {{"theta_v", w.theta_v},
            {"theta_m", w.theta_m},
            {"theta_n", w.theta_n},
            {"refill_fraction", w.refill_fraction},
            {"refill_month", w.refill_month}};
}

RewardWeights reward_weights_from_json(const json& j) {
    RewardWeights w;
    w.theta_v = j.at("theta_v").get<double>();
    w.theta_m = j.at("theta_m").get<double>();
    w.theta_n = j.at("theta_n").get<double>();
    w.refill_fraction = j.at("refill_fraction").get<double>();
    w.refill_month = j.at("refill_month").get<int>();
    return w;
}

json to_json(const SeasonalCoefficients& c) {
    json arr = json::array();
    for (const auto& t : c.terms) arr.push_back({{"harmonic", t.harmonic}, {"a", t.a}, {"b", t.b}});
    return arr;
}

SeasonalCoefficients seasonal_from_json(const json& j) {
    SeasonalCoefficients c;
    for (const auto& item : j) {
        c.terms.push_back({item.at("harmonic").get<int>(), item.at("a").get<double>(), item.at("b").get<double>()});
    }
    return c;
}

// ---- Checkpoints -------------------------------------------------------------

namespace {

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

json state_to_json(const MarketState& s) {
    return {{"t", s.t},         {"p_d", s.p_d},
            {"p_s", s.p_s},     {"u_d", s.u_d},
            {"u_s", s.u_s},     {"inventory", s.inventory},
            {"bank", s.bank},   {"last_log_price", s.last_log_price},
            {"rng_key", s.rng.key}, {"rng_counter", s.rng.counter}};
}

MarketState state_from_json(const json& j) {
    MarketState s;
    s.t = j.at("t").get<int>();
    s.p_d = j.at("p_d").get<double>();
    s.p_s = j.at("p_s").get<double>();
    s.u_d = j.at("u_d").get<double>();
    s.u_s = j.at("u_s").get<double>();
    s.inventory = j.at("inventory").get<double>();
    s.bank = j.at("bank").get<double>();
    s.last_log_price = j.at("last_log_price").get<double>();
    s.rng.key = j.at("rng_key").get<std::uint64_t>();
    s.rng.counter = j.at("rng_counter").get<std::uint64_t>();
    return s;
}

Stat stat_from_json(const json& j) {
    Stat s;
    s.mean = j.at("mean").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("mean").get<double>();
    s.standard_error =
        j.at("standard_error").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("standard_error").get<double>();
    s.count = j.at("count").get<std::size_t>();
    return s;
}

MetricsReport report_from_json(const json& j) {
    MetricsReport r;
    r.reward = stat_from_json(j.at("reward"));
    r.bank = stat_from_json(j.at("bank"));
    r.volatility = stat_from_json(j.at("volatility"));
    r.market_success = stat_from_json(j.at("market_success"));
    r.november_inventory = stat_from_json(j.at("november_inventory"));
    r.price_level = stat_from_json(j.at("price_level"));
    r.episodes = j.at("episodes").get<std::size_t>();
    return r;
}

}  // namespace

std::string Checkpoint::config_hash() const {
    const json cfg = {{"market", to_json(market)},
                      {"reward", to_json(reward)},
                      {"seasonal", to_json(seasonal)},
                      {"agent", sac::to_json(agent.config())}};
    return fnv1a_hex(cfg.dump());
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    json doc = {{"format", kCheckpointFormat},
                {"version", kCheckpointVersion},
                {"step", ckpt.step},
                {"tag", ckpt.tag},
                {"seed", ckpt.seed},
                {"config_hash", ckpt.config_hash()},
                {"market", to_json(ckpt.market)},
                {"reward", to_json(ckpt.reward)},
                {"seasonal", to_json(ckpt.seasonal)},
                {"agent", ckpt.agent.to_json()}};
    if (ckpt.replay) doc["replay"] = ckpt.replay->to_json();
    if (ckpt.trainer) {
        doc["trainer"] = {{"step", ckpt.trainer->step},
                          {"episode", ckpt.trainer->episode},
                          {"env", state_to_json(ckpt.trainer->env)},
                          {"log", ckpt.trainer->log}};
    }
    return json::to_cbor(doc);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source) {
    json doc;
    try {
        doc = json::from_cbor(bytes);
    } catch (const json::exception& e) {
        throw FormatError(source + ": not a checkpoint document (" + e.what() + ")");
    }
    try {
        if (!doc.is_object() || doc.value("format", std::string{}) != kCheckpointFormat) {
            throw FormatError(source + ": not a " + std::string(kCheckpointFormat) + " document");
        }
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion) {
            throw FormatError(source + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
        }
        Checkpoint ckpt;
        ckpt.step = doc.at("step").get<long>();
        ckpt.tag = doc.at("tag").get<std::string>();
        ckpt.seed = doc.at("seed").get<std::uint64_t>();
        ckpt.market = market_params_from_json(doc.at("market"));
        ckpt.reward = reward_weights_from_json(doc.at("reward"));
        ckpt.seasonal = seasonal_from_json(doc.at("seasonal"));
        ckpt.agent = sac::SacAgent::from_json(doc.at("agent"));
        if (doc.contains("replay")) ckpt.replay = sac::ReplayBuffer::from_json(doc.at("replay"));
        if (doc.contains("trainer")) {
            const auto& tr = doc.at("trainer");
            TrainerState ts;
            ts.step = tr.at("step").get<long>();
            ts.episode = tr.at("episode").get<long>();
            ts.env = state_from_json(tr.at("env"));
            ts.log = tr.at("log").get<std::vector<json>>();
            ckpt.trainer = std::move(ts);
        }
        if (doc.at("config_hash").get<std::string>() != ckpt.config_hash()) {
            throw FormatError(source + ": config hash mismatch (corrupted checkpoint)");
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw FormatError(source + ": malformed checkpoint (" + e.what() + ")");
    } catch (const ConfigError& e) {
        throw FormatError(source + ": invalid configuration inside checkpoint (" + e.what() + ")");
    }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(ckpt);
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    return decode_checkpoint(std::vector<std::uint8_t>(raw.begin(), raw.end()), path.string());
}

// ---- Traces ------------------------------------------------------------------

void EpisodeTrace::append(const StepOutcome& out) {
    t.push_back(out.t);
    month.push_back(out.month);
    price.push_back(out.price);
    log_price.push_back(out.log_price);
    demand.push_back(out.demand);
    supply.push_back(out.supply);
    excess_demand.push_back(out.excess_demand);
    inventory.push_back(out.inventory);
    bank.push_back(out.bank);
    reward.push_back(out.reward);
    reward_parts.push_back(out.reward_parts);
    m.push_back(out.failure ? 1 : 0);
    m_tilde.push_back(out.failure_severity);
    n.push_back(out.threshold_miss ? 1 : 0);
    n_tilde.push_back(out.threshold_gap);
}

analysis::PriceSeries EpisodeTrace::price_series(std::string label) const {
    analysis::PriceSeries s;
    s.months.assign(t.begin(), t.end());
    s.prices = price;
    s.label = std::move(label);
    return s;
}

std::string trace_to_csv(const EpisodeTrace& tr) {
    CsvTable table;
    table.header = {"t",         "month", "price", "log_price", "demand", "supply", "excess_demand",
                    "inventory", "bank",  "reward", "m",        "m_tilde", "n",     "n_tilde"};
    table.rows.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        table.rows.push_back({std::to_string(tr.t[i]), std::to_string(tr.month[i]), format_double(tr.price[i]),
                              format_double(tr.log_price[i]), format_double(tr.demand[i]),
                              format_double(tr.supply[i]), format_double(tr.excess_demand[i]),
                              format_double(tr.inventory[i]), format_double(tr.bank[i]),
                              format_double(tr.reward[i]), std::to_string(tr.m[i]), format_double(tr.m_tilde[i]),
                              std::to_string(tr.n[i]), format_double(tr.n_tilde[i])});
    }
    return to_csv_string(table);
}

void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path) {
    write_file_atomic(path, trace_to_csv(trace));
}

// ---- Metrics -----------------------------------------------------------------

Stat Stat::of(std::span<const double> samples) {
    Stat s;
    s.count = samples.size();
    if (samples.empty()) return s;
    s.mean = analysis::mean(samples);
    s.standard_error = analysis::standard_error(samples);
    return s;
}

json to_json(const Stat& s) {
    return {{"mean", s.mean}, {"standard_error", s.standard_error}, {"count", s.count}};
}

json to_json(const MetricsReport& r) {
    return {{"reward", to_json(r.reward)},
            {"bank", to_json(r.bank)},
            {"volatility", to_json(r.volatility)},
            {"market_success", to_json(r.market_success)},
            {"november_inventory", to_json(r.november_inventory)},
            {"price_level", to_json(r.price_level)},
            {"episodes", r.episodes}};
}

EpisodeMetrics episode_metrics(const EpisodeTrace& trace, const MarketParams& market, const RewardWeights& reward) {
    EpisodeMetrics em;
    if (trace.size() == 0) return em;
    const auto n = static_cast<double>(trace.size());
    double prev = market.initial_log_price;
    double sq = 0.0, failures = 0.0, price = 0.0, refill_sum = 0.0, total = 0.0;
    int refill_count = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double dp = trace.log_price[i] - prev;
        prev = trace.log_price[i];
        sq += dp * dp;
        failures += trace.m[i];
        price += trace.price[i];
        total += trace.reward[i];
        if (trace.month[i] == reward.refill_month) {
            refill_sum += trace.inventory[i];
            ++refill_count;
        }
    }
    em.reward = total;
    em.bank = trace.bank.back();
    em.volatility = sq / n;
    em.market_success = 1.0 - failures / n;
    em.november_inventory =
        refill_count > 0 ? refill_sum / refill_count : std::numeric_limits<double>::quiet_NaN();
    em.price_level = price / n;
    return em;
}

MetricsReport aggregate(std::span<const EpisodeMetrics> episodes) {
    auto column = [&](double EpisodeMetrics::*field) {
        std::vector<double> v;
        v.reserve(episodes.size());
        for (const auto& e : episodes) v.push_back(e.*field);
        return Stat::of(v);
    };
    MetricsReport r;
    r.reward = column(&EpisodeMetrics::reward);
    r.bank = column(&EpisodeMetrics::bank);
    r.volatility = column(&EpisodeMetrics::volatility);
    r.market_success = column(&EpisodeMetrics::market_success);
    r.november_inventory = column(&EpisodeMetrics::november_inventory);
    r.price_level = column(&EpisodeMetrics::price_level);
    r.episodes = episodes.size();
    return r;
}

// ---- Evaluation --------------------------------------------------------------

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    std::size_t threads = workers > 0 ? static_cast<std::size_t>(workers)
                                      : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    std::vector<std::exception_ptr> errors(n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t base, int n) {
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < n; ++i) seeds.push_back(derive_seed(base, "eval", static_cast<std::uint64_t>(i)));
    return seeds;
}

Evaluation evaluate_policy(const Policy& policy, const MarketParams& market, const RewardWeights& reward,
                           const SeasonalCoefficients& seasonal, std::span<const std::uint64_t> seeds, int workers,
                           bool keep_traces) {
    std::vector<EpisodeTrace> traces(seeds.size());
    std::vector<EpisodeMetrics> metrics(seeds.size());
    const MarketEnv prototype(market, reward, seasonal);
    parallel_for(seeds.size(), workers, [&](std::size_t i) {
        MarketEnv env = prototype;
        Observation obs = env.reset(seeds[i]);
        EpisodeTrace trace;
        while (!env.done()) {
            const StepOutcome out = env.step(policy(obs));
            trace.append(out);
            obs = out.observation;
        }
        metrics[i] = episode_metrics(trace, market, reward);
        if (keep_traces) traces[i] = std::move(trace);
    });
    Evaluation ev;
    ev.report = aggregate(metrics);
    ev.episodes = std::move(metrics);
    if (keep_traces) ev.traces = std::move(traces);
    return ev;
}

Evaluation evaluate(const Checkpoint& ckpt, int n_episodes, std::uint64_t seed_base, int workers,
                    std::optional<MarketParams> market_override) {
    if (n_episodes < 1) throw ConfigError("evaluate: n_episodes must be at least 1");
    const auto seeds = evaluation_seeds(seed_base, n_episodes);
    const sac::Mlp& actor = ckpt.agent.networks().actor;
    const sac::AgentConfig& cfg = ckpt.agent.config();
    const Policy policy = [&actor, &cfg](const Observation& obs) { return sac::deterministic_action(actor, obs, cfg); };
    return evaluate_policy(policy, market_override.value_or(ckpt.market), ckpt.reward, ckpt.seasonal, seeds, workers);
}

// ---- Training ----------------------------------------------------------------

namespace {

std::string checkpoint_name(long step) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "step_%09ld.ckpt", step);
    return buf;
}

void write_training_log(const std::filesystem::path& path, const std::vector<json>& rows) {
    CsvTable table;
    table.header = {"step",           "eval_reward", "eval_reward_se",     "bank",
                    "volatility",     "market_success", "november_inventory", "price_level"};
    for (const auto& row : rows) {
        const auto& r = row.at("evaluation");
        auto mean_of = [&](const char* key) {
            const auto& v = r.at(key).at("mean");
            return v.is_null() ? std::string("nan") : format_double(v.get<double>());
        };
        table.rows.push_back({std::to_string(row.at("step").get<long>()), mean_of("reward"),
                              format_double(r.at("reward").at("standard_error").get<double>()), mean_of("bank"),
                              mean_of("volatility"), mean_of("market_success"), mean_of("november_inventory"),
                              mean_of("price_level")});
    }
    write_csv_atomic(table, path);
}

}  // namespace

TrainResult train(const RunSpec& spec, const TrainOptions& options) {
    spec.validate();
    TrainResult result;

    sac::SacAgent agent;
    sac::ReplayBuffer buffer(spec.agent.replay_capacity);
    MarketEnv env(spec.market, spec.reward, spec.seasonal);
    long step = 0;
    long episode = 0;
    std::vector<json> log_rows;

    if (options.resume) {
        const Checkpoint& r = *options.resume;
        if (!r.replay || !r.trainer) throw FormatError("train: checkpoint is not resumable (no replay/trainer state)");
        agent = r.agent;
        buffer = *r.replay;
        step = r.trainer->step;
        episode = r.trainer->episode;
        env.set_state(r.trainer->env);
        log_rows = r.trainer->log;
        // Earlier snapshots are reloaded so that saved stays aligned with checkpoints.
        if (!log_rows.empty() && options.run_dir.empty())
            throw ProtocolError("train: resuming a run with checkpoints requires its run directory");
        for (const auto& row : log_rows) {
            const auto path = options.run_dir / row.at("path").get<std::string>();
            result.checkpoints.push_back({row.at("step").get<long>(), path, report_from_json(row.at("evaluation"))});
            result.saved.push_back(load_checkpoint(path));
        }
    } else {
        agent = sac::SacAgent(spec.agent, derive_seed(spec.seed, "agent"));
        env.reset(derive_seed(spec.seed, "episode", 0));
    }
    Observation obs = env.observe();

    const auto eval_seeds = evaluation_seeds(derive_seed(spec.seed, "checkpoint-eval"), spec.eval_episodes);
    const auto& dir = options.run_dir;

    auto snapshot = [&](bool resumable) {
        Checkpoint c;
        c.step = step;
        c.tag = spec.tag;
        c.seed = spec.seed;
        c.market = spec.market;
        c.reward = spec.reward;
        c.seasonal = spec.seasonal;
        c.agent = agent;
        if (resumable) {
            c.replay = buffer;
            c.trainer = TrainerState{step, episode, env.state(), log_rows};
        }
        return c;
    };

    auto checkpoint = [&] {
        Checkpoint snap = snapshot(false);
        const sac::Mlp& actor = snap.agent.networks().actor;
        const sac::AgentConfig& cfg = snap.agent.config();
        const Policy policy = [&actor, &cfg](const Observation& o) { return sac::deterministic_action(actor, o, cfg); };
        const Evaluation ev =
            evaluate_policy(policy, spec.market, spec.reward, spec.seasonal, eval_seeds, spec.workers, false);
        CheckpointRecord record{step, {}, ev.report};
        std::string rel;  // relative to the run directory so that relocated runs stay byte-identical
        if (!dir.empty()) {
            rel = (std::filesystem::path("checkpoints") / checkpoint_name(step)).generic_string();
            record.path = dir / rel;
            save_checkpoint(snap, record.path);
        }
        log_rows.push_back({{"step", step}, {"path", rel}, {"evaluation", to_json(ev.report)}});
        if (!dir.empty()) {
            write_training_log(dir / "training_log.csv", log_rows);
            if (options.write_resume_state) save_checkpoint(snapshot(true), dir / "resume.ckpt");
        }
        result.checkpoints.push_back(record);
        result.saved.push_back(std::move(snap));
        if (options.on_checkpoint) options.on_checkpoint(record);
    };

    const auto warmup = static_cast<long>(spec.agent.warmup_steps);
    while (step < spec.training_steps) {
        if (options.stop_after >= 0 && step >= options.stop_after) break;
        const double action = step < warmup ? agent.act_uniform() : agent.act(obs);
        const StepOutcome out = env.step(action);
        buffer.push({obs, out.log_price, out.reward, out.observation, out.done});
        obs = out.observation;
        ++step;
        if (out.done) {
            ++episode;
            obs = env.reset(derive_seed(spec.seed, "episode", static_cast<std::uint64_t>(episode)));
        }
        if (step >= warmup && buffer.size() >= spec.agent.batch_size) {
            for (int k = 0; k < spec.agent.updates_per_step; ++k) {
                try {
                    agent.update(buffer);
                } catch (const NumericError& e) {
                    if (!dir.empty()) {
                        const json dump = {{"error", e.what()},
                                           {"step", step},
                                           {"episode", episode},
                                           {"env", state_to_json(env.state())},
                                           {"log_alpha", agent.log_alpha()},
                                           {"updates", agent.update_count()}};
                        write_file_atomic(dir / "diagnostic.json", dump.dump(2));
                    }
                    throw NumericError(std::string(e.what()) + " at training step " + std::to_string(step));
                }
            }
        }
        if (step % spec.checkpoint_interval == 0 || step == spec.training_steps) checkpoint();
    }

    result.steps = step;
    result.episodes_started = episode + 1;
    result.final_state = snapshot(true);
    if (!dir.empty() && options.write_resume_state) save_checkpoint(result.final_state, dir / "resume.ckpt");
    if (!result.checkpoints.empty()) result.best = select_best(result.checkpoints);
    return result;
}

std::size_t select_best(std::span<const CheckpointRecord> checkpoints) {
    if (checkpoints.empty()) throw ProtocolError("select_best: no checkpoints");
    std::size_t best = 0;
    for (std::size_t i = 1; i < checkpoints.size(); ++i) {
        const double r = checkpoints[i].evaluation.reward.mean;
        const double b = checkpoints[best].evaluation.reward.mean;
        if (r > b || (r == b && checkpoints[i].step > checkpoints[best].step)) best = i;
    }
    return best;
}

SeedProtocolResult summarize_seed_means(std::span<const std::uint64_t> seeds, std::span<const double> means) {
    if (means.size() < 2) throw ConfigError("seed_protocol: need at least two training seeds");
    SeedProtocolResult out;
    out.seeds.assign(seeds.begin(), seeds.end());
    out.per_seed_mean_reward.assign(means.begin(), means.end());
    out.mean = analysis::mean(means);
    out.standard_error = analysis::standard_error(means);
    return out;
}

SeedProtocolResult seed_protocol(const RunSpec& spec, std::span<const std::uint64_t> seeds, int n_test_runs) {
    if (seeds.size() < 2) throw ConfigError("seed_protocol: need at least two training seeds");
    if (n_test_runs < 1) throw ConfigError("seed_protocol: n_test_runs must be at least 1");
    std::vector<double> means(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        RunSpec s = spec;
        s.seed = seeds[i];
        const TrainResult run = train(s);
        const Checkpoint& best = run.saved.at(run.best);
        const Evaluation ev = evaluate(best, n_test_runs, derive_seed(seeds[i], "test"), spec.workers);
        means[i] = ev.report.reward.mean;
    }
    return summarize_seed_means(seeds, means);
}

// ---- Sweep -------------------------------------------------------------------

SweepStats sweep_stats(std::span<const EpisodeMetrics> episodes) {
    auto ci = [&](double EpisodeMetrics::*field) {
        std::vector<double> v;
        for (const auto& e : episodes) v.push_back(e.*field);
        return analysis::mean_ci(v);
    };
    return {ci(&EpisodeMetrics::market_success), ci(&EpisodeMetrics::bank), ci(&EpisodeMetrics::volatility),
            ci(&EpisodeMetrics::price_level)};
}

std::vector<SweepPoint> sweep_sigma_s(const Checkpoint& baseline, const Checkpoint& regulated,
                                      std::span<const double> sigma_grid, int n_episodes, std::uint64_t seed_base,
                                      int workers) {
    if (n_episodes < 2) throw ConfigError("sweep: at least two episodes per grid point are required");
    std::vector<SweepPoint> points;
    for (double sigma : sigma_grid) {
        SweepPoint p;
        p.sigma_s = sigma;
        MarketParams mb = baseline.market;
        mb.sigma_s = sigma;
        MarketParams mr = regulated.market;
        mr.sigma_s = sigma;
        p.baseline = sweep_stats(evaluate(baseline, n_episodes, seed_base, workers, mb).episodes);
        p.regulated = sweep_stats(evaluate(regulated, n_episodes, seed_base, workers, mr).episodes);
        points.push_back(p);
    }
    return points;
}

json to_json(const analysis::MeanCi& ci) {
    return {{"mean", ci.mean}, {"half_width", ci.half_width}, {"lower", ci.lower()}, {"upper", ci.upper()}};
}

json to_json(const SweepPoint& p) {
    auto side = [](const SweepStats& s) {
        return json{{"market_success", to_json(s.market_success)},
                    {"bank", to_json(s.bank)},
                    {"volatility", to_json(s.volatility)},
                    {"price_level", to_json(s.price_level)}};
    };
    return {{"sigma_s", p.sigma_s}, {"baseline", side(p.baseline)}, {"regulated", side(p.regulated)}};
}

}  // namespace gasrl
