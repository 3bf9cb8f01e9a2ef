#pragma once

#include "gasrl/analysis.hpp"
#include "gasrl/market_env.hpp"
#include "gasrl/sac.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gasrl {

/// Everything needed to reproduce one training run.
struct RunSpec {
    MarketParams market;
    RewardWeights reward;
    SeasonalCoefficients seasonal = default_seasonal_coefficients();
    sac::AgentConfig agent;
    long training_steps = 100'000;
    long checkpoint_interval = 4'000;
    std::uint64_t seed = 0;
    std::string tag = "default";
    int eval_episodes = 50;   // per checkpoint, for model selection and the training log
    int test_episodes = 50;   // final evaluation of the selected checkpoint
    int workers = 0;          // evaluation threads; 0 = hardware concurrency

    /// Copies the market's gamma and log-price bounds into the agent config.
    void sync_agent();
    void validate() const;
};

nlohmann::json to_json(const MarketParams& p);
MarketParams market_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RewardWeights& w);
RewardWeights reward_weights_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SeasonalCoefficients& c);
SeasonalCoefficients seasonal_from_json(const nlohmann::json& j);

// ---- Checkpoints -----------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "gasrl-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// Trainer position inside the step budget; present only in resumable checkpoints.
struct TrainerState {
    long step = 0;            // environment steps consumed
    long episode = 0;         // index of the running episode
    MarketState env;          // state of the running episode
    std::vector<nlohmann::json> log;  // training-log rows so far
};

struct Checkpoint {
    long step = 0;
    std::string tag;
    std::uint64_t seed = 0;
    MarketParams market;
    RewardWeights reward;
    SeasonalCoefficients seasonal;
    sac::SacAgent agent;
    std::optional<sac::ReplayBuffer> replay;
    std::optional<TrainerState> trainer;

    std::string config_hash() const;
};

/// CBOR document tagged with format name and version. Parameters are raw doubles (bit-exact).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws FormatError on a foreign format or an unsupported version.
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");

// ---- Traces and metrics ----------------------------------------------------

/// Columnar record of one simulated episode.
struct EpisodeTrace {
    std::vector<int> t;
    std::vector<int> month;
    std::vector<double> price;
    std::vector<double> log_price;
    std::vector<double> demand;
    std::vector<double> supply;
    std::vector<double> excess_demand;
    std::vector<double> inventory;
    std::vector<double> bank;
    std::vector<double> reward;
    std::vector<RewardParts> reward_parts;
    std::vector<int> m;
    std::vector<double> m_tilde;
    std::vector<int> n;
    std::vector<double> n_tilde;

    void append(const StepOutcome& out);
    std::size_t size() const { return t.size(); }
    analysis::PriceSeries price_series(std::string label = {}) const;
};

/// Columns: t,month,price,log_price,demand,supply,excess_demand,inventory,bank,reward,m,m_tilde,n,n_tilde
std::string trace_to_csv(const EpisodeTrace& trace);
void write_trace_csv(const EpisodeTrace& trace, const std::filesystem::path& path);

struct Stat {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t count = 0;

    static Stat of(std::span<const double> samples);
};

/// Per-episode metrics aggregated over evaluation episodes.
struct MetricsReport {
    Stat reward;              // undiscounted episode reward
    Stat bank;                // terminal bank account g_T
    Stat volatility;          // mean squared log-price change per step
    Stat market_success;      // 1 - mean m_t
    Stat november_inventory;  // closing inventory in the refill month
    Stat price_level;         // mean price P_t
    std::size_t episodes = 0;
};

nlohmann::json to_json(const Stat& s);
nlohmann::json to_json(const MetricsReport& r);

/// Metrics of a single episode; the unit that MetricsReport aggregates.
struct EpisodeMetrics {
    double reward = 0.0;
    double bank = 0.0;
    double volatility = 0.0;
    double market_success = 0.0;
    double november_inventory = 0.0;
    double price_level = 0.0;
};

EpisodeMetrics episode_metrics(const EpisodeTrace& trace, const MarketParams& market, const RewardWeights& reward);
MetricsReport aggregate(std::span<const EpisodeMetrics> episodes);

/// Any policy mapping an observation to a log-price action; must be safe to call concurrently.
using Policy = std::function<double(const Observation&)>;

struct Evaluation {
    MetricsReport report;
    std::vector<EpisodeTrace> traces;
    std::vector<EpisodeMetrics> episodes;
};

std::vector<std::uint64_t> evaluation_seeds(std::uint64_t base, int n);

/// Runs one full episode per seed with `policy` on a worker pool; results are in seed order.
Evaluation evaluate_policy(const Policy& policy, const MarketParams& market, const RewardWeights& reward,
                           const SeasonalCoefficients& seasonal, std::span<const std::uint64_t> seeds, int workers,
                           bool keep_traces = true);

/// Deterministic (squashed-mean) policy of a checkpoint on its own environment settings.
Evaluation evaluate(const Checkpoint& ckpt, int n_episodes, std::uint64_t seed_base, int workers = 0,
                    std::optional<MarketParams> market_override = std::nullopt);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads (0 = hardware concurrency).
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ---- Training ----------------------------------------------------------------

struct CheckpointRecord {
    long step = 0;
    std::filesystem::path path;  // empty for in-memory runs
    MetricsReport evaluation;
};

struct TrainOptions {
    std::filesystem::path run_dir;        // empty: keep everything in memory
    std::optional<Checkpoint> resume;     // continue from a resumable checkpoint
    long stop_after = -1;                 // stop (with a resumable checkpoint) once this many steps are done
    bool write_resume_state = true;       // keep run_dir/resume.ckpt current at each checkpoint
    std::function<void(const CheckpointRecord&)> on_checkpoint;
};

struct TrainResult {
    std::vector<CheckpointRecord> checkpoints;
    std::size_t best = 0;
    long steps = 0;
    long episodes_started = 0;
    Checkpoint final_state;                 // resumable state at the end of the run
    std::vector<Checkpoint> saved;          // policy snapshots, one per CheckpointRecord
};

/// Chains T-step episodes (reseeded from (seed, episode index)) until the step budget is spent,
/// checkpointing and evaluating every `checkpoint_interval` steps and at the end of the budget.
TrainResult train(const RunSpec& spec, const TrainOptions& options = {});

/// Highest mean evaluation reward; ties go to the later step. Throws ProtocolError on an empty set.
std::size_t select_best(std::span<const CheckpointRecord> checkpoints);

struct SeedProtocolResult {
    std::vector<std::uint64_t> seeds;
    std::vector<double> per_seed_mean_reward;
    double mean = 0.0;
    double standard_error = 0.0;
};

/// Trains one run per seed, scores its selected checkpoint on `n_test_runs` episodes and
/// aggregates the per-seed mean rewards.
SeedProtocolResult seed_protocol(const RunSpec& spec, std::span<const std::uint64_t> seeds, int n_test_runs);
SeedProtocolResult summarize_seed_means(std::span<const std::uint64_t> seeds, std::span<const double> means);

struct SweepStats {
    analysis::MeanCi market_success;
    analysis::MeanCi bank;
    analysis::MeanCi volatility;
    analysis::MeanCi price_level;
};

struct SweepPoint {
    double sigma_s = 0.0;
    SweepStats baseline;
    SweepStats regulated;
};

SweepStats sweep_stats(std::span<const EpisodeMetrics> episodes);

/// Evaluates both frozen policies on environments whose sigma_s is replaced by each grid value.
std::vector<SweepPoint> sweep_sigma_s(const Checkpoint& baseline, const Checkpoint& regulated,
                                      std::span<const double> sigma_grid, int n_episodes, std::uint64_t seed_base,
                                      int workers = 0);

nlohmann::json to_json(const analysis::MeanCi& ci);
nlohmann::json to_json(const SweepPoint& p);

}  // namespace gasrl
