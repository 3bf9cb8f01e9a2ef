#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"
#include "gasrl/harness.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <vector>

using namespace gasrl;
namespace fs = std::filesystem;

namespace {

RunSpec small_spec() {
    RunSpec s;
    s.agent.hidden = {8};
    s.agent.batch_size = 16;
    s.agent.warmup_steps = 100;
    s.agent.replay_capacity = 5000;
    s.training_steps = 4000;
    s.checkpoint_interval = 1000;
    s.eval_episodes = 2;
    s.test_episodes = 2;
    s.workers = 2;
    s.seed = 3;
    s.sync_agent();
    return s;
}

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gasrl_test_" + name);
    fs::remove_all(p);
    return p;
}

CheckpointRecord record(long step, double reward) {
    CheckpointRecord r;
    r.step = step;
    r.evaluation.reward.mean = reward;
    return r;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("training loop arithmetic") {
    const RunSpec spec = small_spec();
    const TrainResult res = train(spec);
    CHECK(res.steps == 4000);
    CHECK(res.episodes_started == 12);  // 11 full episodes of 360 plus a partial one
    REQUIRE(res.checkpoints.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(res.checkpoints[i].step == static_cast<long>(1000 * (i + 1)));
    CHECK(res.final_state.trainer->step == 4000);
    CHECK(res.final_state.replay->size() == 4000);
    CHECK(res.final_state.trainer->env.t == 4000 - 11 * 360);
}

TEST_CASE("budget not divisible by the interval checkpoints at the end") {
    RunSpec spec = small_spec();
    spec.training_steps = 2500;
    const TrainResult res = train(spec);
    REQUIRE(res.checkpoints.size() == 3);
    CHECK(res.checkpoints.back().step == 2500);
    CHECK(res.steps == 2500);
}

TEST_CASE("resumed run is bit-identical to an uninterrupted run") {
    RunSpec spec = small_spec();
    spec.training_steps = 2000;
    const fs::path a = temp_dir("resume_a"), b = temp_dir("resume_b");
    const TrainResult full = train(spec, {a});

    TrainOptions first{b};
    first.stop_after = 1000;
    const TrainResult half = train(spec, first);
    CHECK(half.steps == 1000);
    // Through the file, as the CLI does.
    TrainOptions second{b};
    second.resume = load_checkpoint(b / "resume.ckpt");
    const TrainResult rest = train(spec, second);
    CHECK(rest.steps == 2000);

    CHECK(rest.final_state.agent == full.final_state.agent);
    CHECK(*rest.final_state.replay == *full.final_state.replay);
    CHECK(rest.final_state.trainer->env == full.final_state.trainer->env);
    CHECK(slurp(a / "resume.ckpt") == slurp(b / "resume.ckpt"));
    CHECK(slurp(a / "checkpoints/step_000002000.ckpt") == slurp(b / "checkpoints/step_000002000.ckpt"));
    CHECK(slurp(a / "training_log.csv") == slurp(b / "training_log.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("results do not depend on the number of evaluation workers") {
    RunSpec one = small_spec(), many = small_spec();
    one.training_steps = many.training_steps = 1500;
    one.workers = 1;
    many.workers = 4;
    const TrainResult r1 = train(one), r4 = train(many);
    CHECK(r1.final_state.agent == r4.final_state.agent);
    for (std::size_t i = 0; i < r1.checkpoints.size(); ++i) {
        CHECK(r1.checkpoints[i].evaluation.reward.mean == r4.checkpoints[i].evaluation.reward.mean);
    }
}

TEST_CASE("select_best") {
    std::vector<CheckpointRecord> none;
    CHECK_THROWS_AS(select_best(none), ProtocolError);
    std::vector<CheckpointRecord> single{record(4000, -5)};
    CHECK(select_best(single) == 0);
    std::vector<CheckpointRecord> rising{record(1, -3), record(2, -2), record(3, -1)};
    CHECK(select_best(rising) == 2);
    std::vector<CheckpointRecord> tie{record(10000, 7), record(20000, 7), record(30000, 1)};
    CHECK(select_best(tie) == 1);
}

TEST_CASE("metrics aggregation edge cases") {
    std::vector<EpisodeMetrics> eps(5);
    for (auto& e : eps) {
        e.reward = 3.0;
        e.market_success = 1.0;
    }
    const MetricsReport r = aggregate(eps);
    CHECK(r.reward.mean == 3.0);
    CHECK(r.reward.standard_error == 0.0);
    CHECK(r.market_success.mean == 1.0);
    CHECK(r.episodes == 5);

    // A never-failing trace has success rate 1.
    EpisodeTrace tr;
    MarketEnv env(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    env.reset(1);
    for (int i = 0; i < 24; ++i) {
        StepOutcome out = env.step(0.0);
        out.failure = false;
        out.failure_severity = 0.0;
        tr.append(out);
    }
    const auto em = episode_metrics(tr, MarketParams{}, RewardWeights{});
    CHECK(em.market_success == 1.0);
    CHECK(em.november_inventory == doctest::Approx((tr.inventory[9] + tr.inventory[21]) / 2));
}

TEST_CASE("evaluation uses the requested number of episodes and leaves the agent untouched") {
    RunSpec spec = small_spec();
    spec.training_steps = 1000;
    const TrainResult res = train(spec);
    const Checkpoint& ck = res.saved.back();
    const auto before = encode_checkpoint(ck);
    const Evaluation ev = evaluate(ck, 50, 11, 2);
    CHECK(ev.report.episodes == 50);
    CHECK(ev.report.reward.count == 50);
    CHECK(ev.traces.size() == 50);
    CHECK(ev.traces[0].size() == 360);
    CHECK(encode_checkpoint(ck) == before);

    // sigma_s override equal to the training value is a no-op.
    MarketParams same = ck.market;
    const Evaluation ev2 = evaluate(ck, 50, 11, 2, same);
    CHECK(ev2.report.reward.mean == ev.report.reward.mean);
    const std::vector<double> grid{ck.market.sigma_s};
    const auto sweep = sweep_sigma_s(ck, ck, grid, 50, 11, 2);
    CHECK(sweep[0].baseline.bank.mean == doctest::Approx(ev.report.bank.mean).epsilon(1e-12));
    CHECK(sweep[0].regulated.market_success.mean == ev.report.market_success.mean);
}

TEST_CASE("checkpoint format checks") {
    RunSpec spec = small_spec();
    spec.training_steps = 200;
    spec.checkpoint_interval = 200;
    const TrainResult res = train(spec);
    auto bytes = encode_checkpoint(res.final_state);
    const Checkpoint back = decode_checkpoint(bytes);
    CHECK(back.agent == res.final_state.agent);
    CHECK(*back.replay == *res.final_state.replay);

    auto doc = nlohmann::json::from_cbor(bytes);
    doc["version"] = 99;
    CHECK_THROWS_AS(decode_checkpoint(nlohmann::json::to_cbor(doc)), FormatError);
    doc = nlohmann::json::from_cbor(bytes);
    doc["format"] = "something-else";
    CHECK_THROWS_AS(decode_checkpoint(nlohmann::json::to_cbor(doc)), FormatError);
    doc = nlohmann::json::from_cbor(bytes);
    doc["market"]["tau"] = 0.5;
    CHECK_THROWS_AS(decode_checkpoint(nlohmann::json::to_cbor(doc)), FormatError);
    std::vector<std::uint8_t> junk{1, 2, 3};
    CHECK_THROWS_AS(decode_checkpoint(junk), FormatError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), IoError);
}

TEST_CASE("trace CSV columns") {
    MarketEnv env(MarketParams{}, RewardWeights{}, default_seasonal_coefficients());
    env.reset(2);
    EpisodeTrace tr;
    for (int i = 0; i < 12; ++i) tr.append(env.step(0.1));
    const CsvTable t = parse_csv(trace_to_csv(tr));
    CHECK(t.header == std::vector<std::string>{"t", "month", "price", "log_price", "demand", "supply", "excess_demand",
                                               "inventory", "bank", "reward", "m", "m_tilde", "n", "n_tilde"});
    CHECK(t.rows.size() == 12);
    CHECK(t.number(0, t.column_index("month")) == 2);
    CHECK(t.number(9, t.column_index("month")) == 11);
    // Round-trip of doubles is exact.
    CHECK(t.number(5, t.column_index("bank")) == tr.bank[5]);
}

TEST_CASE("seed protocol aggregation") {
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::vector<double> same{4, 4, 4};
    auto r = summarize_seed_means(seeds, same);
    CHECK(r.mean == 4.0);
    CHECK(r.standard_error == 0.0);
    const std::vector<double> means{1, 2, 6};
    r = summarize_seed_means(seeds, means);
    CHECK(r.mean == 3.0);
    const std::vector<double> one{1};
    CHECK_THROWS_AS(summarize_seed_means(std::span(seeds).first(1), one), ConfigError);

    RunSpec spec = small_spec();
    spec.training_steps = 300;
    spec.checkpoint_interval = 300;
    const std::vector<std::uint64_t> two{5, 6};
    const auto res = seed_protocol(spec, two, 2);
    CHECK(res.per_seed_mean_reward.size() == 2);
    CHECK(res.mean == doctest::Approx((res.per_seed_mean_reward[0] + res.per_seed_mean_reward[1]) / 2));
}

TEST_CASE("run spec validation") {
    RunSpec s = small_spec();
    s.training_steps = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = small_spec();
    s.checkpoint_interval = 0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}
