// gasrl: command-line front end for training, evaluation, sweeps and analysis.
//
// Every command prints a human-readable table followed by one line of compact JSON
// (the last line of stdout), and writes its artifacts atomically. Wall-clock data
// lives only in meta.json so that reruns are byte-identical elsewhere.

#include "gasrl/analysis.hpp"
#include "gasrl/config.hpp"
#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"
#include "gasrl/harness.hpp"
#include "gasrl/seasonality.hpp"
#include "gasrl/svg.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gasrl;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Meta {
    std::string command;
    std::vector<std::string> argv;
    std::string started = utc_now();

    void write(const fs::path& dir) const {
        const json j = {{"command", command}, {"argv", argv},   {"started_at", started},
                        {"finished_at", utc_now()}, {"version", kVersion}};
        write_file_atomic(dir / "meta.json", j.dump(2) + "\n");
    }
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string fmt(double v, int precision = 4) {
    if (!std::isfinite(v)) return "nan";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

// Plain fixed-width table.
void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size() && c < width.size(); ++c) width[c] = std::max(width[c], r[c].size());
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < width.size(); ++c) {
            const std::string& s = c < cells.size() ? cells[c] : std::string{};
            std::cout << (c ? "  " : "") << std::string(width[c] - s.size(), ' ') << s;
        }
        std::cout << "\n";
    };
    line(header);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    std::cout << std::string(total > 2 ? total - 2 : 0, '-') << "\n";
    for (const auto& r : rows) line(r);
}

void print_metrics(const MetricsReport& r) {
    auto row = [](const char* name, const Stat& s) {
        return std::vector<std::string>{name, fmt(s.mean), fmt(s.standard_error), std::to_string(s.count)};
    };
    print_table({"metric", "mean", "std.err", "n"},
                {row("reward", r.reward), row("bank", r.bank), row("volatility", r.volatility),
                 row("market_success", r.market_success), row("november_inventory", r.november_inventory),
                 row("price_level", r.price_level)});
}

void emit(const json& j) { std::cout << j.dump() << std::endl; }

// Options shared by the config-driven commands.
struct ConfigArgs {
    std::optional<std::string> config;
    std::vector<std::string> set;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;

    void attach(CLI::App* app) {
        app->add_option("--config,-c", config, "TOML experiment config (calibrated defaults when omitted)");
        app->add_option("--set", set, "Override a config value, e.g. --set reward.theta_n=1000 (repeatable)")
            ->take_all()
            ->allow_extra_args(false);
        app->add_option("--seed", seed, "Run seed (overrides run.seed)");
        app->add_option("--workers", workers, "Evaluation threads (0 = all cores)");
    }

    ExperimentConfig load() const {
        std::vector<std::string> overrides = set;
        if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
        if (workers) overrides.push_back("run.workers=" + std::to_string(*workers));
        return load_config(config ? std::optional<fs::path>(*config) : std::nullopt, overrides);
    }
};

fs::path output_root(const ExperimentConfig& cfg) {
    return cfg.output_dir.empty() ? default_output_root() : cfg.output_dir;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
    ConfigArgs cfg;
    std::optional<std::string> out;
    std::optional<long> steps;
    bool resume = false;
    bool no_traces = false;
};

json train_summary(const TrainResult& res, const MetricsReport& test, const fs::path& dir) {
    const auto& best = res.checkpoints.at(res.best);
    return {{"command", "train"},
            {"run_dir", dir.string()},
            {"steps", res.steps},
            {"episodes_started", res.episodes_started},
            {"checkpoints", res.checkpoints.size()},
            {"best_step", best.step},
            {"best_eval_reward", best.evaluation.reward.mean},
            {"test", to_json(test)}};
}

int cmd_train(const TrainArgs& a, const std::vector<std::string>& argv) {
    ExperimentConfig cfg = a.cfg.load();
    if (a.steps) {
        cfg.run.training_steps = *a.steps;
        cfg.run.validate();
    }
    const RunSpec& spec = cfg.run;
    const fs::path dir = a.out ? fs::path(*a.out)
                               : output_root(cfg) / (spec.tag + "-seed" + std::to_string(spec.seed));

    TrainOptions opts;
    opts.run_dir = dir;
    if (a.resume) {
        Checkpoint r = load_checkpoint(dir / "resume.ckpt");
        Checkpoint probe = r;
        probe.market = spec.market;
        probe.reward = spec.reward;
        probe.seasonal = spec.seasonal;
        if (probe.config_hash() != r.config_hash() || r.seed != spec.seed || r.tag != spec.tag) {
            throw ConfigError("--resume: configuration differs from the run stored in " + dir.string());
        }
        opts.resume = std::move(r);
    }
    Meta meta{"train", argv};
    fs::create_directories(dir / "checkpoints");
    write_file_atomic(dir / "config.toml", config_to_toml(cfg));

    opts.on_checkpoint = [](const CheckpointRecord& rec) {
        std::cerr << "step " << rec.step << "  eval reward " << fmt(rec.evaluation.reward.mean, 2) << "  success "
                  << fmt(rec.evaluation.market_success.mean, 4) << "\n";
    };
    const TrainResult res = train(spec, opts);

    // Final test of the selected checkpoint on a disjoint seed family.
    const Checkpoint& best = res.saved.at(res.best);
    save_checkpoint(best, dir / "best.ckpt");
    const Evaluation test = evaluate(best, spec.test_episodes, derive_seed(spec.seed, "test"), spec.workers);
    if (!a.no_traces) {
        fs::create_directories(dir / "traces");
        for (std::size_t i = 0; i < test.traces.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "test_%03zu.csv", i);
            write_trace_csv(test.traces[i], dir / "traces" / name);
        }
    }

    svg::Series reward{"eval reward", {}, {}, {}, {}};
    svg::Series success{"market success", {}, {}, {}, {}};
    for (const auto& c : res.checkpoints) {
        reward.x.push_back(static_cast<double>(c.step));
        reward.y.push_back(c.evaluation.reward.mean);
        reward.lower.push_back(c.evaluation.reward.mean - 1.96 * c.evaluation.reward.standard_error);
        reward.upper.push_back(c.evaluation.reward.mean + 1.96 * c.evaluation.reward.standard_error);
        success.x.push_back(static_cast<double>(c.step));
        success.y.push_back(c.evaluation.market_success.mean);
    }
    write_file_atomic(dir / "training_curve.svg",
                      svg::line_chart("Evaluation reward", {reward}, "training step", "mean episode reward", true));
    write_file_atomic(dir / "market_success.svg",
                      svg::line_chart("Market success", {success}, "training step", "1 - mean m_t", true));

    const json summary = train_summary(res, test.report, dir);
    json metrics = summary;
    metrics.erase("run_dir");  // keeps relocated or repeated runs byte-identical
    metrics["episodes"] = json::array();
    for (const auto& e : test.episodes) {
        metrics["episodes"].push_back({{"reward", e.reward},
                                       {"bank", e.bank},
                                       {"volatility", e.volatility},
                                       {"market_success", e.market_success},
                                       {"november_inventory", e.november_inventory},
                                       {"price_level", e.price_level}});
    }
    write_json(dir / "metrics.json", metrics);
    meta.write(dir);

    std::cout << "run " << dir.string() << ": " << res.steps << " steps, best checkpoint at step "
              << res.checkpoints[res.best].step << ", tested on " << spec.test_episodes << " episodes\n";
    print_metrics(test.report);
    emit(summary);
    return 0;
}

// ---- evaluate ----------------------------------------------------------------

struct EvaluateArgs {
    std::string checkpoint;
    int episodes = 50;
    std::uint64_t seed = 0;
    int workers = 0;
    std::optional<double> sigma_s;
    std::optional<std::string> out;
};

int cmd_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv) {
    if (a.episodes < 1) throw ConfigError("--episodes must be at least 1");
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    std::optional<MarketParams> market;
    if (a.sigma_s) {
        market = ckpt.market;
        market->sigma_s = *a.sigma_s;
        market->validate();
    }
    const Evaluation ev = evaluate(ckpt, a.episodes, a.seed, a.workers, market);
    const json summary = {{"command", "evaluate"},
                          {"checkpoint", a.checkpoint},
                          {"step", ckpt.step},
                          {"tag", ckpt.tag},
                          {"episodes", a.episodes},
                          {"seed", a.seed},
                          {"sigma_s", market ? market->sigma_s : ckpt.market.sigma_s},
                          {"metrics", to_json(ev.report)}};
    if (a.out) {
        const fs::path dir = *a.out;
        Meta meta{"evaluate", argv};
        fs::create_directories(dir / "traces");
        for (std::size_t i = 0; i < ev.traces.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "episode_%03zu.csv", i);
            write_trace_csv(ev.traces[i], dir / "traces" / name);
        }
        write_json(dir / "metrics.json", summary);
        meta.write(dir);
    }
    std::cout << "checkpoint " << a.checkpoint << " (tag " << ckpt.tag << ", step " << ckpt.step << "), "
              << a.episodes << " episodes\n";
    print_metrics(ev.report);
    emit(summary);
    return 0;
}

// ---- sweep -------------------------------------------------------------------

struct SweepArgs {
    std::string baseline;
    std::string regulated;
    std::string sigma = "0.04:0.07:0.01";
    int episodes = 1000;
    std::uint64_t seed = 0;
    int workers = 0;
    std::optional<std::string> out;
};

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    const char sep = spec.find(':') != std::string::npos ? ':' : ',';
    while (std::getline(ss, item, sep)) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--sigma-s: cannot parse '" + item + "'");
        }
    }
    if (sep == ',') return parts;
    if (parts.size() != 3 || parts[2] <= 0 || parts[1] < parts[0]) {
        throw ConfigError("--sigma-s: expected lo:hi:step with step > 0 and hi >= lo, or a comma list");
    }
    std::vector<double> grid;
    const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= n; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return grid;
}

int cmd_sweep(const SweepArgs& a, const std::vector<std::string>& argv) {
    const auto grid = parse_grid(a.sigma);
    if (a.episodes < 2) throw ConfigError("--episodes must be at least 2 for confidence intervals");
    const Checkpoint base = load_checkpoint(a.baseline);
    const Checkpoint reg = load_checkpoint(a.regulated);
    const auto points = sweep_sigma_s(base, reg, grid, a.episodes, a.seed, a.workers);

    json summary = {{"command", "sweep"},  {"baseline", a.baseline}, {"regulated", a.regulated},
                    {"episodes", a.episodes}, {"seed", a.seed},       {"points", json::array()}};
    for (const auto& p : points) summary["points"].push_back(to_json(p));

    std::vector<std::vector<std::string>> rows;
    auto ci = [](const analysis::MeanCi& c) { return fmt(c.mean) + " +/- " + fmt(c.half_width); };
    for (const auto& p : points) {
        rows.push_back({fmt(p.sigma_s, 3), "baseline", ci(p.baseline.market_success), ci(p.baseline.bank),
                        ci(p.baseline.volatility), ci(p.baseline.price_level)});
        rows.push_back({fmt(p.sigma_s, 3), "regulated", ci(p.regulated.market_success), ci(p.regulated.bank),
                        ci(p.regulated.volatility), ci(p.regulated.price_level)});
    }

    if (a.out) {
        const fs::path dir = *a.out;
        Meta meta{"sweep", argv};
        fs::create_directories(dir);
        write_json(dir / "sweep.json", summary);
        CsvTable table;
        table.header = {"sigma_s", "policy", "metric", "mean", "ci_low", "ci_high"};
        auto add = [&](double s, const char* who, const char* metric, const analysis::MeanCi& c) {
            table.rows.push_back(
                {format_double(s), who, metric, format_double(c.mean), format_double(c.lower()), format_double(c.upper())});
        };
        for (const auto& p : points) {
            for (auto [who, st] : {std::pair{"baseline", &p.baseline}, std::pair{"regulated", &p.regulated}}) {
                add(p.sigma_s, who, "market_success", st->market_success);
                add(p.sigma_s, who, "bank", st->bank);
                add(p.sigma_s, who, "volatility", st->volatility);
                add(p.sigma_s, who, "price_level", st->price_level);
            }
        }
        write_csv_atomic(table, dir / "sweep.csv");
        auto plot = [&](const char* file, const char* title, auto member) {
            std::vector<svg::Series> series;
            for (auto [who, reg_side] : {std::pair{"baseline (theta_n=0)", false}, std::pair{"regulated", true}}) {
                svg::Series s{who, {}, {}, {}, {}};
                for (const auto& p : points) {
                    const analysis::MeanCi& c = (reg_side ? p.regulated : p.baseline).*member;
                    s.x.push_back(p.sigma_s);
                    s.y.push_back(c.mean);
                    s.lower.push_back(c.lower());
                    s.upper.push_back(c.upper());
                }
                series.push_back(std::move(s));
            }
            write_file_atomic(dir / file, svg::line_chart(title, series, "sigma_s", title, true));
        };
        plot("sweep_market_success.svg", "market success", &SweepStats::market_success);
        plot("sweep_bank.svg", "terminal bank", &SweepStats::bank);
        plot("sweep_volatility.svg", "volatility", &SweepStats::volatility);
        plot("sweep_price_level.svg", "price level", &SweepStats::price_level);
        meta.write(dir);
    }
    std::cout << "sigma_s sweep, " << a.episodes << " episodes per point (mean +/- 95% CI half-width)\n";
    print_table({"sigma_s", "policy", "market_success", "bank", "volatility", "price_level"}, rows);
    emit(summary);
    return 0;
}

// ---- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
    std::vector<std::string> traces;
    std::optional<std::string> external;
    std::optional<std::string> out;
    int grid_points = 201;
};

json seasonality_json(const analysis::SeasonalityEstimate& e) {
    return {{"method", e.method},
            {"coefficients", e.coefficients},
            {"standard_errors", e.standard_errors},
            {"counts", e.counts},
            {"peak_month", e.peak_month()}};
}

int cmd_analyze(const AnalyzeArgs& a, const std::vector<std::string>& argv) {
    std::vector<analysis::PriceSeries> runs;
    for (const auto& path : a.traces) runs.push_back(analysis::load_trace_prices(path));
    std::optional<analysis::PriceSeries> external;
    if (a.external) external = analysis::load_external_prices(*a.external);
    if (runs.empty() && !external) throw ConfigError("analyze: give --traces and/or --external");

    json report = {{"command", "analyze"}, {"traces", a.traces.size()}};
    std::vector<std::string> month_names = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    std::vector<svg::BarGroup> bars;
    std::vector<svg::Series> densities;
    std::vector<std::vector<std::string>> rows;

    auto describe = [&](const std::string& name, const analysis::LabeledDiffs& diffs) {
        json part;
        const double sd = analysis::volatility_std(diffs.values);
        part["volatility_std"] = sd;
        part["n_diffs"] = diffs.values.size();
        std::string peak = "-";
        try {
            const auto est = analysis::seasonal_regression(diffs);
            part["seasonality"] = seasonality_json(est);
            bars.push_back({name, std::vector<double>(est.coefficients.begin(), est.coefficients.end())});
            peak = month_names[static_cast<std::size_t>(est.peak_month() - 1)];
        } catch (const FitError& e) {
            part["seasonality"] = nullptr;
            part["seasonality_error"] = e.what();
        }
        if (sd > 0) {
            const double lo = *std::min_element(diffs.values.begin(), diffs.values.end()) - 3 * sd;
            const double hi = *std::max_element(diffs.values.begin(), diffs.values.end()) + 3 * sd;
            const auto grid = analysis::linspace(lo, hi, static_cast<std::size_t>(a.grid_points));
            const auto dens = analysis::kde(diffs.values, grid);
            part["kde"] = {{"bandwidth", analysis::silverman_bandwidth(diffs.values)}, {"grid", grid}, {"density", dens}};
            densities.push_back({name, grid, dens, {}, {}});
        } else {
            part["kde"] = nullptr;
        }
        rows.push_back({name, std::to_string(diffs.values.size()), fmt(sd), peak});
        return part;
    };

    if (!runs.empty()) {
        report["pooled"] = describe("pooled runs", analysis::pooled_log_diffs(runs));
        if (runs.size() > 1) {
            const auto avg = analysis::average_series(runs);
            report["averaged"] = describe("averaged series", analysis::labeled_log_diffs(avg));
            report["averaged"]["mean_price"] = analysis::mean(avg.prices);
        }
        std::vector<double> per_run_sd;
        for (const auto& r : runs) per_run_sd.push_back(analysis::volatility_std(analysis::log_diffs(r)));
        if (per_run_sd.size() >= 2) {
            const auto ci = analysis::mean_ci(per_run_sd);
            report["per_run_volatility"] = {{"mean", ci.mean}, {"ci_half_width", ci.half_width}, {"values", per_run_sd}};
        } else {
            report["per_run_volatility"] = {{"values", per_run_sd}};
        }
    }
    if (external) report["external"] = describe("external", analysis::labeled_log_diffs(*external));

    if (a.out) {
        const fs::path dir = *a.out;
        Meta meta{"analyze", argv};
        fs::create_directories(dir);
        write_json(dir / "analysis.json", report);
        if (!bars.empty()) {
            write_file_atomic(dir / "seasonality.svg",
                              svg::bar_chart("Monthly seasonal coefficients of log-price changes", month_names, bars,
                                             "mean log difference"));
        }
        if (!densities.empty()) {
            write_file_atomic(dir / "log_diff_density.svg",
                              svg::line_chart("Kernel density of log-price differences", densities, "log difference",
                                              "density"));
        }
        meta.write(dir);
    }
    print_table({"series", "n_diffs", "std", "peak_month"}, rows);
    emit(report);
    return 0;
}

// ---- fit-seasonal ------------------------------------------------------------

struct FitArgs {
    std::string input;
    std::string harmonics = "1,2,3,4,6";
    bool raw = false;
    std::optional<std::string> out;
};

long parse_month(const std::string& cell, const std::string& source) {
    if (cell.find('-') != std::string::npos && cell.size() >= 7) {
        try {
            const long year = std::stol(cell.substr(0, 4));
            const long month = std::stol(cell.substr(5, 2));
            if (month >= 1 && month <= 12) return year * 12 + month - 1;
        } catch (const std::exception&) {
        }
        throw FormatError(source + ": bad date '" + cell + "'");
    }
    try {
        std::size_t used = 0;
        const long t = std::stol(cell, &used);
        if (used == cell.size()) return t;
    } catch (const std::exception&) {
    }
    throw FormatError(source + ": bad month index '" + cell + "'");
}

int cmd_fit_seasonal(const FitArgs& a, const std::vector<std::string>& argv) {
    std::vector<int> harmonics;
    {
        std::stringstream ss(a.harmonics);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                harmonics.push_back(std::stoi(item));
            } catch (const std::exception&) {
                throw ConfigError("--harmonics: cannot parse '" + item + "'");
            }
        }
    }
    const CsvTable table = read_csv(a.input);
    if (table.header.size() != 2) throw FormatError(a.input + ": expected 2 columns (month, consumption)");
    std::vector<MonthlyObservation> series;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const long t = parse_month(table.rows[i].at(0), a.input);
        const double v = table.number(i, 1);
        if (!a.raw && !(v > 0)) throw FormatError(a.input + ": consumption must be positive for the log transform");
        series.push_back({t, a.raw ? v : std::log(v)});
    }
    // Remove the level so that partial years do not leak it into the harmonics.
    double level = 0;
    for (const auto& o : series) level += o.value;
    level /= static_cast<double>(std::max<std::size_t>(1, series.size()));
    for (auto& o : series) o.value -= level;

    const SeasonalCoefficients coeffs = fit_coefficients(series, harmonics);
    json summary = {{"command", "fit-seasonal"}, {"input", a.input}, {"observations", series.size()},
                    {"log_transform", !a.raw}, {"level", level}, {"coefficients", to_json(coeffs)}};
    std::vector<std::vector<std::string>> rows;
    for (const auto& term : coeffs.terms) rows.push_back({std::to_string(term.harmonic), fmt(term.a, 6), fmt(term.b, 6)});
    std::vector<double> profile;
    for (long t = 0; t < 12; ++t) profile.push_back(seasonal_value(coeffs, t));
    summary["profile"] = profile;

    if (a.out) {
        const fs::path path = *a.out;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        Meta meta{"fit-seasonal", argv};
        save_seasonal_coefficients(coeffs, path);
        write_json(fs::path(path.string() + ".json"), summary);
        meta.write(path.has_parent_path() ? path.parent_path() : fs::path("."));
    }
    print_table({"harmonic", "a", "b"}, rows);
    emit(summary);
    return 0;
}

int exit_code(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::data: return 3;
        case ErrorCategory::runtime: return 4;
    }
    return 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gasrl: gas-storage market simulator with a Soft Actor-Critic operator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::vector<std::string> args(argv, argv + argc);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train an agent and write a run directory");
    train_args.cfg.attach(train_cmd);
    train_cmd->add_option("--out,-o", train_args.out,
                          "Run directory (default <output root>/<tag>-seed<seed>; root from [output].dir, "
                          "$GASRL_OUTPUT_ROOT or ./runs)");
    train_cmd->add_option("--steps", train_args.steps, "Training steps (overrides run.training_steps)");
    train_cmd->add_flag("--resume", train_args.resume, "Continue from <run dir>/resume.ckpt");
    train_cmd->add_flag("--no-traces", train_args.no_traces, "Skip writing test-episode trace CSVs");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint's deterministic policy");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--episodes,-n", eval_args.episodes, "Number of test episodes")->capture_default_str();
    eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed base")->capture_default_str();
    eval_cmd->add_option("--workers", eval_args.workers, "Threads (0 = all cores)")->capture_default_str();
    eval_cmd->add_option("--sigma-s", eval_args.sigma_s, "Override the supply shock std");
    eval_cmd->add_option("--out,-o", eval_args.out, "Directory for metrics.json and traces/");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate baseline and regulated policies over a sigma_s grid");
    sweep_cmd->add_option("--baseline", sweep_args.baseline, "Baseline checkpoint (theta_n = 0)")->required();
    sweep_cmd->add_option("--regulated", sweep_args.regulated, "Regulated checkpoint (theta_n > 0)")->required();
    sweep_cmd->add_option("--sigma-s", sweep_args.sigma, "Grid as lo:hi:step or a comma list")->capture_default_str();
    sweep_cmd->add_option("--episodes,-n", sweep_args.episodes, "Episodes per grid point")->capture_default_str();
    sweep_cmd->add_option("--seed", sweep_args.seed, "Evaluation seed base (shared by both policies)")
        ->capture_default_str();
    sweep_cmd->add_option("--workers", sweep_args.workers, "Threads (0 = all cores)")->capture_default_str();
    sweep_cmd->add_option("--out,-o", sweep_args.out, "Directory for sweep.json, sweep.csv and plots");

    AnalyzeArgs analyze_args;
    auto* analyze_cmd = app.add_subcommand("analyze", "Seasonality, volatility and density of log-price changes");
    analyze_cmd->add_option("--traces", analyze_args.traces, "Episode trace CSV files")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--external", analyze_args.external, "Historical prices CSV (date,price)")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--grid-points", analyze_args.grid_points, "KDE grid size")
        ->capture_default_str()
        ->check(CLI::Range(2, 100000));
    analyze_cmd->add_option("--out,-o", analyze_args.out, "Directory for analysis.json and SVG plots");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit-seasonal", "Fit Fourier seasonal coefficients to monthly consumption");
    fit_cmd->add_option("--input,-i", fit_args.input, "CSV with columns month,consumption (index or YYYY-MM)")
        ->required();
    fit_cmd->add_option("--harmonics", fit_args.harmonics, "Comma-separated harmonics")->capture_default_str();
    fit_cmd->add_flag("--raw", fit_args.raw, "Fit the values as given instead of their logarithm");
    fit_cmd->add_option("--out,-o", fit_args.out, "Coefficient CSV to write (harmonic,a,b)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*train_cmd) return cmd_train(train_args, args);
        if (*eval_cmd) return cmd_evaluate(eval_args, args);
        if (*sweep_cmd) return cmd_sweep(sweep_args, args);
        if (*analyze_cmd) return cmd_analyze(analyze_args, args);
        if (*fit_cmd) return cmd_fit_seasonal(fit_args, args);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
