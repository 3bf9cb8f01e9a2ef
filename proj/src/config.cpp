#include "gasrl/config.hpp"

#include "gasrl/csv.hpp"
#include "gasrl/error.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <type_traits>
#include <sstream>

namespace gasrl {

namespace {

std::string where(const std::string& section, const std::string& key) { return section + "." + key; }

double get_double(const toml::node& node, const std::string& field) {
    if (auto v = node.value<double>()) return *v;  // integers convert
    throw ConfigError(field + ": expected a number");
}

long long get_int(const toml::node& node, const std::string& field) {
    if (node.is_integer()) return node.as_integer()->get();
    throw ConfigError(field + ": expected an integer");
}

std::string get_string(const toml::node& node, const std::string& field) {
    if (node.is_string()) return node.as_string()->get();
    throw ConfigError(field + ": expected a string");
}

template <typename Map>
void read_section(const toml::table& root, const std::string& section, const Map& handlers) {
    const toml::node* node = root.get(section);
    if (!node) return;
    const toml::table* table = node->as_table();
    if (!table) throw ConfigError(section + ": expected a table");
    for (const auto& [key, value] : *table) {
        const std::string k(key.str());
        const auto it = handlers.find(k);
        if (it == handlers.end()) throw ConfigError(where(section, k) + ": unknown key");
        it->second(value, where(section, k));
    }
}

using Handler = std::function<void(const toml::node&, const std::string&)>;

void apply_override(toml::table& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + assignment + ": expected section.key=value");
    const std::string lhs = assignment.substr(0, eq);
    const std::string rhs = assignment.substr(eq + 1);
    const auto dot = lhs.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
        throw ConfigError("--set " + assignment + ": key must look like section.key");
    }
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);

    toml::table parsed;
    try {
        parsed = toml::parse("v = " + rhs);
    } catch (const toml::parse_error&) {
        parsed = toml::table{{"v", rhs}};
    }
    if (!root.contains(section)) root.insert(section, toml::table{});
    toml::table* table = root[section].as_table();
    if (!table) throw ConfigError(section + ": expected a table");
    table->insert_or_assign(key, *parsed.get("v"));
}

}  // namespace

ExperimentConfig parse_config(const std::string& toml_text, const std::vector<std::string>& overrides,
                              const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(toml_text);
    } catch (const toml::parse_error& e) {
        std::ostringstream ss;
        ss << "config: TOML syntax error: " << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError(ss.str());
    }
    for (const auto& o : overrides) apply_override(root, o);

    for (const auto& [key, value] : root) {
        static const std::set<std::string> sections{"market", "reward", "agent", "run", "seasonal", "output"};
        if (!sections.contains(std::string(key.str()))) {
            throw ConfigError(std::string(key.str()) + ": unknown section");
        }
    }

    ExperimentConfig cfg;
    auto& m = cfg.run.market;
    auto& w = cfg.run.reward;
    auto& a = cfg.run.agent;
    auto& run = cfg.run;

    auto dbl = [](double& target) -> Handler {
        return [&target](const toml::node& n, const std::string& f) { target = get_double(n, f); };
    };
    auto integer = [](auto& target) -> Handler {
        return [&target](const toml::node& n, const std::string& f) {
            const long long v = get_int(n, f);
            using T = std::remove_reference_t<decltype(target)>;
            if constexpr (std::is_unsigned_v<T>) {
                if (v < 0) throw ConfigError(f + ": must be non-negative");
            }
            target = static_cast<T>(v);
        };
    };

    read_section(root, "market",
                 std::map<std::string, Handler>{{"horizon", integer(m.horizon)},
                                                {"eta_d", dbl(m.eta_d)},
                                                {"lambda_d", dbl(m.lambda_d)},
                                                {"rho_d", dbl(m.rho_d)},
                                                {"sigma_d", dbl(m.sigma_d)},
                                                {"eta_s", dbl(m.eta_s)},
                                                {"lambda_s", dbl(m.lambda_s)},
                                                {"rho_s", dbl(m.rho_s)},
                                                {"sigma_s", dbl(m.sigma_s)},
                                                {"i_max", dbl(m.i_max)},
                                                {"tau", dbl(m.tau)},
                                                {"r", dbl(m.r)},
                                                {"action_lo", dbl(m.action_lo)},
                                                {"action_hi", dbl(m.action_hi)},
                                                {"gamma", dbl(m.gamma)},
                                                {"initial_inventory_fraction", dbl(m.initial_inventory_fraction)},
                                                {"initial_bank", dbl(m.initial_bank)},
                                                {"initial_log_price", dbl(m.initial_log_price)}});
    read_section(root, "reward",
                 std::map<std::string, Handler>{{"theta_v", dbl(w.theta_v)},
                                                {"theta_m", dbl(w.theta_m)},
                                                {"theta_n", dbl(w.theta_n)},
                                                {"refill_fraction", dbl(w.refill_fraction)},
                                                {"refill_month", integer(w.refill_month)}});
    read_section(
        root, "agent",
        std::map<std::string, Handler>{
            {"replay_capacity", integer(a.replay_capacity)},
            {"batch_size", integer(a.batch_size)},
            {"actor_lr", dbl(a.actor_lr)},
            {"critic_lr", dbl(a.critic_lr)},
            {"alpha_lr", dbl(a.alpha_lr)},
            {"polyak", dbl(a.polyak)},
            {"target_entropy", dbl(a.target_entropy)},
            {"warmup_steps", integer(a.warmup_steps)},
            {"updates_per_step", integer(a.updates_per_step)},
            {"initial_log_alpha", dbl(a.initial_log_alpha)},
            {"log_std_min", dbl(a.log_std_min)},
            {"log_std_max", dbl(a.log_std_max)},
            {"hidden", [&a](const toml::node& n, const std::string& f) {
                 const toml::array* arr = n.as_array();
                 if (!arr) throw ConfigError(f + ": expected an array of integers");
                 a.hidden.clear();
                 for (const auto& item : *arr) a.hidden.push_back(static_cast<int>(get_int(item, f)));
             }}});
    read_section(root, "run",
                 std::map<std::string, Handler>{
                     {"training_steps", integer(run.training_steps)},
                     {"checkpoint_interval", integer(run.checkpoint_interval)},
                     {"seed", integer(run.seed)},
                     {"tag", [&run](const toml::node& n, const std::string& f) { run.tag = get_string(n, f); }},
                     {"eval_episodes", integer(run.eval_episodes)},
                     {"test_episodes", integer(run.test_episodes)},
                     {"workers", integer(run.workers)}});
    read_section(root, "seasonal",
                 std::map<std::string, Handler>{{"coefficients", [&](const toml::node& n, const std::string& f) {
                                                     std::filesystem::path p = get_string(n, f);
                                                     cfg.seasonal_file = p.is_absolute() ? p : base_dir / p;
                                                 }}});
    read_section(root, "output",
                 std::map<std::string, Handler>{{"dir", [&](const toml::node& n, const std::string& f) {
                                                     cfg.output_dir = get_string(n, f);
                                                 }}});

    if (cfg.seasonal_file) {
        try {
            cfg.run.seasonal = load_seasonal_coefficients(*cfg.seasonal_file);
        } catch (const Error& e) {
            throw ConfigError(std::string("seasonal.coefficients: ") + e.what());
        }
    }
    cfg.run.sync_agent();
    cfg.run.validate();
    return cfg;
}

ExperimentConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides) {
    if (!path) return parse_config("", overrides, ".");
    if (!std::filesystem::is_regular_file(*path)) throw ConfigError(path->string() + ": config file not found");
    std::string text;
    try {
        text = read_file(*path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, overrides, path->parent_path());
}

std::string config_to_toml(const ExperimentConfig& cfg) {
    const auto& m = cfg.run.market;
    const auto& w = cfg.run.reward;
    const auto& a = cfg.run.agent;
    const auto& r = cfg.run;
    toml::array hidden;
    for (int h : a.hidden) hidden.push_back(h);
    toml::table root{
        {"market", toml::table{{"horizon", m.horizon},
                               {"eta_d", m.eta_d},
                               {"lambda_d", m.lambda_d},
                               {"rho_d", m.rho_d},
                               {"sigma_d", m.sigma_d},
                               {"eta_s", m.eta_s},
                               {"lambda_s", m.lambda_s},
                               {"rho_s", m.rho_s},
                               {"sigma_s", m.sigma_s},
                               {"i_max", m.i_max},
                               {"tau", m.tau},
                               {"r", m.r},
                               {"action_lo", m.action_lo},
                               {"action_hi", m.action_hi},
                               {"gamma", m.gamma},
                               {"initial_inventory_fraction", m.initial_inventory_fraction},
                               {"initial_bank", m.initial_bank},
                               {"initial_log_price", m.initial_log_price}}},
        {"reward", toml::table{{"theta_v", w.theta_v},
                               {"theta_m", w.theta_m},
                               {"theta_n", w.theta_n},
                               {"refill_fraction", w.refill_fraction},
                               {"refill_month", w.refill_month}}},
        {"agent", toml::table{{"replay_capacity", static_cast<int64_t>(a.replay_capacity)},
                              {"batch_size", static_cast<int64_t>(a.batch_size)},
                              {"actor_lr", a.actor_lr},
                              {"critic_lr", a.critic_lr},
                              {"alpha_lr", a.alpha_lr},
                              {"polyak", a.polyak},
                              {"target_entropy", a.target_entropy},
                              {"warmup_steps", static_cast<int64_t>(a.warmup_steps)},
                              {"updates_per_step", a.updates_per_step},
                              {"hidden", hidden},
                              {"initial_log_alpha", a.initial_log_alpha},
                              {"log_std_min", a.log_std_min},
                              {"log_std_max", a.log_std_max}}},
        {"run", toml::table{{"training_steps", static_cast<int64_t>(r.training_steps)},
                            {"checkpoint_interval", static_cast<int64_t>(r.checkpoint_interval)},
                            {"seed", static_cast<int64_t>(r.seed)},
                            {"tag", r.tag},
                            {"eval_episodes", r.eval_episodes},
                            {"test_episodes", r.test_episodes},
                            {"workers", r.workers}}},
    };
    if (!cfg.output_dir.empty()) root.insert("output", toml::table{{"dir", cfg.output_dir.string()}});
    if (cfg.seasonal_file) {
        root.insert("seasonal", toml::table{{"coefficients", cfg.seasonal_file->string()}});
    }
    std::ostringstream ss;
    ss << root << "\n";
    return ss.str();
}

std::filesystem::path default_output_root(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("GASRL_OUTPUT_ROOT"); env && *env) return env;
    return fallback;
}

}  // namespace gasrl
