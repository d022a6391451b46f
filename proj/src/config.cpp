#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "iabsa/harness.hpp"

namespace iabsa {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    T v{};
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        out.push_back(parse_number<T>(key, item));
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        if constexpr (std::is_floating_point_v<T>)
            s += format_double(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

struct Field {
    std::function<void(const std::string&, const std::string&)> set;
    std::function<std::string()> get;
};

using Schema = std::map<std::string, std::map<std::string, Field>>;

Field int_field(int& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_number<int>(k, v); },
            [&ref] { return std::to_string(ref); }};
}
Field size_field(std::size_t& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_number<std::size_t>(k, v); },
            [&ref] { return std::to_string(ref); }};
}
Field i64_field(std::int64_t& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_number<std::int64_t>(k, v); },
            [&ref] { return std::to_string(ref); }};
}
Field double_field(double& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_number<double>(k, v); },
            [&ref] { return format_double(ref); }};
}
Field bool_field(bool& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_bool(k, v); },
            [&ref] { return std::string(ref ? "true" : "false"); }};
}
Field string_field(std::string& ref) {
    return {[&ref](const std::string&, const std::string& v) { ref = trim(v); }, [&ref] { return ref; }};
}
Field int_list_field(std::vector<int>& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_list<int>(k, v); },
            [&ref] { return join(ref); }};
}
Field seed_list_field(std::vector<std::uint64_t>& ref) {
    return {[&ref](const std::string& k, const std::string& v) { ref = parse_list<std::uint64_t>(k, v); },
            [&ref] { return join(ref); }};
}
Field agent_field(AgentKind& ref) {
    return {[&ref](const std::string&, const std::string& v) { ref = parse_agent_kind(trim(v)); },
            [&ref] { return std::string(agent_name(ref)); }};
}
Field optimizer_field(OptimizerKind& ref) {
    return {[&ref](const std::string& k, const std::string& v) {
                const std::string t = trim(v);
                if (t == "sgd")
                    ref = OptimizerKind::sgd;
                else if (t == "adam")
                    ref = OptimizerKind::adam;
                else
                    throw ConfigError("config key '" + k + "': optimizer must be sgd or adam");
            },
            [&ref] { return std::string(ref == OptimizerKind::sgd ? "sgd" : "adam"); }};
}
Field qos_field(QosSpec& ref) {
    return {[&ref](const std::string& k, const std::string& v) {
                const auto values = parse_list<double>(k, v);
                ref.omega = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
            },
            [&ref] { return join(std::vector<double>(ref.omega.data(), ref.omega.data() + ref.omega.size())); }};
}

// Binds every configurable key to a field of `c`.
Schema make_schema(ExperimentConfig& c) {
    Schema s;
    auto& n = c.env.network;
    s["network"] = {{"L", int_field(n.L)},
                    {"M", int_field(n.M)},
                    {"iab_radius", double_field(n.iab_radius)},
                    {"ue_radius", double_field(n.ue_radius)},
                    {"speed_max", double_field(n.speed_max)},
                    {"step_duration", double_field(n.step_duration)},
                    {"min_distance", double_field(n.min_distance)}};
    auto& ch = c.env.channel;
    s["channel"] = {{"mbs_pl_a", double_field(ch.mbs_pl_a)},
                    {"mbs_pl_b", double_field(ch.mbs_pl_b)},
                    {"iab_pl_a", double_field(ch.iab_pl_a)},
                    {"iab_pl_b", double_field(ch.iab_pl_b)},
                    {"bandwidth_hz", double_field(ch.bandwidth_hz)},
                    {"noise_figure_db", double_field(ch.noise_figure_db)},
                    {"tx_power_mbs_dbm", double_field(ch.tx_power_mbs_dbm)},
                    {"tx_power_iab_dbm", double_field(ch.tx_power_iab_dbm)},
                    {"self_interference_db", double_field(ch.self_interference_db)},
                    {"noise_per_subchannel", bool_field(ch.noise_per_subchannel)}};
    auto& r = c.env.rates;
    s["rates"] = {{"rate_log_base", double_field(r.rate_log_base)},
                  {"utility_log_base", double_field(r.utility_log_base)},
                  {"c_floor", double_field(r.c_floor)},
                  {"literal_interference", bool_field(r.literal_interference)}};
    auto& e = c.env.episode;
    s["episode"] = {{"horizon", int_field(e.horizon)},
                    {"gamma", double_field(e.gamma)},
                    {"qos", qos_field(e.qos)},
                    {"qos_penalty", double_field(c.env.qos_penalty)},
                    {"freeze_channel", bool_field(c.env.freeze_channel)}};
    auto& a = c.agent;
    s["agent"] = {{"kind", agent_field(a.kind)},
                  {"hidden", int_list_field(a.hidden)},
                  {"critic_hidden", int_list_field(a.critic_hidden)},
                  {"actor_hidden", int_list_field(a.actor_hidden)},
                  {"epsilon", double_field(a.epsilon)},
                  {"epsilon_decay", double_field(a.epsilon_decay)},
                  {"epsilon_min", double_field(a.epsilon_min)},
                  {"lr", double_field(a.lr)},
                  {"actor_lr", double_field(a.actor_lr)},
                  {"tau", double_field(a.tau)},
                  {"batch_n", int_field(a.batch_n)},
                  {"buffer_capacity", size_field(a.buffer_capacity)},
                  {"warmup", int_field(a.warmup)},
                  {"target_sync_period", int_field(a.target_sync_period)},
                  {"action_cap", i64_field(a.action_cap)},
                  {"optimizer", optimizer_field(a.optimizer.kind)},
                  {"clip_norm", double_field(a.optimizer.clip_norm)},
                  {"store_discretized", bool_field(a.store_discretized)}};
    auto& run = c.run;
    s["run"] = {{"episodes", int_field(run.episodes)},
                {"seeds", seed_list_field(run.seeds)},
                {"output_dir", string_field(run.output_dir)},
                {"checkpoint_every", int_field(run.checkpoint_every)},
                {"threads", int_field(run.threads)},
                {"oracle_threads", int_field(run.oracle_threads)},
                {"redeploy_per_episode", bool_field(run.redeploy_per_episode)},
                {"snapshot_episodes", int_field(run.snapshot_episodes)}};
    s["check"] = {{"baseline", agent_field(c.check.baseline)}, {"episodes", int_field(c.check.episodes)}};
    return s;
}

}  // namespace

void ExperimentConfig::validate() {
    env.finalize();
    if (run.episodes < 1) throw ConfigError("run.episodes must be >= 1");
    if (run.seeds.empty()) throw ConfigError("run.seeds must list at least one seed");
    if (run.checkpoint_every < 0) throw ConfigError("run.checkpoint_every must be >= 0");
    if (check.episodes < 2) throw ConfigError("check.episodes must be >= 2");
    if (agent.batch_n < 1) throw ConfigError("agent.batch_n must be >= 1");
    if (agent.buffer_capacity < 1) throw ConfigError("agent.buffer_capacity must be >= 1");
    for (const auto* widths : {&agent.hidden, &agent.critic_hidden, &agent.actor_hidden})
        for (int w : *widths)
            if (w < 1) throw ConfigError("agent layer widths must be >= 1");
    if (agent.kind == AgentKind::ddqn) make_ddqn_config(*this).validate();
    if (agent.kind == AgentKind::acsa) make_acsa_config(*this).validate();
}

ExperimentConfig parse_config(const std::string& text) {
    // property_tree's INI reader only knows ';' comments.
    std::stringstream cleaned;
    std::stringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        cleaned << (t.rfind('#', 0) == 0 ? ";" + t : line) << '\n';
    }

    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(cleaned, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }

    ExperimentConfig config;
    Schema schema = make_schema(config);
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty())
            throw ConfigError("config: key '" + section + "' outside of any section");
        auto sit = schema.find(section);
        if (sit == schema.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : entries) {
            auto kit = sit->second.find(key);
            if (kit == sit->second.end()) throw ConfigError("config: unknown key '" + section + "." + key + "'");
            kit->second.set(section + "." + key, value.data());
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& config) {
    ExperimentConfig copy = config;
    Schema schema = make_schema(copy);
    std::ostringstream os;
    for (const char* section : {"network", "channel", "rates", "episode", "agent", "run", "check"}) {
        os << '[' << section << "]\n";
        for (const auto& [key, field] : schema.at(section)) os << key << " = " << field.get() << '\n';
        os << '\n';
    }
    return os.str();
}

DdqnConfig make_ddqn_config(const ExperimentConfig& config) {
    const int L = config.env.network.L;
    const int M = config.env.network.M;
    const auto size = action_space_size(L, M);
    if (!size || *size > config.agent.action_cap)
        throw CapacityError("ddqn: joint action space for L=" + std::to_string(L) + ", M=" + std::to_string(M) +
                            " exceeds action_cap " + std::to_string(config.agent.action_cap));
    DdqnConfig d;
    d.obs_dim = 1 + L;
    d.action_count = *size;
    d.hidden = config.agent.hidden;
    d.gamma = config.env.episode.gamma;
    d.epsilon = config.agent.epsilon;
    d.epsilon_decay = config.agent.epsilon_decay;
    d.epsilon_min = config.agent.epsilon_min;
    d.lr = config.agent.lr;
    d.batch_n = config.agent.batch_n;
    d.buffer_capacity = config.agent.buffer_capacity;
    d.target_sync_period = config.agent.target_sync_period;
    d.action_cap = config.agent.action_cap;
    d.optimizer = config.agent.optimizer;
    return d;
}

AcsaConfig make_acsa_config(const ExperimentConfig& config) {
    AcsaConfig a;
    a.L = config.env.network.L;
    a.M = config.env.network.M;
    a.critic_hidden = config.agent.critic_hidden.empty() ? config.agent.hidden : config.agent.critic_hidden;
    a.actor_hidden = config.agent.actor_hidden.empty() ? config.agent.hidden : config.agent.actor_hidden;
    a.gamma = config.env.episode.gamma;
    a.epsilon = config.agent.epsilon;
    a.epsilon_decay = config.agent.epsilon_decay;
    a.epsilon_min = config.agent.epsilon_min;
    a.tau = config.agent.tau;
    a.lr = config.agent.lr;
    a.actor_lr = config.agent.actor_lr;
    a.batch_n = config.agent.batch_n;
    a.buffer_capacity = config.agent.buffer_capacity;
    a.optimizer = config.agent.optimizer;
    a.store_discretized = config.agent.store_discretized;
    return a;
}

}  // namespace iabsa
