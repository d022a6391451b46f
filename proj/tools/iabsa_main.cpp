#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "iabsa/baselines.hpp"
#include "iabsa/harness.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2, kCheckFailed = 3 };

struct Flags {
    std::string config;
    std::string seeds;
    std::string out;
    std::string checkpoint;
    int episodes = 0;
};

void add_common(CLI::App* cmd, Flags& f, bool checkpoint) {
    cmd->add_option("--config", f.config, "experiment config file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seeds, "comma-separated seed list (overrides [run] seeds)");
    cmd->add_option("--out", f.out, "output directory (overrides [run] output_dir)");
    cmd->add_option("--episodes", f.episodes, "episode count (overrides [run] episodes)")->check(CLI::PositiveNumber);
    if (checkpoint) cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file or directory");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            seeds.push_back(std::stoull(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw iabsa::ConfigError("--seed: cannot parse '" + item + "'");
        }
    }
    if (seeds.empty()) throw iabsa::ConfigError("--seed: empty list");
    return seeds;
}

iabsa::ExperimentConfig resolve(const Flags& f) {
    auto config = iabsa::load_config(f.config);
    if (!f.seeds.empty()) config.run.seeds = parse_seeds(f.seeds);
    if (!f.out.empty()) config.run.output_dir = f.out;
    if (f.episodes > 0) config.run.episodes = f.episodes;
    config.validate();
    return config;
}

std::optional<std::filesystem::path> checkpoint_of(const Flags& f) {
    if (f.checkpoint.empty()) return std::nullopt;
    if (!std::filesystem::exists(f.checkpoint)) throw iabsa::ConfigError("checkpoint not found: " + f.checkpoint);
    return std::filesystem::path(f.checkpoint);
}

int cmd_train(const Flags& f) {
    const auto config = resolve(f);
    std::cout << iabsa::run_train(config).string() << '\n';
    return kOk;
}

int cmd_eval(const Flags& f) {
    const auto config = resolve(f);
    const auto s = iabsa::run_eval(config, checkpoint_of(f));
    iabsa::write_summary_csv(std::cout, {s});
    return kOk;
}

int cmd_oracle(const Flags& f) {
    const auto config = resolve(f);
    const std::filesystem::path out(config.run.output_dir);
    std::filesystem::create_directories(out);
    iabsa::IabEnv env(config.env);
    const int L = env.L();
    const int M = env.M();
    std::cout << "seed,best_index,best_utility,evaluated\n";
    for (std::uint64_t seed : config.run.seeds) {
        env.reset(seed);
        const auto r = iabsa::exhaustive_oracle(env.channel(), config.env.channel, config.env.rates, L, M,
                                                {config.agent.action_cap, config.run.oracle_threads, true});
        std::ofstream os(out / ("oracle_seed" + std::to_string(seed) + ".csv"));
        iabsa::write_oracle_csv(os, r);
        std::cout << seed << ',' << r.best_index << ',' << iabsa::format_double(r.best_utility) << ','
                  << r.evaluated_count << '\n';
    }
    return kOk;
}

int cmd_gain(const Flags& f) {
    const auto config = resolve(f);
    const auto agent_factory = iabsa::controller_factory(config, checkpoint_of(f));
    std::vector<iabsa::Summary> agent_parts;
    for (std::uint64_t seed : config.run.seeds) {
        auto a = agent_factory(seed);
        agent_parts.push_back(iabsa::evaluate(config, *a, seed, config.run.episodes));
    }
    const auto agent = iabsa::merge_summaries(agent_parts);

    const std::filesystem::path out(config.run.output_dir);
    std::filesystem::create_directories(out);
    std::ofstream os(out / "gain.csv");
    for (std::ostream* s : {static_cast<std::ostream*>(&os), &std::cout})
        *s << "agent,baseline,agent_mean,baseline_mean,gain,literal_ratio\n";

    for (auto kind : {iabsa::AgentKind::fixed_orthogonal, iabsa::AgentKind::full_reuse}) {
        auto base_config = config;
        base_config.agent.kind = kind;
        const auto factory = iabsa::controller_factory(base_config, std::nullopt);
        std::vector<iabsa::Summary> parts;
        for (std::uint64_t seed : config.run.seeds) {
            auto b = factory(seed);
            parts.push_back(iabsa::evaluate(base_config, *b, seed, config.run.episodes));
        }
        const auto g = iabsa::compute_gain(agent, iabsa::merge_summaries(parts));
        for (std::ostream* s : {static_cast<std::ostream*>(&os), &std::cout})
            *s << iabsa::agent_name(config.agent.kind) << ',' << iabsa::agent_name(kind) << ','
               << iabsa::format_double(g.agent_mean) << ',' << iabsa::format_double(g.fixed_mean) << ','
               << iabsa::format_double(g.gain) << ',' << iabsa::format_double(g.literal_ratio) << '\n';
    }
    return kOk;
}

int cmd_improve_check(const Flags& f) {
    const auto config = resolve(f);
    auto base_config = config;
    base_config.agent.kind = config.check.baseline;
    const auto improved = iabsa::controller_factory(config, checkpoint_of(f));
    const auto baseline = iabsa::controller_factory(base_config, std::nullopt);
    const auto r = iabsa::policy_improvement_check(config, baseline, improved);
    std::cout << "improved," << iabsa::agent_name(config.agent.kind) << '\n'
              << "baseline," << iabsa::agent_name(config.check.baseline) << '\n'
              << "mean_improved," << iabsa::format_double(r.mean_improved) << '\n'
              << "mean_baseline," << iabsa::format_double(r.mean_baseline) << '\n'
              << "stderr_diff," << iabsa::format_double(r.stderr_diff) << '\n'
              << "strict," << (r.strict ? "true" : "false") << '\n'
              << "result," << (r.passed ? "pass" : "fail") << '\n';
    return r.passed ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectrum allocation for two-tier IAB networks: training, evaluation and checks"};
    app.require_subcommand(1);

    Flags flags;
    auto* train = app.add_subcommand("train", "train the configured agent, write metrics.csv and checkpoints");
    auto* eval = app.add_subcommand("eval", "greedy rollouts, write summary.csv and allocations.csv");
    auto* oracle = app.add_subcommand("oracle", "enumerate every allocation on each seed's first channel");
    auto* gain = app.add_subcommand("gain", "gain of the configured agent over the fixed baselines");
    auto* check = app.add_subcommand("improve-check", "discounted-return comparison against [check] baseline");
    add_common(train, flags, false);
    add_common(eval, flags, true);
    add_common(oracle, flags, false);
    add_common(gain, flags, true);
    add_common(check, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Error& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (train->parsed()) return cmd_train(flags);
        if (eval->parsed()) return cmd_eval(flags);
        if (oracle->parsed()) return cmd_oracle(flags);
        if (gain->parsed()) return cmd_gain(flags);
        if (check->parsed()) return cmd_improve_check(flags);
    } catch (const iabsa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const iabsa::CapacityError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kRuntimeError;
}
