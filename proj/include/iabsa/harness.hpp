#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iabsa/agent_acsa.hpp"
#include "iabsa/agent_ddqn.hpp"
#include "iabsa/env.hpp"

namespace iabsa {

enum class AgentKind { ddqn, acsa, full_reuse, fixed_orthogonal, oracle, random };

const char* agent_name(AgentKind kind);
AgentKind parse_agent_kind(const std::string& name);
bool is_learning(AgentKind kind);

struct AgentSettings {
    AgentKind kind = AgentKind::acsa;
    std::vector<int> hidden{500, 1000, 500};  // DDQN, and ACSA critic/actor unless overridden
    std::vector<int> critic_hidden;
    std::vector<int> actor_hidden;
    double epsilon = 0.9;
    double epsilon_decay = 0.9995;
    double epsilon_min = 0.01;
    double lr = 1e-4;
    double actor_lr = -1.0;
    double tau = 0.01;
    int batch_n = 32;
    std::size_t buffer_capacity = 10000;
    int warmup = 0;  // transitions before training starts (at least batch_n)
    int target_sync_period = 100;
    std::int64_t action_cap = 65536;
    OptimizerConfig optimizer;
    bool store_discretized = false;
};

struct RunSettings {
    int episodes = 1;
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";
    int checkpoint_every = 0;  // episodes; 0 = final checkpoint only
    int threads = 0;           // 0 = one per seed, capped by hardware
    int oracle_threads = 1;
    bool redeploy_per_episode = true;
    int snapshot_episodes = 1;  // eval episodes per seed written to allocations.csv
};

struct CheckSettings {
    AgentKind baseline = AgentKind::full_reuse;
    int episodes = 100;
};

struct ExperimentConfig {
    EnvOptions env;
    AgentSettings agent;
    RunSettings run;
    CheckSettings check;

    void validate();
};

// Flat INI-style text: [network], [channel], [rates], [episode], [agent],
// [run], [check] sections of key = value lines, ';' or '#' comments.
// Unknown sections or keys throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& config);

DdqnConfig make_ddqn_config(const ExperimentConfig& config);
AcsaConfig make_acsa_config(const ExperimentConfig& config);

// A decision maker plugged into the rollout loop.
class Controller {
public:
    virtual ~Controller() = default;
    virtual AgentKind kind() const = 0;
    // explore = false gives the greedy/evaluation behaviour.
    virtual Allocation act(const Observation& obs, const IabEnv& env, Rng& rng, bool explore) = 0;
    // Learning hook after each training step; returns the loss or NaN.
    virtual double observe(const Observation& s, double reward, const Observation& s_next, Rng& rng) {
        (void)s, (void)reward, (void)s_next, (void)rng;
        return std::numeric_limits<double>::quiet_NaN();
    }
    virtual void end_episode() {}
    virtual double epsilon() const { return std::numeric_limits<double>::quiet_NaN(); }
    virtual void save(std::ostream& os) const;
    virtual void load(std::istream& is);
};

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config, std::uint64_t seed);

// Checkpoint files hold every parameter set of a learning agent.
void save_checkpoint(const std::filesystem::path& path, const Controller& controller);
void load_checkpoint(const std::filesystem::path& path, Controller& controller);

struct MetricRow {
    std::uint64_t seed = 0;
    int episode = 0;
    int step = 0;
    double reward = 0.0;
    Eigen::VectorXd rates;
    Eigen::VectorXd qos;
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    double loss = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;  // seconds since the seed's run started
};

constexpr const char* kMetricsSchema = "# schema: iabsa-metrics/1";
constexpr const char* kSummarySchema = "# schema: iabsa-summary/1";
constexpr const char* kAllocationSchema = "# schema: iabsa-allocations/1";

// Deterministic columns only; wall time goes to a separate timing file.
void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows, int L);
void write_timing_csv(std::ostream& os, const std::vector<MetricRow>& rows);

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<MetricRow> rows;
    std::unique_ptr<Controller> controller;
};

// Trains one seed in memory. `episodes` overrides config.run.episodes when > 0.
SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed, int episodes = 0);

// Trains every configured seed (in parallel), writes metrics.csv, timing.csv
// and checkpoint_seed<S>.txt into output_dir. Returns the metrics path.
std::filesystem::path run_train(const ExperimentConfig& config);

struct Summary {
    AgentKind agent = AgentKind::full_reuse;
    int seeds = 0;
    int episodes = 0;
    long steps = 0;
    double mean_reward = 0.0;
    Eigen::VectorXd mean_rates;
    double qos_ratio = 0.0;
    std::vector<double> step_rewards;  // seed-major, then episode, then step
};

// Greedy rollouts over episodes with seeds derived from the evaluation
// stream, so equal (seed, episodes) give every policy the same channels.
Summary evaluate(const ExperimentConfig& config, Controller& controller, std::uint64_t seed, int episodes,
                 std::ostream* allocations = nullptr);
Summary merge_summaries(const std::vector<Summary>& parts);

using ControllerFactory = std::function<std::unique_ptr<Controller>(std::uint64_t seed)>;

// Factory for the configured agent; learned agents load `checkpoint` (a file,
// or a directory holding checkpoint_seed<S>.txt).
ControllerFactory controller_factory(const ExperimentConfig& config,
                                     const std::optional<std::filesystem::path>& checkpoint);

// Evaluates every configured seed, writes summary.csv and allocations.csv
// into output_dir.
Summary run_eval(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint);

void write_summary_csv(std::ostream& os, const std::vector<Summary>& summaries);

struct GainReport {
    double gain = 0.0;           // (agent - fixed) / |fixed|, positive means the agent is better
    double literal_ratio = 0.0;  // (agent - fixed) / fixed
    double agent_mean = 0.0;
    double fixed_mean = 0.0;
};

// Gain of sum-log-rate means. Throws ShapeError when the runs differ in
// shape, std::domain_error when the fixed mean is zero.
GainReport compute_gain(const Summary& agent, const Summary& fixed);

struct ImprovementResult {
    bool passed = false;   // mean(V_improved) >= mean(V_baseline) - 2 stderr
    bool strict = false;   // mean(V_improved) > mean(V_baseline) + 2 stderr
    double mean_improved = 0.0;
    double mean_baseline = 0.0;
    double stderr_diff = 0.0;  // standard error of the paired difference
    std::vector<double> v_improved;
    std::vector<double> v_baseline;
};

// Monte-Carlo discounted returns of both policies on common episodes
// (check.episodes of episode.horizon steps, gamma from the episode config).
ImprovementResult policy_improvement_check(const ExperimentConfig& config, const ControllerFactory& baseline,
                                           const ControllerFactory& improved);

// Discounted return sum_t gamma^t r_t.
double discounted_return(const std::vector<double>& rewards, double gamma);

}  // namespace iabsa
