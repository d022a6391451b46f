#include "iabsa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "iabsa/baselines.hpp"

namespace iabsa {

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696e;   // "train"
constexpr std::uint64_t kEvalStream = 0x6576616c;      // "eval"
constexpr std::uint64_t kCheckStream = 0x636865636b;   // "check"
constexpr std::uint64_t kAgentStream = 0x6167656e74;   // "agent"
constexpr std::uint64_t kPolicyStream = 0x706f6c;      // "pol"

constexpr const char* kCheckpointMagic = "iabsa-checkpoint";
constexpr int kCheckpointVersion = 1;

// Stateless policies: fixed allocations, random draws, per-step enumeration.
class StaticController : public Controller {
public:
    StaticController(AgentKind kind, Allocation alloc) : kind_(kind), alloc_(std::move(alloc)) {}
    AgentKind kind() const override { return kind_; }
    Allocation act(const Observation&, const IabEnv&, Rng&, bool) override { return alloc_; }

private:
    AgentKind kind_;
    Allocation alloc_;
};

class RandomController : public Controller {
public:
    AgentKind kind() const override { return AgentKind::random; }
    Allocation act(const Observation&, const IabEnv& env, Rng& rng, bool) override {
        return random_feasible(env.L(), env.M(), rng);
    }
};

class OracleController : public Controller {
public:
    OracleController(std::int64_t cap, int threads) : options_{cap, threads, false} {}
    AgentKind kind() const override { return AgentKind::oracle; }
    Allocation act(const Observation&, const IabEnv& env, Rng&, bool) override {
        return exhaustive_oracle(env.channel(), env.options().channel, env.options().rates, env.L(), env.M(),
                                 options_)
            .best_alloc;
    }

private:
    OracleOptions options_;
};

class DdqnController : public Controller {
public:
    DdqnController(const ExperimentConfig& config, std::uint64_t seed)
        : agent_(make_ddqn_config(config), seed),
          L_(config.env.network.L),
          M_(config.env.network.M),
          warmup_(std::max(config.agent.warmup, config.agent.batch_n)) {}

    AgentKind kind() const override { return AgentKind::ddqn; }

    Allocation act(const Observation& obs, const IabEnv&, Rng& rng, bool explore) override {
        last_ = explore ? agent_.select_action(obs, rng) : agent_.greedy_action(obs);
        return encode_action(last_, L_, M_);
    }

    double observe(const Observation& s, double reward, const Observation& s_next, Rng& rng) override {
        agent_.remember({s, last_, reward, s_next});
        if (agent_.buffer().size() < static_cast<std::size_t>(warmup_))
            return std::numeric_limits<double>::quiet_NaN();
        return agent_.train_step(rng);
    }

    void end_episode() override { agent_.end_episode(); }
    double epsilon() const override { return agent_.epsilon(); }

    void save(std::ostream& os) const override {
        os << "net q_train\n";
        save_mlp(os, agent_.q_train());
        os << "net q_target\n";
        save_mlp(os, agent_.q_target());
        os << "epsilon " << format_double(agent_.epsilon()) << '\n';
    }

    void load(std::istream& is) override;

    DdqnAgent& agent() { return agent_; }

private:
    DdqnAgent agent_;
    int L_;
    int M_;
    int warmup_;
    ActionIndex last_ = 0;
};

class AcsaController : public Controller {
public:
    AcsaController(const ExperimentConfig& config, std::uint64_t seed)
        : agent_(make_acsa_config(config), seed), warmup_(std::max(config.agent.warmup, config.agent.batch_n)) {}

    AgentKind kind() const override { return AgentKind::acsa; }

    Allocation act(const Observation& obs, const IabEnv&, Rng& rng, bool explore) override {
        last_ = explore ? agent_.act(obs, rng) : agent_.greedy(obs);
        return last_.alloc;
    }

    double observe(const Observation& s, double reward, const Observation& s_next, Rng& rng) override {
        agent_.remember(s, last_, reward, s_next);
        double loss = std::numeric_limits<double>::quiet_NaN();
        if (agent_.buffer().size() >= static_cast<std::size_t>(warmup_)) loss = agent_.train_step(rng);
        agent_.soft_sync();
        return loss;
    }

    void end_episode() override { agent_.end_episode(); }
    double epsilon() const override { return agent_.epsilon(); }

    void save(std::ostream& os) const override {
        os << "net actor\n";
        save_mlp(os, agent_.actor());
        os << "net critic\n";
        save_mlp(os, agent_.critic());
        os << "net actor_target\n";
        save_mlp(os, agent_.actor_target());
        os << "net critic_target\n";
        save_mlp(os, agent_.critic_target());
        os << "epsilon " << format_double(agent_.epsilon()) << '\n';
    }

    void load(std::istream& is) override;

private:
    AcsaAgent agent_;
    int warmup_;
    AcsaAgent::Decision last_;
};

void read_net(std::istream& is, const std::string& name, MlpParams& into) {
    std::string tag, got;
    if (!(is >> tag >> got) || tag != "net" || got != name)
        throw ConfigError("checkpoint: expected network '" + name + "'");
    MlpParams loaded = load_mlp(is);
    if (!loaded.same_shape(into))
        throw ConfigError("checkpoint: incompatible shapes for network '" + name + "'");
    for (std::size_t k = 0; k < loaded.layers.size(); ++k)
        if (loaded.layers[k].weight.rows() != into.layers[k].weight.rows() ||
            loaded.layers[k].weight.cols() != into.layers[k].weight.cols())
            throw ConfigError("checkpoint: incompatible shapes for network '" + name + "'");
    into = std::move(loaded);
}

double read_epsilon(std::istream& is) {
    std::string tag, value;
    if (!(is >> tag >> value) || tag != "epsilon") throw ConfigError("checkpoint: missing epsilon");
    return std::stod(value);
}

void DdqnController::load(std::istream& is) {
    read_net(is, "q_train", agent_.q_train());
    read_net(is, "q_target", agent_.q_target());
    agent_.set_epsilon(read_epsilon(is));
}

void AcsaController::load(std::istream& is) {
    read_net(is, "actor", agent_.actor());
    read_net(is, "critic", agent_.critic());
    read_net(is, "actor_target", agent_.actor_target());
    read_net(is, "critic_target", agent_.critic_target());
    agent_.set_epsilon(read_epsilon(is));
}

std::string nan_blank(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::filesystem::path seed_checkpoint(const std::filesystem::path& dir, std::uint64_t seed) {
    return dir / ("checkpoint_seed" + std::to_string(seed) + ".txt");
}

int worker_count(const RunSettings& run) {
    const int hw = std::max(1u, std::thread::hardware_concurrency());
    const int wanted = run.threads > 0 ? run.threads : hw;
    return std::clamp(wanted, 1, static_cast<int>(run.seeds.size()));
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; results land in
// caller-owned slots so the merge order never depends on scheduling.
template <class Fn>
void parallel_for(int n, int workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void write_allocation_rows(std::ostream& os, std::uint64_t seed, int episode, int t, const Allocation& a) {
    const int L = a.L();
    auto receiver = [L](int f) { return f == 0 ? std::string("u0") : "b" + std::to_string(f); };
    for (int m = 0; m < a.M(); ++m) {
        int f = 0;
        a.x.col(m).maxCoeff(&f);
        os << seed << ',' << episode << ',' << t << ",mbs," << m << ',' << receiver(f) << '\n';
    }
    for (int l = 1; l <= L; ++l)
        for (int m = 0; m < a.M(); ++m)
            os << seed << ',' << episode << ',' << t << ",b" << l << ',' << m << ','
               << (a.z(l - 1, m) ? "u" + std::to_string(l) : std::string("off")) << '\n';
}

}  // namespace

const char* agent_name(AgentKind kind) {
    switch (kind) {
        case AgentKind::ddqn: return "ddqn";
        case AgentKind::acsa: return "acsa";
        case AgentKind::full_reuse: return "full_reuse";
        case AgentKind::fixed_orthogonal: return "fixed_orthogonal";
        case AgentKind::oracle: return "oracle";
        case AgentKind::random: return "random";
    }
    return "unknown";
}

AgentKind parse_agent_kind(const std::string& name) {
    for (AgentKind k : {AgentKind::ddqn, AgentKind::acsa, AgentKind::full_reuse, AgentKind::fixed_orthogonal,
                        AgentKind::oracle, AgentKind::random})
        if (name == agent_name(k)) return k;
    throw ConfigError("unknown agent kind '" + name + "'");
}

bool is_learning(AgentKind kind) { return kind == AgentKind::ddqn || kind == AgentKind::acsa; }

void Controller::save(std::ostream&) const {}
void Controller::load(std::istream&) {}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& config, std::uint64_t seed) {
    const int L = config.env.network.L;
    const int M = config.env.network.M;
    const std::uint64_t agent_seed = derive_seed(seed, kAgentStream);
    switch (config.agent.kind) {
        case AgentKind::ddqn: return std::make_unique<DdqnController>(config, agent_seed);
        case AgentKind::acsa: return std::make_unique<AcsaController>(config, agent_seed);
        case AgentKind::full_reuse: return std::make_unique<StaticController>(AgentKind::full_reuse, full_reuse(L, M));
        case AgentKind::fixed_orthogonal:
            return std::make_unique<StaticController>(AgentKind::fixed_orthogonal, fixed_orthogonal(L, M));
        case AgentKind::oracle:
            return std::make_unique<OracleController>(config.agent.action_cap, config.run.oracle_threads);
        case AgentKind::random: return std::make_unique<RandomController>();
    }
    throw ConfigError("unsupported agent kind");
}

void save_checkpoint(const std::filesystem::path& path, const Controller& controller) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write checkpoint " + path.string());
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << "agent " << agent_name(controller.kind()) << '\n';
    controller.save(os);
}

void load_checkpoint(const std::filesystem::path& path, Controller& controller) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open checkpoint " + path.string());
    std::string magic, tag, kind;
    int version = 0;
    if (!(is >> magic >> version) || magic != kCheckpointMagic || version != kCheckpointVersion)
        throw ConfigError("checkpoint: bad header in " + path.string());
    if (!(is >> tag >> kind) || tag != "agent" || kind != agent_name(controller.kind()))
        throw ConfigError("checkpoint: agent kind mismatch in " + path.string());
    controller.load(is);
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricRow>& rows, int L) {
    os << kMetricsSchema << '\n';
    os << "seed,episode,step,reward";
    for (int j = 0; j <= L; ++j) os << ",rate_" << j;
    for (int j = 0; j <= L; ++j) os << ",qos_" << j;
    os << ",epsilon,loss\n";
    for (const auto& r : rows) {
        os << r.seed << ',' << r.episode << ',' << r.step << ',' << format_double(r.reward);
        for (double v : r.rates) os << ',' << format_double(v);
        for (double v : r.qos) os << ',' << static_cast<int>(v);
        os << ',' << nan_blank(r.epsilon) << ',' << nan_blank(r.loss) << '\n';
    }
}

void write_timing_csv(std::ostream& os, const std::vector<MetricRow>& rows) {
    os << "seed,episode,step,wall_time\n";
    for (const auto& r : rows)
        os << r.seed << ',' << r.episode << ',' << r.step << ',' << format_double(r.wall_time) << '\n';
}

SeedRun train_seed(const ExperimentConfig& config, std::uint64_t seed, int episodes) {
    if (episodes <= 0) episodes = config.run.episodes;
    SeedRun run;
    run.seed = seed;
    run.controller = make_controller(config, seed);
    IabEnv env(config.env);
    Rng rng = make_rng(seed, kPolicyStream);
    const int T = config.env.episode.horizon;
    run.rows.reserve(static_cast<std::size_t>(episodes) * T);

    const auto start = std::chrono::steady_clock::now();
    Layout persistent;
    for (int ep = 1; ep <= episodes; ++ep) {
        const std::uint64_t ep_seed = derive_seed(seed, kTrainStream, ep);
        Observation obs = (config.run.redeploy_per_episode || ep == 1) ? env.reset(ep_seed)
                                                                       : env.reset(ep_seed, persistent);
        if (ep == 1) persistent = env.layout();
        for (int t = 1; t <= T; ++t) {
            const double eps = run.controller->epsilon();
            const Allocation alloc = run.controller->act(obs, env, rng, true);
            StepResult res = env.step(alloc);
            const double loss = run.controller->observe(obs, res.reward, res.obs, rng);
            MetricRow row;
            row.seed = seed;
            row.episode = ep;
            row.step = t;
            row.reward = res.reward;
            row.rates = res.rates.rates;
            row.qos = res.obs;
            row.epsilon = eps;
            row.loss = loss;
            row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            run.rows.push_back(std::move(row));
            obs = std::move(res.obs);
        }
        run.controller->end_episode();
        if (config.run.checkpoint_every > 0 && ep % config.run.checkpoint_every == 0 &&
            is_learning(config.agent.kind)) {
            std::filesystem::create_directories(config.run.output_dir);
            save_checkpoint(std::filesystem::path(config.run.output_dir) /
                                ("checkpoint_seed" + std::to_string(seed) + "_ep" + std::to_string(ep) + ".txt"),
                            *run.controller);
        }
    }
    return run;
}

std::filesystem::path run_train(const ExperimentConfig& config) {
    const std::filesystem::path out(config.run.output_dir);
    std::filesystem::create_directories(out);
    const int n = static_cast<int>(config.run.seeds.size());
    std::vector<SeedRun> runs(n);
    parallel_for(n, worker_count(config.run), [&](int i) { runs[i] = train_seed(config, config.run.seeds[i]); });

    std::vector<MetricRow> rows;
    for (auto& r : runs) {
        rows.insert(rows.end(), std::make_move_iterator(r.rows.begin()), std::make_move_iterator(r.rows.end()));
        if (is_learning(config.agent.kind)) save_checkpoint(seed_checkpoint(out, r.seed), *r.controller);
    }
    const auto metrics = out / "metrics.csv";
    {
        std::ofstream os(metrics);
        write_metrics_csv(os, rows, config.env.network.L);
    }
    {
        std::ofstream os(out / "timing.csv");
        write_timing_csv(os, rows);
    }
    {
        std::ofstream os(out / "config.ini");
        os << dump_config(config);
    }
    return metrics;
}

Summary evaluate(const ExperimentConfig& config, Controller& controller, std::uint64_t seed, int episodes,
                 std::ostream* allocations) {
    IabEnv env(config.env);
    Rng rng = make_rng(seed, kPolicyStream ^ kEvalStream);
    const int T = config.env.episode.horizon;
    const int L = env.L();

    Summary s;
    s.agent = controller.kind();
    s.seeds = 1;
    s.episodes = episodes;
    s.mean_rates = Eigen::VectorXd::Zero(1 + L);
    double qos_hits = 0.0;
    Layout persistent;
    for (int ep = 1; ep <= episodes; ++ep) {
        const std::uint64_t ep_seed = derive_seed(seed, kEvalStream, ep);
        Observation obs = (config.run.redeploy_per_episode || ep == 1) ? env.reset(ep_seed)
                                                                       : env.reset(ep_seed, persistent);
        if (ep == 1) persistent = env.layout();
        for (int t = 1; t <= T; ++t) {
            const Allocation alloc = controller.act(obs, env, rng, false);
            if (allocations && ep <= config.run.snapshot_episodes) write_allocation_rows(*allocations, seed, ep, t, alloc);
            StepResult res = env.step(alloc);
            s.step_rewards.push_back(res.reward);
            s.mean_rates += res.rates.rates;
            qos_hits += res.obs.sum();
            obs = std::move(res.obs);
        }
    }
    s.steps = static_cast<long>(s.step_rewards.size());
    s.mean_reward = std::accumulate(s.step_rewards.begin(), s.step_rewards.end(), 0.0) / s.steps;
    s.mean_rates /= static_cast<double>(s.steps);
    s.qos_ratio = qos_hits / (static_cast<double>(s.steps) * (1 + L));
    return s;
}

Summary merge_summaries(const std::vector<Summary>& parts) {
    if (parts.empty()) throw std::invalid_argument("merge_summaries: nothing to merge");
    Summary s;
    s.agent = parts.front().agent;
    s.episodes = parts.front().episodes;
    s.mean_rates = Eigen::VectorXd::Zero(parts.front().mean_rates.size());
    double qos = 0.0;
    for (const auto& p : parts) {
        s.seeds += p.seeds;
        s.steps += p.steps;
        s.step_rewards.insert(s.step_rewards.end(), p.step_rewards.begin(), p.step_rewards.end());
        s.mean_rates += p.mean_rates * static_cast<double>(p.steps);
        qos += p.qos_ratio * static_cast<double>(p.steps);
    }
    s.mean_reward = std::accumulate(s.step_rewards.begin(), s.step_rewards.end(), 0.0) / s.steps;
    s.mean_rates /= static_cast<double>(s.steps);
    s.qos_ratio = qos / static_cast<double>(s.steps);
    return s;
}

ControllerFactory controller_factory(const ExperimentConfig& config,
                                     const std::optional<std::filesystem::path>& checkpoint) {
    if (is_learning(config.agent.kind) && !checkpoint)
        throw ConfigError(std::string("agent '") + agent_name(config.agent.kind) + "' needs --checkpoint");
    return [config, checkpoint](std::uint64_t seed) {
        auto c = make_controller(config, seed);
        if (is_learning(config.agent.kind)) {
            const auto path =
                std::filesystem::is_directory(*checkpoint) ? seed_checkpoint(*checkpoint, seed) : *checkpoint;
            load_checkpoint(path, *c);
        }
        return c;
    };
}

void write_summary_csv(std::ostream& os, const std::vector<Summary>& summaries) {
    os << kSummarySchema << '\n';
    const auto width = summaries.empty() ? 0 : summaries.front().mean_rates.size();
    os << "agent,seeds,episodes,steps,mean_reward,qos_ratio";
    for (Eigen::Index j = 0; j < width; ++j) os << ",mean_rate_" << j;
    os << '\n';
    for (const auto& s : summaries) {
        os << agent_name(s.agent) << ',' << s.seeds << ',' << s.episodes << ',' << s.steps << ','
           << format_double(s.mean_reward) << ',' << format_double(s.qos_ratio);
        for (double v : s.mean_rates) os << ',' << format_double(v);
        os << '\n';
    }
}

Summary run_eval(const ExperimentConfig& config, const std::optional<std::filesystem::path>& checkpoint) {
    const auto factory = controller_factory(config, checkpoint);
    const std::filesystem::path out(config.run.output_dir);
    std::filesystem::create_directories(out);
    const int n = static_cast<int>(config.run.seeds.size());
    std::vector<Summary> parts(n);
    std::vector<std::ostringstream> snapshots(n);
    parallel_for(n, worker_count(config.run), [&](int i) {
        auto c = factory(config.run.seeds[i]);
        parts[i] = evaluate(config, *c, config.run.seeds[i], config.run.episodes, &snapshots[i]);
    });
    Summary total = merge_summaries(parts);
    {
        std::ofstream os(out / "summary.csv");
        write_summary_csv(os, {total});
    }
    {
        std::ofstream os(out / "allocations.csv");
        os << kAllocationSchema << '\n' << "seed,episode,t,bs,subchannel,assignee\n";
        for (const auto& s : snapshots) os << s.str();
    }
    return total;
}

GainReport compute_gain(const Summary& agent, const Summary& fixed) {
    if (agent.seeds != fixed.seeds || agent.episodes != fixed.episodes || agent.steps != fixed.steps)
        throw ShapeError("compute_gain: summaries cover different runs");
    if (fixed.mean_reward == 0.0) throw std::domain_error("compute_gain: fixed policy mean is zero");
    GainReport g;
    g.agent_mean = agent.mean_reward;
    g.fixed_mean = fixed.mean_reward;
    const double diff = agent.mean_reward - fixed.mean_reward;
    g.gain = diff / std::abs(fixed.mean_reward);
    g.literal_ratio = diff / fixed.mean_reward;
    return g;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
    double v = 0.0;
    double w = 1.0;
    for (double r : rewards) {
        v += w * r;
        w *= gamma;
    }
    return v;
}

ImprovementResult policy_improvement_check(const ExperimentConfig& config, const ControllerFactory& baseline,
                                           const ControllerFactory& improved) {
    const std::uint64_t seed = config.run.seeds.front();
    const int episodes = config.check.episodes;
    const int T = config.env.episode.horizon;
    const double gamma = config.env.episode.gamma;

    auto rollout = [&](Controller& c, int ep) {
        IabEnv env(config.env);
        Rng rng = make_rng(seed, kPolicyStream ^ kCheckStream, ep);
        Observation obs = env.reset(derive_seed(seed, kCheckStream, ep));
        std::vector<double> rewards;
        rewards.reserve(T);
        for (int t = 1; t <= T; ++t) {
            StepResult res = env.step(c.act(obs, env, rng, false));
            rewards.push_back(res.reward);
            obs = std::move(res.obs);
        }
        return discounted_return(rewards, gamma);
    };

    ImprovementResult out;
    auto base = baseline(seed);
    auto impr = improved(seed);
    for (int ep = 1; ep <= episodes; ++ep) {
        out.v_baseline.push_back(rollout(*base, ep));
        out.v_improved.push_back(rollout(*impr, ep));
    }
    const double n = episodes;
    out.mean_baseline = std::accumulate(out.v_baseline.begin(), out.v_baseline.end(), 0.0) / n;
    out.mean_improved = std::accumulate(out.v_improved.begin(), out.v_improved.end(), 0.0) / n;
    const double mean_diff = out.mean_improved - out.mean_baseline;
    double ss = 0.0;
    for (int i = 0; i < episodes; ++i) {
        const double d = out.v_improved[i] - out.v_baseline[i] - mean_diff;
        ss += d * d;
    }
    out.stderr_diff = std::sqrt(ss / (n - 1) / n);
    out.passed = mean_diff >= -2.0 * out.stderr_diff;
    out.strict = mean_diff > 2.0 * out.stderr_diff;
    return out;
}

}  // namespace iabsa
