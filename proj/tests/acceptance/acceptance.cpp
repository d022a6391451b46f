// Acceptance suite. Each criterion prints one PASS/FAIL line; the exit code
// is nonzero if any selected criterion fails.
//
//   acceptance                 run everything
//   acceptance --only AC-4     run one criterion

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "iabsa/baselines.hpp"
#include "iabsa/harness.hpp"
#include "reference_model.hpp"

using namespace iabsa;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }

private:
    using Clock = std::chrono::steady_clock;
    Clock::time_point start_ = Clock::now();
};

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

// "At least 90% of x" for quantities of either sign.
double ninety_percent_of(double x) { return x - 0.1 * std::abs(x); }

ExperimentConfig small_config(int L, int M) {
    ExperimentConfig c;
    c.env.network.L = L;
    c.env.network.M = M;
    c.agent.optimizer.kind = OptimizerKind::adam;
    c.agent.lr = 1e-3;
    c.agent.hidden = {64, 64};
    c.run.threads = 1;
    return c;
}

const std::vector<std::uint64_t> kFiveSeeds{1, 2, 3, 4, 5};

// AC-1 ---------------------------------------------------------------------

Outcome ac1() {
    Stopwatch sw;
    ExperimentConfig cfg = small_config(2, 2);
    cfg.env.episode.horizon = 100;
    cfg.validate();
    IabEnv env(cfg.env);
    Rng rng = make_rng(2024, 1);
    double worst = 0.0;
    int n = 0;
    for (std::uint64_t ep = 0; n < 1000; ++ep) {
        env.reset(derive_seed(11, 1, ep));
        for (int t = 0; t < 100 && n < 1000; ++t, ++n) {
            const Allocation a = random_feasible(2, 2, rng);
            const double expected = ref::utility(ref::from_gains(env.channel(), cfg.env.channel), a);
            const double got = env.step(a).reward;
            worst = std::max(worst, ref::rel_err(got, expected));
        }
    }
    const double secs = sw.seconds();
    return {worst < 1e-10 && secs < 10.0,
            "allocations=1000 max_rel_err=" + fmt(worst) + " runtime_s=" + fmt(secs, 3)};
}

// AC-2 ---------------------------------------------------------------------

Outcome ac2() {
    const int L = 2, M = 2;
    const long per_source = 100000;
    std::vector<std::string> parts;
    long violations = 0;
    for (AgentKind kind : {AgentKind::ddqn, AgentKind::acsa, AgentKind::full_reuse, AgentKind::fixed_orthogonal,
                           AgentKind::random, AgentKind::oracle}) {
        ExperimentConfig cfg = small_config(L, M);
        cfg.agent.kind = kind;
        cfg.agent.hidden = {32, 32};
        cfg.agent.epsilon = 0.5;
        cfg.agent.epsilon_decay = 0.99;
        cfg.env.episode.horizon = 100;
        cfg.validate();
        IabEnv env(cfg.env);
        auto controller = make_controller(cfg, 3);
        Rng rng = make_rng(3, 2);
        long bad = 0;
        Observation obs;
        for (long k = 0; k < per_source; ++k) {
            if (k % 100 == 0) {
                if (k > 0) controller->end_episode();
                obs = env.reset(derive_seed(3, 2, k / 100));
            }
            // Alternate exploring and greedy draws so both code paths are covered.
            const Allocation a = controller->act(obs, env, rng, k % 2 == 0);
            if (validate_allocation(a, L, M)) {
                ++bad;
                env.reset(derive_seed(3, 2, k));
                continue;
            }
            const StepResult res = env.step(a);
            if (is_learning(kind) && k % 10 == 0) controller->observe(obs, res.reward, res.obs, rng);
            obs = res.obs;
        }
        violations += bad;
        parts.push_back(std::string(agent_name(kind)) + "=" + std::to_string(bad));
    }
    std::string detail = "actions_per_source=" + std::to_string(per_source) + " violations:";
    for (const auto& p : parts) detail += " " + p;
    return {violations == 0, detail};
}

// AC-3 ---------------------------------------------------------------------

double grad_rel_err(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / scale;
}

Outcome ac3() {
    Stopwatch sw;
    Rng rng = make_rng(33);
    std::uniform_int_distribution<int> width(1, 64), depth(0, 3), pick_l(1, 3), pick_m(1, 4), batch_size(1, 8);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-6;
    double worst_net = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        const bool structured = probe % 2 == 1;
        std::vector<int> sizes{width(rng)};
        const int hidden = depth(rng);
        for (int k = 0; k < hidden; ++k) sizes.push_back(width(rng));
        OutputHead head = OutputHead::linear();
        if (structured) {
            head = OutputHead::structured(pick_l(rng), pick_m(rng));
            while (head.width() > 64) head.M -= 1;
            sizes.push_back(head.width());
        } else {
            sizes.push_back(width(rng));
        }
        const MlpParams net = init_mlp(sizes, head, rng);
        const int n = batch_size(rng);
        Eigen::MatrixXd x(sizes.front(), n), g(sizes.back(), n);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        auto loss = [&](const MlpParams& p, const Eigen::MatrixXd& in) { return (forward(p, in).array() * g.array()).sum(); };

        ForwardCache cache;
        forward(net, x, &cache);
        const Gradients grads = backward(net, cache, g);

        // One random parameter and one random input coordinate per probe.
        MlpParams flat_grads = grads.params;
        std::vector<double*> values, gvalues;
        MlpParams plus = net;
        plus.for_each_value([&](double& v) { values.push_back(&v); });
        flat_grads.for_each_value([&](double& v) { gvalues.push_back(&v); });
        const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, values.size() - 1)(rng);
        const double orig = *values[idx];
        *values[idx] = orig + h;
        const double fp = loss(plus, x);
        *values[idx] = orig - h;
        const double fm = loss(plus, x);
        worst_net = std::max(worst_net, grad_rel_err(*gvalues[idx], (fp - fm) / (2 * h)));

        const Eigen::Index xi = std::uniform_int_distribution<Eigen::Index>(0, x.size() - 1)(rng);
        Eigen::MatrixXd xp = x, xm = x;
        xp.data()[xi] += h;
        xm.data()[xi] -= h;
        worst_net = std::max(worst_net, grad_rel_err(grads.input.data()[xi], (loss(net, xp) - loss(net, xm)) / (2 * h)));
    }

    // Policy gradient of the batch-mean critic value with respect to the actor.
    AcsaConfig ac;
    ac.L = 2;
    ac.M = 2;
    ac.critic_hidden = {32, 32};
    ac.actor_hidden = {32, 32};
    AcsaAgent agent(ac, 34);
    std::vector<RelaxedTransition> batch;
    for (int k = 0; k < 16; ++k) {
        Observation s(ac.obs_dim());
        // Generic real states keep every ReLU away from its kink.
        for (int i = 0; i < s.size(); ++i) s(i) = unit(rng);
        RelaxedAction a = relax(random_feasible(ac.L, ac.M, rng));
        batch.push_back({s, a, normal(rng), s});
    }
    MlpParams pg = agent.policy_gradient(batch);
    std::vector<double*> actor_values, pg_values;
    agent.actor().for_each_value([&](double& v) { actor_values.push_back(&v); });
    pg.for_each_value([&](double& v) { pg_values.push_back(&v); });
    double worst_pg = 0.0;
    for (int probe = 0; probe < 100; ++probe) {
        const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, actor_values.size() - 1)(rng);
        const double orig = *actor_values[idx];
        *actor_values[idx] = orig + h;
        const double fp = agent.mean_policy_value(batch);
        *actor_values[idx] = orig - h;
        const double fm = agent.mean_policy_value(batch);
        *actor_values[idx] = orig;
        worst_pg = std::max(worst_pg, grad_rel_err(*pg_values[idx], (fp - fm) / (2 * h)));
    }
    const double secs = sw.seconds();
    return {worst_net < 1e-4 && worst_pg < 1e-3 && secs < 60.0,
            "net_max_rel_err=" + fmt(worst_net) + " policy_grad_max_rel_err=" + fmt(worst_pg) +
                " runtime_s=" + fmt(secs, 3)};
}

// AC-4 ---------------------------------------------------------------------

struct FrozenResult {
    double acsa = 0.0;
    double oracle = 0.0;
    double best_baseline = 0.0;
};

FrozenResult frozen_instance_run(std::uint64_t seed) {
    ExperimentConfig cfg = small_config(2, 2);
    cfg.agent.kind = AgentKind::acsa;
    cfg.agent.hidden = {64, 64};
    cfg.agent.epsilon = 0.9;
    cfg.agent.epsilon_decay = 0.9;
    cfg.agent.epsilon_min = 0.01;
    cfg.env.freeze_channel = true;
    cfg.env.episode.horizon = 100;
    cfg.validate();
    const int episodes = 60;

    const std::uint64_t instance = derive_seed(seed, 4);
    IabEnv env(cfg.env);
    auto controller = make_controller(cfg, seed);
    Rng rng = make_rng(seed, 4, 1);
    for (int ep = 0; ep < episodes; ++ep) {
        Observation obs = env.reset(instance);
        for (int t = 0; t < cfg.env.episode.horizon; ++t) {
            const Allocation a = controller->act(obs, env, rng, true);
            StepResult res = env.step(a);
            controller->observe(obs, res.reward, res.obs, rng);
            obs = std::move(res.obs);
        }
        controller->end_episode();
    }

    ExperimentConfig eval_cfg = cfg;
    eval_cfg.env.episode.horizon = 200;
    eval_cfg.validate();
    IabEnv eval_env(eval_cfg.env);
    Observation obs = eval_env.reset(instance);
    double total = 0.0;
    for (int t = 0; t < 200; ++t) {
        StepResult res = eval_env.step(controller->act(obs, eval_env, rng, false));
        total += res.reward;
        obs = std::move(res.obs);
    }

    FrozenResult out;
    out.acsa = total / 200.0;
    // The channel never moves, so the oracle and fixed baselines earn the
    // same reward on every one of the 200 steps.
    out.oracle = exhaustive_oracle(eval_env.channel(), cfg.env.channel, cfg.env.rates, 2, 2).best_utility;
    out.best_baseline = std::max(eval_env.evaluate(full_reuse(2, 2)), eval_env.evaluate(fixed_orthogonal(2, 2)));
    return out;
}

Outcome ac4() {
    Stopwatch sw;
    std::vector<double> margin_oracle, margin_baseline;
    std::string per_seed;
    for (std::uint64_t s : kFiveSeeds) {
        const FrozenResult r = frozen_instance_run(s);
        margin_oracle.push_back(r.acsa - ninety_percent_of(r.oracle));
        margin_baseline.push_back(r.acsa - r.best_baseline);
        per_seed += " [seed " + std::to_string(s) + " acsa=" + fmt(r.acsa) + " oracle=" + fmt(r.oracle) +
                    " best_baseline=" + fmt(r.best_baseline) + "]";
    }
    const double mo = median(margin_oracle), mb = median(margin_baseline);
    const double secs = sw.seconds();
    return {mo >= 0.0 && mb > 0.0 && secs < 900.0,
            "median(acsa - 0.9*oracle)=" + fmt(mo) + " median(acsa - best_baseline)=" + fmt(mb) +
                " runtime_s=" + fmt(secs, 3) + per_seed};
}

// AC-5 ---------------------------------------------------------------------

Outcome ac5() {
    Stopwatch sw;
    ExperimentConfig cfg = small_config(2, 2);
    cfg.agent.kind = AgentKind::oracle;
    cfg.env.episode.horizon = 100;
    cfg.env.episode.gamma = 0.9;
    cfg.check.baseline = AgentKind::full_reuse;
    cfg.check.episodes = 100;
    cfg.run.seeds = {5};
    cfg.validate();
    ExperimentConfig base = cfg;
    base.agent.kind = AgentKind::full_reuse;
    base.validate();
    const ImprovementResult r = policy_improvement_check(base, controller_factory(base, std::nullopt),
                                                         controller_factory(cfg, std::nullopt));
    const double secs = sw.seconds();
    return {r.passed && r.strict && secs < 300.0,
            "mean_V_oracle=" + fmt(r.mean_improved) + " mean_V_full_reuse=" + fmt(r.mean_baseline) +
                " stderr=" + fmt(r.stderr_diff) + " runtime_s=" + fmt(secs, 3)};
}

// AC-6 ---------------------------------------------------------------------

std::vector<double> episode_means(const SeedRun& run) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : run.rows) {
        acc[r.episode].first += r.reward;
        acc[r.episode].second += 1;
    }
    std::vector<double> out;
    for (const auto& [ep, v] : acc) out.push_back(v.first / v.second);
    return out;
}

std::vector<double> moving_average(const std::vector<double>& v, int window) {
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum += v[i];
        if (i >= static_cast<std::size_t>(window)) sum -= v[i - window];
        out[i] = sum / std::min<std::size_t>(i + 1, window);
    }
    return out;
}

// First episode (1-based) whose moving average reaches 90% of the plateau.
int episodes_to_plateau(const std::vector<double>& ma) {
    const double target = ninety_percent_of(ma.back());
    for (std::size_t i = 0; i < ma.size(); ++i)
        if (ma[i] >= target) return static_cast<int>(i) + 1;
    return static_cast<int>(ma.size());
}

Outcome ac6() {
    Stopwatch sw;
    const int episodes = 200;
    ExperimentConfig base = small_config(2, 3);
    base.agent.hidden = {32, 64, 32};
    base.agent.epsilon = 0.9;
    base.agent.epsilon_decay = 0.97;
    base.agent.epsilon_min = 0.01;
    base.env.episode.horizon = 50;
    base.run.episodes = episodes;

    std::map<AgentKind, std::vector<double>> to_plateau;
    bool beats_baseline = true;
    std::string per_seed;
    for (std::uint64_t s : kFiveSeeds) {
        ExperimentConfig fr = base;
        fr.agent.kind = AgentKind::full_reuse;
        fr.validate();
        const double reuse_tail = moving_average(episode_means(train_seed(fr, s)), 20).back();
        per_seed += " [seed " + std::to_string(s) + " full_reuse=" + fmt(reuse_tail);
        for (AgentKind kind : {AgentKind::acsa, AgentKind::ddqn}) {
            ExperimentConfig cfg = base;
            cfg.agent.kind = kind;
            cfg.validate();
            const auto ma = moving_average(episode_means(train_seed(cfg, s)), 20);
            beats_baseline = beats_baseline && ma.back() > reuse_tail;
            to_plateau[kind].push_back(episodes_to_plateau(ma));
            per_seed += std::string(" ") + agent_name(kind) + "=" + fmt(ma.back()) +
                        "@" + std::to_string(episodes_to_plateau(ma));
        }
        per_seed += "]";
    }
    const double acsa = median(to_plateau[AgentKind::acsa]);
    const double ddqn = median(to_plateau[AgentKind::ddqn]);
    const double secs = sw.seconds();
    return {beats_baseline && acsa <= ddqn && secs < 1800.0,
            "median_episodes_to_90pct acsa=" + fmt(acsa) + " ddqn=" + fmt(ddqn) +
                " all_beat_full_reuse=" + (beats_baseline ? "yes" : "no") + " runtime_s=" + fmt(secs, 3) + per_seed};
}

// AC-7 ---------------------------------------------------------------------

GainReport gain_at(int L) {
    const int M = 4;
    ExperimentConfig cfg = small_config(L, M);
    cfg.agent.kind = AgentKind::acsa;
    cfg.agent.hidden = {128, 128};
    cfg.agent.epsilon = 0.9;
    cfg.agent.epsilon_decay = 0.98;
    cfg.env.episode.horizon = 50;
    cfg.run.episodes = 300;
    cfg.validate();
    ExperimentConfig fixed = cfg;
    fixed.agent.kind = AgentKind::fixed_orthogonal;
    fixed.validate();

    const int eval_episodes = 10;
    std::vector<Summary> agent_parts, fixed_parts;
    for (std::uint64_t s : kFiveSeeds) {
        SeedRun run = train_seed(cfg, s);
        agent_parts.push_back(evaluate(cfg, *run.controller, s, eval_episodes));
        auto f = make_controller(fixed, s);
        fixed_parts.push_back(evaluate(fixed, *f, s, eval_episodes));
    }
    return compute_gain(merge_summaries(agent_parts), merge_summaries(fixed_parts));
}

Outcome ac7() {
    Stopwatch sw;
    const GainReport g2 = gain_at(2);
    const GainReport g4 = gain_at(4);
    const double secs = sw.seconds();
    return {g4.gain >= g2.gain && g2.gain >= -0.02 && g4.gain >= -0.02 && secs < 2700.0,
            "gain_L2=" + fmt(g2.gain) + " (acsa=" + fmt(g2.agent_mean) + " fixed=" + fmt(g2.fixed_mean) +
                ") gain_L4=" + fmt(g4.gain) + " (acsa=" + fmt(g4.agent_mean) + " fixed=" + fmt(g4.fixed_mean) +
                ") runtime_s=" + fmt(secs, 3)};
}

// AC-8 ---------------------------------------------------------------------

// Deterministic two-state, four-action MDP.
struct TabularMdp {
    static constexpr int S = 2, A = 4;
    int next[S][A] = {{0, 1, 0, 1}, {0, 1, 0, 0}};
    double reward[S][A] = {{1.0, 0.0, 0.5, 0.2}, {0.0, 2.0, -1.0, 1.0}};
    double gamma = 0.9;

    // Value iteration to machine precision.
    std::array<std::array<double, A>, S> optimal_q() const {
        std::array<std::array<double, A>, S> q{};
        for (int it = 0; it < 2000; ++it) {
            auto nq = q;
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) {
                    const auto& row = q[next[s][a]];
                    nq[s][a] = reward[s][a] + gamma * *std::max_element(row.begin(), row.end());
                }
            q = nq;
        }
        return q;
    }
};

Observation one_hot(int s) {
    Observation o = Observation::Zero(TabularMdp::S);
    o(s) = 1.0;
    return o;
}

Outcome ac8() {
    Stopwatch sw;
    const TabularMdp mdp;
    const auto q_star = mdp.optimal_q();

    DdqnConfig c;
    c.obs_dim = TabularMdp::S;
    c.action_count = TabularMdp::A;
    c.hidden = {32, 32};
    c.gamma = mdp.gamma;
    c.lr = 1e-3;
    c.batch_n = 32;
    c.buffer_capacity = 10000;
    c.target_sync_period = 100;
    c.optimizer.kind = OptimizerKind::adam;
    DdqnAgent agent(c, 8);
    Rng rng = make_rng(8, 1);
    std::uniform_int_distribution<int> any_action(0, TabularMdp::A - 1);

    const int steps = 10000;
    int s = 0;
    for (int k = 0; k < steps; ++k) {
        // Uniform behaviour policy; the learned values are off-policy.
        const int a = any_action(rng);
        const int s2 = mdp.next[s][a];
        agent.remember({one_hot(s), a, mdp.reward[s][a], one_hot(s2)});
        if (agent.buffer().size() >= static_cast<std::size_t>(c.batch_n)) agent.train_step(rng);
        s = s2;
    }

    double err = 0.0;
    bool policy_ok = true;
    for (int st = 0; st < TabularMdp::S; ++st) {
        const Eigen::VectorXd q = agent.q_values(one_hot(st));
        for (int a = 0; a < TabularMdp::A; ++a) err = std::max(err, std::abs(q(a) - q_star[st][a]));
        const auto best = std::max_element(q_star[st].begin(), q_star[st].end()) - q_star[st].begin();
        policy_ok = policy_ok && agent.greedy_action(one_hot(st)) == best;
    }
    const double secs = sw.seconds();
    return {err < 0.05 && policy_ok && secs < 60.0,
            "steps=" + std::to_string(steps) + " max_abs_q_err=" + fmt(err) +
                " greedy_policy_optimal=" + (policy_ok ? "yes" : "no") + " runtime_s=" + fmt(secs, 3)};
}

// AC-9 ---------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Outcome ac9() {
    const auto root = std::filesystem::temp_directory_path() / ("iabsa_ac9_" + std::to_string(::getpid()));
    std::filesystem::remove_all(root);
    bool all_equal = true;
    std::string detail;
    for (AgentKind kind : {AgentKind::acsa, AgentKind::ddqn, AgentKind::random, AgentKind::oracle,
                           AgentKind::full_reuse, AgentKind::fixed_orthogonal}) {
        ExperimentConfig cfg = small_config(1, 2);
        cfg.agent.kind = kind;
        cfg.agent.hidden = {16, 16};
        cfg.env.episode.horizon = 20;
        cfg.run.episodes = 3;
        cfg.run.seeds = {1, 2, 3};
        cfg.run.threads = 3;
        std::vector<std::string> files;
        for (int rep = 0; rep < 2; ++rep) {
            cfg.run.output_dir = (root / (std::string(agent_name(kind)) + "_" + std::to_string(rep))).string();
            cfg.validate();
            files.push_back(slurp(run_train(cfg)));
        }
        const bool equal = files[0] == files[1] && !files[0].empty();
        all_equal = all_equal && equal;
        detail += std::string(" ") + agent_name(kind) + "=" + (equal ? "identical" : "DIFFERENT");
    }
    std::filesystem::remove_all(root);
    return {all_equal, "metrics.csv across repeated runs:" + detail};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"AC-1", ac1}, {"AC-2", ac2}, {"AC-3", ac3}, {"AC-4", ac4}, {"AC-5", ac5},
        {"AC-6", ac6}, {"AC-7", ac7}, {"AC-8", ac8}, {"AC-9", ac9}};

    std::string only;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--only AC-n]\n";
            return 2;
        }
    }

    int failed = 0, ran = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && only != name) continue;
        ++ran;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << name << ' ' << (o.pass ? "PASS" : "FAIL") << ' ' << o.detail << std::endl;
        if (!o.pass) ++failed;
    }
    if (ran == 0) {
        std::cerr << "no criterion named " << only << '\n';
        return 2;
    }
    return failed == 0 ? 0 : 1;
}
