#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "iabsa/approx.hpp"
#include "iabsa/env.hpp"
#include "iabsa/replay.hpp"

namespace iabsa {

struct AcsaConfig {
    int L = 4;
    int M = 10;
    std::vector<int> critic_hidden{500, 1000, 500};
    std::vector<int> actor_hidden{500, 1000, 500};
    double gamma = 0.9;
    double epsilon = 0.9;
    double epsilon_decay = 0.9995;  // per episode
    double epsilon_min = 0.01;
    double tau = 0.01;
    double lr = 1e-4;        // critic step
    double actor_lr = -1.0;  // < 0: same as lr
    int batch_n = 32;
    std::size_t buffer_capacity = 10000;
    OptimizerConfig optimizer;
    // Store the executed 0/1 allocation instead of the actor's relaxed output.
    bool store_discretized = false;

    int obs_dim() const { return 1 + L; }
    int action_dim() const { return (2 * L + 1) * M; }
    void validate() const;
};

// Row-major flattening of a (2L + 1) x M relaxed action, the actor's output layout.
Eigen::VectorXd flatten_action(const RelaxedAction& a);
RelaxedAction unflatten_action(const Eigen::VectorXd& flat, int L, int M);

// Actor-critic spectrum allocator with a deterministic actor and soft targets.
class AcsaAgent {
public:
    struct Decision {
        RelaxedAction relaxed;  // what gets stored
        Allocation alloc;       // what gets executed
        bool explored = false;
    };

    struct CriticStep {
        Eigen::VectorXd td_errors;  // y - Q(s, a) before the update
        double mean_squared = 0.0;
    };

    AcsaAgent(AcsaConfig config, std::uint64_t seed);

    // Epsilon-greedy: a uniformly random feasible allocation with probability
    // epsilon, the discretized actor output otherwise.
    Decision act(const Observation& obs, Rng& rng) const;
    Decision greedy(const Observation& obs) const;

    // y = r + gamma * Q_target(s', actor_target(s')), relaxed next action.
    Eigen::VectorXd critic_targets(std::span<const RelaxedTransition> batch) const;
    CriticStep critic_update(std::span<const RelaxedTransition> batch);

    // Sampled deterministic policy gradient, averaged over the batch.
    MlpParams policy_gradient(std::span<const RelaxedTransition> batch) const;
    // Gradient ascent on the batch-mean critic value; returns the gradient norm.
    double actor_update(std::span<const RelaxedTransition> batch);
    // Mean critic value of the current actor's relaxed actions on the batch states.
    double mean_policy_value(std::span<const RelaxedTransition> batch) const;

    void soft_sync();
    // Samples batch_n transitions, updates critic then actor. Returns the
    // mean squared TD error. Throws std::logic_error on an undersized buffer.
    double train_step(Rng& rng);

    void remember(const Observation& s, const Decision& d, double r, const Observation& s_next);
    void remember(RelaxedTransition t) { buffer_.push(std::move(t)); }
    void end_episode();

    double critic_value(const Observation& s, const RelaxedAction& a) const;

    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    const AcsaConfig& config() const { return config_; }
    const ReplayBuffer<RelaxedTransition>& buffer() const { return buffer_; }

    MlpParams& actor() { return actor_; }
    MlpParams& critic() { return critic_; }
    MlpParams& actor_target() { return actor_target_; }
    MlpParams& critic_target() { return critic_target_; }
    const MlpParams& actor() const { return actor_; }
    const MlpParams& critic() const { return critic_; }
    const MlpParams& actor_target() const { return actor_target_; }
    const MlpParams& critic_target() const { return critic_target_; }

private:
    double actor_lr() const { return config_.actor_lr < 0 ? config_.lr : config_.actor_lr; }

    AcsaConfig config_;
    MlpParams actor_;
    MlpParams critic_;
    MlpParams actor_target_;
    MlpParams critic_target_;
    Optimizer actor_opt_;
    Optimizer critic_opt_;
    ReplayBuffer<RelaxedTransition> buffer_;
    double epsilon_;
};

}  // namespace iabsa
