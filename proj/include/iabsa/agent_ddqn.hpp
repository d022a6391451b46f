#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "iabsa/approx.hpp"
#include "iabsa/env.hpp"
#include "iabsa/replay.hpp"

namespace iabsa {

struct DdqnConfig {
    int obs_dim = 1;
    std::int64_t action_count = 1;
    std::vector<int> hidden{500, 1000, 500};
    double gamma = 0.9;
    double epsilon = 0.9;
    double epsilon_decay = 0.9995;  // per episode
    double epsilon_min = 0.01;
    double lr = 1e-4;
    int batch_n = 32;
    std::size_t buffer_capacity = 10000;
    int target_sync_period = 100;  // train steps between hard target copies
    std::int64_t action_cap = 65536;
    OptimizerConfig optimizer;

    void validate() const;
};

// Double DQN: the train network picks the next action, the target network
// scores it.
class DdqnAgent {
public:
    DdqnAgent(DdqnConfig config, std::uint64_t seed);

    // Epsilon-greedy over the train network; ties go to the lowest index.
    ActionIndex select_action(const Observation& obs, Rng& rng) const;
    ActionIndex greedy_action(const Observation& obs) const;

    // y = r + gamma * Q_target(s', argmax_a Q_train(s', a)).
    Eigen::VectorXd td_targets(std::span<const DiscreteTransition> batch) const;

    // One SGD step on the squared TD error of the taken actions, for a given
    // batch. Returns the mean squared TD error before the update.
    double train_on_batch(std::span<const DiscreteTransition> batch);

    // Samples batch_n transitions and trains; syncs the target network every
    // target_sync_period calls. Throws std::logic_error if the buffer holds
    // fewer than batch_n transitions.
    double train_step(Rng& rng);

    void sync_target() { q_target_ = q_train_; }
    void remember(DiscreteTransition t) { buffer_.push(std::move(t)); }
    // Multiplicative epsilon decay with floor.
    void end_episode();

    Eigen::VectorXd q_values(const Observation& obs) const { return forward_one(q_train_, obs); }

    double epsilon() const { return epsilon_; }
    void set_epsilon(double e) { epsilon_ = e; }
    const DdqnConfig& config() const { return config_; }
    const ReplayBuffer<DiscreteTransition>& buffer() const { return buffer_; }
    long train_steps() const { return train_steps_; }

    MlpParams& q_train() { return q_train_; }
    MlpParams& q_target() { return q_target_; }
    const MlpParams& q_train() const { return q_train_; }
    const MlpParams& q_target() const { return q_target_; }

private:
    DdqnConfig config_;
    MlpParams q_train_;
    MlpParams q_target_;
    Optimizer optimizer_;
    ReplayBuffer<DiscreteTransition> buffer_;
    double epsilon_;
    long train_steps_ = 0;
};

// Index of the largest entry, lowest index on ties.
Eigen::Index argmax_first(const Eigen::VectorXd& v);

}  // namespace iabsa
