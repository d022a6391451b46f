#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "iabsa/channel.hpp"
#include "iabsa/iab_model.hpp"
#include "iabsa/topology.hpp"

namespace iabsa {

// QoS bits as reals, length 1 + L.
using Observation = Eigen::VectorXd;

// (2L + 1) x M relaxed allocation: rows [0, L] relax x, rows [L + 1, 2L] relax z.
using RelaxedAction = Eigen::MatrixXd;

using ActionIndex = std::int64_t;

struct EpisodeConfig {
    int horizon = 500;
    double gamma = 0.9;
    QosSpec qos;

    void validate(int L) const;
};

struct EnvOptions {
    NetworkConfig network;
    ChannelParams channel;
    RateOptions rates;
    EpisodeConfig episode;
    // Reward is utility - qos_penalty * (number of unsatisfied UE groups).
    double qos_penalty = 0.0;
    // Keep the channel of reset() for the whole episode (no mobility, no refading).
    bool freeze_channel = false;

    // Fills defaults that depend on L (QoS thresholds) and validates.
    void finalize();
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    RateVector rates;
    bool truncated = false;  // horizon reached
};

// Episodic MDP over the IAB network. Channel and mobility evolve from the
// episode seed alone, independent of the actions taken.
class IabEnv {
public:
    explicit IabEnv(EnvOptions options);

    // Fresh deployment from the seed, fresh fading; all-off allocation state.
    Observation reset(std::uint64_t seed);
    // Same, but keeps the given geometry.
    Observation reset(std::uint64_t seed, const Layout& layout);

    // Throws InfeasibleAllocation (state unchanged) or std::logic_error past the horizon.
    StepResult step(const Allocation& alloc);

    // Reward of an allocation under the current channel, without advancing.
    double evaluate(const Allocation& alloc) const;
    RateVector evaluate_rates(const Allocation& alloc) const;

    const EnvOptions& options() const { return options_; }
    int L() const { return options_.network.L; }
    int M() const { return options_.network.M; }
    int t() const { return t_; }
    const Layout& layout() const { return layout_; }
    const ChannelState& channel() const { return channel_; }
    const Observation& observation() const { return obs_; }

private:
    void refresh_channel();
    double reward_of(const RateVector& rates) const;

    EnvOptions options_;
    Rng rng_;
    Layout layout_;
    ChannelState channel_;
    Observation obs_;
    int t_ = 1;
};

// |A| = (1 + L)^M * 2^(L M); nullopt if it overflows 63 bits.
std::optional<std::int64_t> action_space_size(int L, int M);

// Mixed radix: digit m (base 1 + L, least significant first) picks the x
// row for column m, followed by L*M bits of z in row-major order.
Allocation encode_action(ActionIndex idx, int L, int M);
ActionIndex decode_action(const Allocation& alloc);

// argmax per x column (lowest row on ties), z entries >= 0.5 become 1.
Allocation discretize(const RelaxedAction& relaxed, int L, int M);

// 0/1 matrix of a binary allocation in relaxed layout.
RelaxedAction relax(const Allocation& alloc);

}  // namespace iabsa
