#include "iabsa/agent_ddqn.hpp"

#include <algorithm>
#include <stdexcept>

namespace iabsa {

namespace {

constexpr std::uint64_t kInitStream = 0x646471;  // "ddq"

Eigen::MatrixXd stack(std::span<const DiscreteTransition> batch, bool next) {
    Eigen::MatrixXd m(batch.front().s.size(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) m.col(i) = next ? batch[i].s_next : batch[i].s;
    return m;
}

}  // namespace

void DdqnConfig::validate() const {
    if (obs_dim < 1) throw ConfigError("ddqn: obs_dim must be >= 1");
    if (action_count < 1) throw ConfigError("ddqn: action_count must be >= 1");
    if (action_count > action_cap)
        throw CapacityError("ddqn: joint action space (" + std::to_string(action_count) + ") exceeds action_cap (" +
                            std::to_string(action_cap) + ")");
    if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("ddqn: epsilon must be in [0, 1]");
    if (!(epsilon_min >= 0 && epsilon_min <= 1)) throw ConfigError("ddqn: epsilon_min must be in [0, 1]");
    if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("ddqn: gamma must be in [0, 1]");
    if (batch_n < 1) throw ConfigError("ddqn: batch_n must be >= 1");
    if (target_sync_period < 1) throw ConfigError("ddqn: target_sync_period must be >= 1");
}

Eigen::Index argmax_first(const Eigen::VectorXd& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

DdqnAgent::DdqnAgent(DdqnConfig config, std::uint64_t seed)
    : config_(std::move(config)), optimizer_(config_.optimizer), buffer_(config_.buffer_capacity) {
    config_.validate();
    std::vector<int> sizes{config_.obs_dim};
    sizes.insert(sizes.end(), config_.hidden.begin(), config_.hidden.end());
    sizes.push_back(static_cast<int>(config_.action_count));
    Rng rng = make_rng(seed, kInitStream);
    q_train_ = init_mlp(sizes, OutputHead::linear(), rng);
    q_target_ = q_train_;
    epsilon_ = config_.epsilon;
}

ActionIndex DdqnAgent::greedy_action(const Observation& obs) const {
    return static_cast<ActionIndex>(argmax_first(q_values(obs)));
}

ActionIndex DdqnAgent::select_action(const Observation& obs, Rng& rng) const {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon_) {
        std::uniform_int_distribution<ActionIndex> pick(0, config_.action_count - 1);
        return pick(rng);
    }
    return greedy_action(obs);
}

Eigen::VectorXd DdqnAgent::td_targets(std::span<const DiscreteTransition> batch) const {
    if (batch.empty()) throw std::invalid_argument("td_targets: empty batch");
    const Eigen::MatrixXd next = stack(batch, true);
    const Eigen::MatrixXd q_sel = forward(q_train_, next);
    const Eigen::MatrixXd q_eval = forward(q_target_, next);
    Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Eigen::Index a_star = argmax_first(q_sel.col(i));
        y(i) = batch[i].r + config_.gamma * q_eval(a_star, i);
    }
    return y;
}

double DdqnAgent::train_on_batch(std::span<const DiscreteTransition> batch) {
    const Eigen::VectorXd y = td_targets(batch);
    ForwardCache cache;
    const Eigen::MatrixXd q = forward(q_train_, stack(batch, false), &cache);
    const auto n = static_cast<double>(batch.size());

    // d/dQ of mean (Q(s, a) - y)^2, nonzero only at the taken action.
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < q.cols(); ++i) {
        const Eigen::Index a = batch[i].a;
        const double err = q(a, i) - y(i);
        loss += err * err;
        grad(a, i) = 2.0 * err / n;
    }
    optimizer_.descend(q_train_, backward(q_train_, cache, grad).params, config_.lr);
    return loss / n;
}

double DdqnAgent::train_step(Rng& rng) {
    if (buffer_.size() < static_cast<std::size_t>(config_.batch_n))
        throw std::logic_error("train_step: replay buffer smaller than the batch size");
    const auto batch = buffer_.sample(config_.batch_n, rng);
    const double loss = train_on_batch(batch);
    ++train_steps_;
    if (train_steps_ % config_.target_sync_period == 0) sync_target();
    return loss;
}

void DdqnAgent::end_episode() {
    epsilon_ = std::max(std::min(epsilon_, config_.epsilon_min), epsilon_ * config_.epsilon_decay);
}

}  // namespace iabsa
