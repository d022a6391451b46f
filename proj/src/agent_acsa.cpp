#include "iabsa/agent_acsa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "iabsa/baselines.hpp"

namespace iabsa {

namespace {

constexpr std::uint64_t kActorStream = 0x616374;   // "act"
constexpr std::uint64_t kCriticStream = 0x637274;  // "crt"

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::MatrixXd stack_states(std::span<const RelaxedTransition> batch, bool next) {
    Eigen::MatrixXd m(batch.front().s.size(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) m.col(i) = next ? batch[i].s_next : batch[i].s;
    return m;
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

std::vector<int> chain(int in, const std::vector<int>& hidden, int out) {
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    return sizes;
}

}  // namespace

void AcsaConfig::validate() const {
    if (L < 1 || M < 1) throw ConfigError("acsa: L and M must be >= 1");
    if (!(tau > 0 && tau <= 1)) throw ConfigError("acsa: tau must be in (0, 1]");
    if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("acsa: epsilon must be in [0, 1]");
    if (!(gamma >= 0 && gamma <= 1)) throw ConfigError("acsa: gamma must be in [0, 1]");
    if (batch_n < 1) throw ConfigError("acsa: batch_n must be >= 1");
}

Eigen::VectorXd flatten_action(const RelaxedAction& a) {
    Eigen::VectorXd flat(a.size());
    Eigen::Map<RowMajor>(flat.data(), a.rows(), a.cols()) = a;
    return flat;
}

RelaxedAction unflatten_action(const Eigen::VectorXd& flat, int L, int M) {
    if (flat.size() != (2 * L + 1) * M) throw ShapeError("unflatten_action: size mismatch");
    return Eigen::Map<const RowMajor>(flat.data(), 2 * L + 1, M);
}

AcsaAgent::AcsaAgent(AcsaConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      actor_opt_(config_.optimizer),
      critic_opt_(config_.optimizer),
      buffer_(config_.buffer_capacity) {
    config_.validate();
    Rng actor_rng = make_rng(seed, kActorStream);
    Rng critic_rng = make_rng(seed, kCriticStream);
    actor_ = init_mlp(chain(config_.obs_dim(), config_.actor_hidden, config_.action_dim()),
                      OutputHead::structured(config_.L, config_.M), actor_rng);
    critic_ = init_mlp(chain(config_.obs_dim() + config_.action_dim(), config_.critic_hidden, 1),
                       OutputHead::linear(), critic_rng);
    actor_target_ = actor_;
    critic_target_ = critic_;
    epsilon_ = config_.epsilon;
}

AcsaAgent::Decision AcsaAgent::greedy(const Observation& obs) const {
    Decision d;
    d.relaxed = unflatten_action(forward_one(actor_, obs), config_.L, config_.M);
    d.alloc = discretize(d.relaxed, config_.L, config_.M);
    return d;
}

AcsaAgent::Decision AcsaAgent::act(const Observation& obs, Rng& rng) const {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon_) {
        Decision d;
        d.alloc = random_feasible(config_.L, config_.M, rng);
        d.relaxed = relax(d.alloc);
        d.explored = true;
        return d;
    }
    return greedy(obs);
}

void AcsaAgent::remember(const Observation& s, const Decision& d, double r, const Observation& s_next) {
    const RelaxedAction stored = config_.store_discretized ? relax(d.alloc) : d.relaxed;
    buffer_.push(RelaxedTransition{s, flatten_action(stored), r, s_next});
}

double AcsaAgent::critic_value(const Observation& s, const RelaxedAction& a) const {
    Eigen::VectorXd in(s.size() + a.size());
    in << s, flatten_action(a);
    return forward_one(critic_, in)(0);
}

Eigen::VectorXd AcsaAgent::critic_targets(std::span<const RelaxedTransition> batch) const {
    if (batch.empty()) throw std::invalid_argument("critic_targets: empty batch");
    const Eigen::MatrixXd next = stack_states(batch, true);
    const Eigen::MatrixXd next_actions = forward(actor_target_, next);
    const Eigen::MatrixXd q = forward(critic_target_, concat_rows(next, next_actions));
    Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = batch[i].r + config_.gamma * q(0, i);
    return y;
}

AcsaAgent::CriticStep AcsaAgent::critic_update(std::span<const RelaxedTransition> batch) {
    const Eigen::VectorXd y = critic_targets(batch);
    Eigen::MatrixXd actions(batch.front().a.size(), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) actions.col(i) = batch[i].a;

    ForwardCache cache;
    const Eigen::MatrixXd q = forward(critic_, concat_rows(stack_states(batch, false), actions), &cache);
    const auto n = static_cast<double>(batch.size());

    CriticStep out;
    out.td_errors = y - q.row(0).transpose();
    out.mean_squared = out.td_errors.squaredNorm() / n;
    // d/dQ of mean (Q - y)^2
    const Eigen::MatrixXd grad = (-2.0 / n) * out.td_errors.transpose();
    critic_opt_.descend(critic_, backward(critic_, cache, grad).params, config_.lr);
    return out;
}

MlpParams AcsaAgent::policy_gradient(std::span<const RelaxedTransition> batch) const {
    if (batch.empty()) throw std::invalid_argument("policy_gradient: empty batch");
    const Eigen::MatrixXd states = stack_states(batch, false);
    const auto n = static_cast<double>(batch.size());

    ForwardCache actor_cache;
    const Eigen::MatrixXd actions = forward(actor_, states, &actor_cache);
    ForwardCache critic_cache;
    forward(critic_, concat_rows(states, actions), &critic_cache);

    // dQ/da from the critic's input gradient, averaged over the batch.
    const Eigen::MatrixXd dq = backward(critic_, critic_cache, Eigen::MatrixXd::Constant(1, states.cols(), 1.0 / n)).input;
    const Eigen::MatrixXd dq_da = dq.bottomRows(actions.rows());
    return backward(actor_, actor_cache, dq_da).params;
}

double AcsaAgent::actor_update(std::span<const RelaxedTransition> batch) {
    MlpParams grad = policy_gradient(batch);
    const double norm = std::sqrt(grad.squared_norm());
    actor_opt_.ascend(actor_, std::move(grad), actor_lr());
    return norm;
}

double AcsaAgent::mean_policy_value(std::span<const RelaxedTransition> batch) const {
    const Eigen::MatrixXd states = stack_states(batch, false);
    const Eigen::MatrixXd actions = forward(actor_, states);
    return forward(critic_, concat_rows(states, actions)).mean();
}

void AcsaAgent::soft_sync() {
    soft_update(critic_target_, critic_, config_.tau);
    soft_update(actor_target_, actor_, config_.tau);
}

double AcsaAgent::train_step(Rng& rng) {
    if (buffer_.size() < static_cast<std::size_t>(config_.batch_n))
        throw std::logic_error("train_step: replay buffer smaller than the batch size");
    const auto batch = buffer_.sample(config_.batch_n, rng);
    const CriticStep c = critic_update(batch);
    actor_update(batch);
    return c.mean_squared;
}

void AcsaAgent::end_episode() {
    epsilon_ = std::max(std::min(epsilon_, config_.epsilon_min), epsilon_ * config_.epsilon_decay);
}

}  // namespace iabsa
