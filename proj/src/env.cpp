#include "iabsa/env.hpp"

#include <limits>
#include <stdexcept>

namespace iabsa {

namespace {

constexpr std::uint64_t kEnvStream = 0x656e76;  // "env"

}  // namespace

void EpisodeConfig::validate(int L) const {
    if (horizon < 1) throw ConfigError("episode.horizon must be >= 1");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("episode.gamma must be in [0, 1]");
    if (qos.omega.size() != 1 + L) throw ConfigError("episode QoS thresholds must have 1 + L entries");
    if ((qos.omega.array() < 0).any()) throw ConfigError("episode QoS thresholds must be >= 0");
}

void EnvOptions::finalize() {
    network.validate();
    channel.validate();
    if (episode.qos.omega.size() == 0) episode.qos = QosSpec::uniform(network.L);
    if (episode.qos.omega.size() == 1) episode.qos = QosSpec::uniform(network.L, episode.qos.omega(0));
    episode.validate(network.L);
    if (!(rates.c_floor > 0)) throw ConfigError("rates.c_floor must be > 0");
}

IabEnv::IabEnv(EnvOptions options) : options_(std::move(options)) {
    options_.finalize();
    reset(0);
}

Observation IabEnv::reset(std::uint64_t seed) {
    rng_ = make_rng(seed, kEnvStream);
    layout_ = deploy(options_.network, rng_);
    refresh_channel();
    obs_ = Observation::Zero(1 + L());
    t_ = 1;
    return obs_;
}

Observation IabEnv::reset(std::uint64_t seed, const Layout& layout) {
    if (layout.num_iab() != L()) throw ShapeError("reset: layout has the wrong number of IAB nodes");
    rng_ = make_rng(seed, kEnvStream);
    layout_ = layout;
    refresh_channel();
    obs_ = Observation::Zero(1 + L());
    t_ = 1;
    return obs_;
}

void IabEnv::refresh_channel() {
    const LinkTensor fading = draw_small_scale(rng_, L(), M());
    channel_ = gain_tensor(layout_, options_.channel, fading, options_.network.min_distance);
}

double IabEnv::reward_of(const RateVector& rates) const {
    double r = utility(rates, options_.rates);
    if (options_.qos_penalty != 0.0) {
        const Eigen::VectorXd bits = qos_bits(rates, options_.episode.qos);
        r -= options_.qos_penalty * (static_cast<double>(bits.size()) - bits.sum());
    }
    return r;
}

RateVector IabEnv::evaluate_rates(const Allocation& alloc) const {
    return compute_rates(alloc, channel_, options_.channel, options_.rates);
}

double IabEnv::evaluate(const Allocation& alloc) const { return reward_of(evaluate_rates(alloc)); }

StepResult IabEnv::step(const Allocation& alloc) {
    if (t_ > options_.episode.horizon) throw std::logic_error("step called past the episode horizon");
    require_feasible(alloc, L(), M());

    StepResult out;
    out.rates = evaluate_rates(alloc);
    out.reward = reward_of(out.rates);
    out.obs = qos_bits(out.rates, options_.episode.qos);
    obs_ = out.obs;

    if (!options_.freeze_channel) {
        layout_ = step_mobility(layout_, options_.network, rng_);
        refresh_channel();
    }
    ++t_;
    out.truncated = t_ > options_.episode.horizon;
    return out;
}

std::optional<std::int64_t> action_space_size(int L, int M) {
    if (L < 1 || M < 1) return std::nullopt;
    constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
    std::int64_t n = 1;
    for (int m = 0; m < M; ++m) {
        if (n > kMax / (1 + L)) return std::nullopt;
        n *= 1 + L;
    }
    for (int k = 0; k < L * M; ++k) {
        if (n > kMax / 2) return std::nullopt;
        n *= 2;
    }
    return n;
}

Allocation encode_action(ActionIndex idx, int L, int M) {
    const auto size = action_space_size(L, M);
    if (!size) throw CapacityError("action space too large to index");
    if (idx < 0 || idx >= *size) throw std::out_of_range("action index out of range");
    Allocation a(L, M);
    for (int m = 0; m < M; ++m) {
        a.x(idx % (1 + L), m) = 1;
        idx /= 1 + L;
    }
    for (int l = 0; l < L; ++l)
        for (int m = 0; m < M; ++m) {
            a.z(l, m) = static_cast<int>(idx & 1);
            idx >>= 1;
        }
    return a;
}

ActionIndex decode_action(const Allocation& alloc) {
    const int L = alloc.L();
    const int M = alloc.M();
    require_feasible(alloc, L, M);
    if (!action_space_size(L, M)) throw CapacityError("action space too large to index");
    ActionIndex z_part = 0;
    for (int l = L - 1; l >= 0; --l)
        for (int m = M - 1; m >= 0; --m) z_part = z_part * 2 + alloc.z(l, m);
    ActionIndex idx = z_part;
    for (int m = M - 1; m >= 0; --m) {
        int row = 0;
        alloc.x.col(m).maxCoeff(&row);
        idx = idx * (1 + L) + row;
    }
    return idx;
}

Allocation discretize(const RelaxedAction& relaxed, int L, int M) {
    if (relaxed.rows() != 2 * L + 1 || relaxed.cols() != M)
        throw ShapeError("discretize: relaxed action must be (2L + 1) x M");
    Allocation a(L, M);
    for (int m = 0; m < M; ++m) {
        int best = 0;
        for (int r = 1; r <= L; ++r)
            if (relaxed(r, m) > relaxed(best, m)) best = r;
        a.x(best, m) = 1;
        for (int l = 0; l < L; ++l) a.z(l, m) = relaxed(L + 1 + l, m) >= 0.5 ? 1 : 0;
    }
    return a;
}

RelaxedAction relax(const Allocation& alloc) {
    const int L = alloc.L();
    RelaxedAction r(2 * L + 1, alloc.M());
    r.topRows(L + 1) = alloc.x.cast<double>();
    r.bottomRows(L) = alloc.z.cast<double>();
    return r;
}

}  // namespace iabsa
