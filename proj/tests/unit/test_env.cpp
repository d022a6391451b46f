#include <doctest.h>

#include <cmath>
#include <set>

#include "iabsa/baselines.hpp"
#include "iabsa/env.hpp"
#include "reference_model.hpp"

using namespace iabsa;

namespace {

EnvOptions small_options(int L, int M, int horizon = 20) {
    EnvOptions o;
    o.network.L = L;
    o.network.M = M;
    o.episode.horizon = horizon;
    return o;
}

}  // namespace

TEST_CASE("reset returns an all-zero observation of length 1 + L") {
    for (int L : {1, 2, 4}) {
        IabEnv env(small_options(L, 3));
        const Observation o = env.reset(123);
        CHECK(o.size() == 1 + L);
        CHECK(o.isZero());
        CHECK(env.t() == 1);
    }
}

TEST_CASE("reset with the same seed reproduces layout and fading") {
    IabEnv a(small_options(2, 3));
    IabEnv b(small_options(2, 3));
    a.reset(77);
    b.reset(77);
    CHECK(a.channel().gains == b.channel().gains);
    for (int l = 0; l < 2; ++l) CHECK(a.layout().iab_pos[l] == b.layout().iab_pos[l]);
    b.reset(78);
    CHECK_FALSE(a.channel().gains == b.channel().gains);
}

TEST_CASE("all-off Z leaves second-tier rates at zero") {
    IabEnv env(small_options(2, 3));
    env.reset(5);
    Allocation a(2, 3);
    a.x.row(0).setOnes();
    const RateVector before = env.evaluate_rates(a);
    const StepResult r = env.step(a);
    CHECK(r.rates.rates(1) == 0.0);
    CHECK(r.rates.rates(2) == 0.0);
    CHECK(r.reward == doctest::Approx(std::log(std::max(before.rates(0), 1e-3)) + 2.0 * std::log(1e-3)));
    CHECK(std::isfinite(r.reward));
}

TEST_CASE("step reward equals the reference utility on a frozen L=2, M=2 instance") {
    EnvOptions o = small_options(2, 2, 50);
    o.freeze_channel = true;
    IabEnv env(o);
    env.reset(31);
    const ref::Model mdl = ref::from_geometry(env.layout(), o.channel, [&] {
        // Recover fading from the gains through the reference pathloss.
        LinkTensor ones(2, 2, 1.0);
        const ChannelState unit = gain_tensor(env.layout(), o.channel, ones);
        LinkTensor h(2, 2);
        for (std::size_t k = 0; k < h.data().size(); ++k) h.data()[k] = env.channel().gains.data()[k] / unit.gains.data()[k];
        return h;
    }(), 2);
    Rng rng = make_rng(4);
    for (int t = 0; t < 50; ++t) {
        const Allocation a = random_feasible(2, 2, rng);
        const StepResult r = env.step(a);
        CHECK(ref::rel_err(r.reward, ref::utility(mdl, a)) < 1e-10);
    }
}

TEST_CASE("reward ordering follows utility ordering on a frozen channel") {
    EnvOptions o = small_options(2, 2);
    o.freeze_channel = true;
    IabEnv env(o);
    env.reset(9);
    const Allocation a = full_reuse(2, 2);
    const Allocation b = fixed_orthogonal(2, 2);
    const double ua = utility(compute_rates(a, env.channel(), o.channel));
    const double ub = utility(compute_rates(b, env.channel(), o.channel));
    const double ra = env.step(a).reward;
    const double rb = env.step(b).reward;
    CHECK((ra < rb) == (ua < ub));
}

TEST_CASE("invalid allocation is rejected without advancing") {
    IabEnv env(small_options(1, 2));
    env.reset(2);
    const auto gains = env.channel().gains;
    CHECK_THROWS_AS(env.step(Allocation(1, 2)), InfeasibleAllocation);
    CHECK(env.t() == 1);
    CHECK(env.channel().gains == gains);
}

TEST_CASE("stepping past the horizon throws") {
    IabEnv env(small_options(1, 1, 3));
    env.reset(1);
    const Allocation a = full_reuse(1, 1);
    CHECK_FALSE(env.step(a).truncated);
    CHECK_FALSE(env.step(a).truncated);
    CHECK(env.step(a).truncated);
    CHECK_THROWS_AS(env.step(a), std::logic_error);
}

TEST_CASE("channel evolution does not depend on actions") {
    IabEnv a(small_options(2, 3, 30));
    IabEnv b(small_options(2, 3, 30));
    a.reset(55);
    b.reset(55);
    Rng rng = make_rng(1);
    for (int t = 0; t < 30; ++t) {
        REQUIRE(a.channel().gains == b.channel().gains);
        a.step(full_reuse(2, 3));
        b.step(random_feasible(2, 3, rng));
    }
}

TEST_CASE("qos penalty subtracts per unsatisfied group") {
    EnvOptions o = small_options(2, 2);
    o.qos_penalty = 0.5;
    o.freeze_channel = true;
    IabEnv env(o);
    env.reset(3);
    const Allocation a = full_reuse(2, 2);
    const RateVector rates = env.evaluate_rates(a);
    const Eigen::VectorXd bits = qos_bits(rates, QosSpec::uniform(2));
    const StepResult r = env.step(a);
    CHECK(r.reward == doctest::Approx(utility(rates) - 0.5 * (3 - bits.sum())));
    CHECK(r.obs == bits);
}

TEST_CASE("frozen channel holds across steps") {
    EnvOptions o = small_options(2, 2);
    o.freeze_channel = true;
    IabEnv env(o);
    env.reset(8);
    const auto g = env.channel().gains;
    for (int t = 0; t < 5; ++t) env.step(full_reuse(2, 2));
    CHECK(env.channel().gains == g);
}

TEST_CASE("action index zero is all-u0 with Z off") {
    const Allocation a = encode_action(0, 2, 3);
    CHECK(a.x.row(0) == Eigen::RowVectorXi::Ones(3));
    CHECK(a.x.bottomRows(2).isZero());
    CHECK(a.z.isZero());
}

TEST_CASE("L=1, M=1 has four distinct valid allocations") {
    REQUIRE(action_space_size(1, 1) == 4);
    std::set<std::vector<int>> seen;
    for (ActionIndex i = 0; i < 4; ++i) {
        const Allocation a = encode_action(i, 1, 1);
        CHECK_FALSE(validate_allocation(a, 1, 1).has_value());
        seen.insert({a.x(0, 0), a.x(1, 0), a.z(0, 0)});
    }
    CHECK(seen.size() == 4);
}

TEST_CASE("encode and decode are inverse on small spaces") {
    for (auto [L, M] : {std::pair{1, 1}, {1, 3}, {2, 2}, {2, 3}, {3, 2}}) {
        const std::int64_t n = *action_space_size(L, M);
        for (ActionIndex i = 0; i < n; ++i) {
            const Allocation a = encode_action(i, L, M);
            REQUIRE_FALSE(validate_allocation(a, L, M).has_value());
            REQUIRE(decode_action(a) == i);
        }
    }
    CHECK(*action_space_size(2, 2) == 144);
    CHECK(*action_space_size(4, 10) > 0);
    CHECK_FALSE(action_space_size(8, 40).has_value());
    CHECK_THROWS(encode_action(144, 2, 2));
    CHECK_THROWS(encode_action(-1, 2, 2));
}

TEST_CASE("digit order: column 0 is least significant, Z bits follow row-major") {
    // L=1, M=2: index = x0 + 2*x1 + 4*z00 + 8*z01
    const Allocation a = encode_action(1 + 2 * 0 + 4 * 0 + 8 * 1, 1, 2);
    CHECK(a.x(1, 0) == 1);
    CHECK(a.x(0, 1) == 1);
    CHECK(a.z(0, 0) == 0);
    CHECK(a.z(0, 1) == 1);
}

TEST_CASE("discretize examples") {
    RelaxedAction r(5, 1);  // L=2, M=1
    r << 0.2, 0.5, 0.3, 0.5, 0.49;
    Allocation a = discretize(r, 2, 1);
    CHECK(a.x(1, 0) == 1);
    CHECK(a.x.col(0).sum() == 1);
    CHECK(a.z(0, 0) == 1);
    CHECK(a.z(1, 0) == 0);

    r << 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0, 1.0;
    a = discretize(r, 2, 1);
    CHECK(a.x(0, 0) == 1);
}

TEST_CASE("discretize always yields a feasible allocation") {
    Rng rng = make_rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        RelaxedAction r(7, 4);
        for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = u(rng);
        CHECK_FALSE(validate_allocation(discretize(r, 3, 4), 3, 4).has_value());
    }
}

TEST_CASE("relax inverts discretize for binary allocations") {
    Rng rng = make_rng(7);
    for (int k = 0; k < 50; ++k) {
        const Allocation a = random_feasible(2, 3, rng);
        const RelaxedAction r = relax(a);
        CHECK(r.rows() == 5);
        CHECK(discretize(r, 2, 3) == a);
    }
}

TEST_CASE("episode config validation") {
    EnvOptions o = small_options(2, 2);
    o.episode.horizon = 0;
    CHECK_THROWS_AS(IabEnv{o}, ConfigError);
    o = small_options(2, 2);
    o.episode.gamma = 1.5;
    CHECK_THROWS_AS(IabEnv{o}, ConfigError);
    o = small_options(2, 2);
    o.episode.qos.omega = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(IabEnv{o}, ConfigError);
}
