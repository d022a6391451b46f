#include "iabsa/baselines.hpp"

#include <algorithm>
#include <ostream>
#include <thread>

namespace iabsa {

Allocation full_reuse(int L, int M) {
    Allocation a(L, M);
    a.z.setOnes();
    for (int m = 0; m < M; ++m) a.x(m % (1 + L), m) = 1;
    return a;
}

Allocation fixed_orthogonal(int L, int M) {
    Allocation a(L, M);
    const int blocks = 1 + 2 * L;
    const int base = M / blocks;
    const int extra = M % blocks;
    std::vector<int> owner(M, -1);
    int start = 0;
    for (int b = 0; b < blocks; ++b) {
        const int len = base + (b < extra ? 1 : 0);
        for (int m = start; m < start + len; ++m) owner[m] = b;
        start += len;
    }
    for (int m = 0; m < M; ++m) {
        const int b = owner[m];
        if (b >= 1 + L) {
            a.z(b - 1 - L, m) = 1;
            a.x(0, m) = 1;
        } else {
            a.x(b, m) = 1;
        }
    }
    return a;
}

Allocation random_feasible(int L, int M, Rng& rng) {
    Allocation a(L, M);
    std::uniform_int_distribution<int> row(0, L);
    std::bernoulli_distribution coin(0.5);
    for (int m = 0; m < M; ++m) a.x(row(rng), m) = 1;
    for (int l = 0; l < L; ++l)
        for (int m = 0; m < M; ++m) a.z(l, m) = coin(rng) ? 1 : 0;
    return a;
}

OracleResult exhaustive_oracle(const ChannelState& ch, const ChannelParams& params, const RateOptions& rate_opts,
                               int L, int M, const OracleOptions& options) {
    if (ch.L() != L || ch.M() != M) throw ShapeError("oracle: channel shape does not match (L, M)");
    const auto size = action_space_size(L, M);
    if (!size || *size > options.cap)
        throw CapacityError("oracle: action space exceeds the enumeration cap");
    const std::int64_t n = *size;

    struct Best {
        ActionIndex index = -1;
        double value = 0.0;
    };
    std::vector<double> utilities(options.keep_utilities ? n : 0);

    auto scan = [&](std::int64_t begin, std::int64_t end) {
        Best best;
        for (std::int64_t idx = begin; idx < end; ++idx) {
            const double u = utility(compute_rates(encode_action(idx, L, M), ch, params, rate_opts), rate_opts);
            if (options.keep_utilities) utilities[idx] = u;
            if (best.index < 0 || u > best.value) best = {idx, u};
        }
        return best;
    };

    const int threads = static_cast<int>(std::clamp<std::int64_t>(options.threads, 1, n));
    std::vector<Best> partial(threads);
    if (threads == 1) {
        partial[0] = scan(0, n);
    } else {
        std::vector<std::thread> pool;
        for (int k = 0; k < threads; ++k) {
            const std::int64_t begin = n * k / threads;
            const std::int64_t end = n * (k + 1) / threads;
            pool.emplace_back([&, k, begin, end] { partial[k] = scan(begin, end); });
        }
        for (auto& th : pool) th.join();
    }
    // Partials are ordered by index range, so strict > keeps the lowest index.
    Best best = partial[0];
    for (int k = 1; k < threads; ++k)
        if (partial[k].value > best.value) best = partial[k];

    OracleResult result;
    result.best_index = best.index;
    result.best_alloc = encode_action(best.index, L, M);
    result.best_utility = best.value;
    result.evaluated_count = n;
    result.utilities = std::move(utilities);
    return result;
}

void write_oracle_csv(std::ostream& os, const OracleResult& result) {
    os << "action_index,utility\n";
    for (std::size_t i = 0; i < result.utilities.size(); ++i)
        os << i << ',' << format_double(result.utilities[i]) << '\n';
}

}  // namespace iabsa
