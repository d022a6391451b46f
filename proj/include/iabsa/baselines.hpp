#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "iabsa/channel.hpp"
#include "iabsa/env.hpp"
#include "iabsa/iab_model.hpp"

namespace iabsa {

// Every IAB node on every subchannel; MBS subchannel m goes to first-tier
// receiver m mod (1 + L).
Allocation full_reuse(int L, int M);

// Contiguous partition of the M subchannels into 1 + 2L blocks (earlier
// blocks one larger when M does not divide evenly): block 0 to u0, block l
// to the backhaul of IAB node l, block L + l to IAB node l's access. MBS
// columns outside blocks 0..L go to u0.
Allocation fixed_orthogonal(int L, int M);

// One-hot x column uniformly at random, z entries i.i.d. Bernoulli(0.5).
Allocation random_feasible(int L, int M, Rng& rng);

struct OracleResult {
    Allocation best_alloc;
    ActionIndex best_index = 0;
    double best_utility = 0.0;
    std::int64_t evaluated_count = 0;
    std::vector<double> utilities;  // per action index, when requested
};

struct OracleOptions {
    std::int64_t cap = 1 << 20;
    int threads = 1;
    bool keep_utilities = false;
};

// Exhaustive search over all feasible (x, z) under a frozen channel; ties go
// to the lowest action index. Throws CapacityError beyond options.cap.
OracleResult exhaustive_oracle(const ChannelState& ch, const ChannelParams& params, const RateOptions& rate_opts,
                               int L, int M, const OracleOptions& options = {});

// "action_index,utility" rows.
void write_oracle_csv(std::ostream& os, const OracleResult& result);

}  // namespace iabsa
