#include "iabsa/iab_model.hpp"

#include <algorithm>
#include <cmath>

namespace iabsa {

const char* constraint_name(Constraint c) {
    switch (c) {
        case Constraint::column_one_hot: return "column_one_hot";
        case Constraint::mbs_budget: return "mbs_budget";
        case Constraint::iab_budget: return "iab_budget";
        case Constraint::binary: return "binary";
    }
    return "unknown";
}

std::optional<ConstraintViolation> validate_allocation(const Allocation& alloc, int L, int M) {
    if (alloc.x.rows() != 1 + L || alloc.x.cols() != M || alloc.z.rows() != L || alloc.z.cols() != M)
        throw ShapeError("allocation shape does not match (L, M)");

    auto non_binary = [](const Eigen::MatrixXi& a, const char* name) -> std::optional<ConstraintViolation> {
        for (int c = 0; c < a.cols(); ++c)
            for (int r = 0; r < a.rows(); ++r)
                if (a(r, c) != 0 && a(r, c) != 1)
                    return ConstraintViolation{Constraint::binary, r, c,
                                               std::string(name) + " entry is not 0/1"};
        return std::nullopt;
    };
    if (auto v = non_binary(alloc.x, "x")) return v;
    if (auto v = non_binary(alloc.z, "z")) return v;

    for (int m = 0; m < M; ++m)
        if (alloc.x.col(m).sum() != 1)
            return ConstraintViolation{Constraint::column_one_hot, -1, m,
                                       "subchannel " + std::to_string(m) + " is not assigned to exactly one receiver"};
    if (alloc.x.sum() > M)
        return ConstraintViolation{Constraint::mbs_budget, -1, -1, "more than M MBS assignments"};
    for (int l = 0; l < L; ++l)
        if (alloc.z.row(l).sum() > M)
            return ConstraintViolation{Constraint::iab_budget, l, -1, "IAB node uses more than M subchannels"};
    return std::nullopt;
}

void require_feasible(const Allocation& alloc, int L, int M) {
    if (auto v = validate_allocation(alloc, L, M))
        throw InfeasibleAllocation(std::string(constraint_name(v->constraint)) + ": " + v->message);
}

Eigen::MatrixXd compute_sinr(const Allocation& alloc, const ChannelState& ch, const ChannelParams& params,
                             const RateOptions& opts) {
    const int L = ch.L();
    const int M = ch.M();
    require_feasible(alloc, L, M);

    const double p_mbs = dbm_to_watts(params.tx_power_mbs_dbm);
    const double p_iab = dbm_to_watts(params.tx_power_iab_dbm);
    const double xi = db_to_linear(params.self_interference_db);
    const double noise = dbm_to_watts(noise_power_dbm(params, M));
    const bool literal = opts.literal_interference;
    const double p_iab_interf = literal ? 1.0 : p_iab;
    const double p_mbs_interf = literal ? 1.0 : p_mbs;
    const double p_backhaul = literal ? p_iab : p_mbs;

    const auto& g = ch.gains;
    Eigen::MatrixXd sinr = Eigen::MatrixXd::Zero(1 + 2 * L, M);
    for (int m = 0; m < M; ++m) {
        const int mbs_active = alloc.x.col(m).sum();

        double co_tier_u0 = 0.0;
        for (int i = 1; i <= L; ++i) co_tier_u0 += p_iab_interf * g(i, rx_u0(), m) * alloc.z(i - 1, m);
        sinr(0, m) = p_mbs * g(0, rx_u0(), m) * alloc.x(0, m) / (co_tier_u0 + noise);

        for (int l = 1; l <= L; ++l) {
            double co_tier_b = 0.0;
            double co_tier_u = 0.0;
            for (int i = 1; i <= L; ++i) {
                if (i == l) continue;
                co_tier_b += p_iab_interf * g(i, rx_iab(l), m) * alloc.z(i - 1, m);
                co_tier_u += p_iab_interf * g(i, rx_ue(L, l), m) * alloc.z(i - 1, m);
            }
            const double self = p_iab * xi * alloc.z(l - 1, m);
            sinr(l, m) = p_backhaul * g(0, rx_iab(l), m) * alloc.x(l, m) / (co_tier_b + self + noise);

            const double cross_tier = p_mbs_interf * g(0, rx_ue(L, l), m) * mbs_active;
            sinr(L + l, m) = p_iab * g(l, rx_ue(L, l), m) * alloc.z(l - 1, m) / (co_tier_u + cross_tier + noise);
        }
    }
    return sinr;
}

RateVector rates_from_sinr(const Eigen::MatrixXd& sinr, int L, const RateOptions& opts) {
    const double log_base = std::log(opts.rate_log_base);
    Eigen::VectorXd per_rx(sinr.rows());
    for (int r = 0; r < sinr.rows(); ++r) {
        double c = 0.0;
        for (int m = 0; m < sinr.cols(); ++m) c += std::log1p(sinr(r, m));
        per_rx(r) = c / log_base;
    }
    RateVector out;
    out.backhaul = per_rx.segment(1, L);
    out.access = per_rx.segment(1 + L, L);
    out.rates.resize(1 + L);
    out.rates(0) = per_rx(0);
    for (int l = 0; l < L; ++l) out.rates(1 + l) = std::min(out.backhaul(l), out.access(l));
    return out;
}

RateVector compute_rates(const Allocation& alloc, const ChannelState& ch, const ChannelParams& params,
                         const RateOptions& opts) {
    return rates_from_sinr(compute_sinr(alloc, ch, params, opts), ch.L(), opts);
}

double utility(const RateVector& rates, const RateOptions& opts) {
    const double log_base = std::log(opts.utility_log_base);
    double u = 0.0;
    for (double c : rates.rates) u += std::log(std::max(c, opts.c_floor)) / log_base;
    return u;
}

Eigen::VectorXd qos_bits(const RateVector& rates, const QosSpec& qos) {
    if (rates.rates.size() != qos.omega.size()) throw ShapeError("qos_bits: rate/threshold length mismatch");
    Eigen::VectorXd bits(rates.rates.size());
    for (Eigen::Index j = 0; j < bits.size(); ++j) bits(j) = rates.rates(j) >= qos.omega(j) ? 1.0 : 0.0;
    return bits;
}

}  // namespace iabsa
