#pragma once

#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "iabsa/channel.hpp"

namespace iabsa {

// Binary spectrum allocation.
//   x: (1 + L) x M, row 0 = u0 access, row l = backhaul to IAB node l.
//   z: L x M, row l - 1 = IAB node l transmits to its UE group.
struct Allocation {
    Eigen::MatrixXi x;
    Eigen::MatrixXi z;

    Allocation() = default;
    Allocation(int L, int M) : x(Eigen::MatrixXi::Zero(1 + L, M)), z(Eigen::MatrixXi::Zero(L, M)) {}

    int L() const { return static_cast<int>(z.rows()); }
    int M() const { return static_cast<int>(x.cols()); }

    bool operator==(const Allocation& o) const {
        return x.rows() == o.x.rows() && x.cols() == o.x.cols() && z.rows() == o.z.rows() &&
               z.cols() == o.z.cols() && x == o.x && z == o.z;
    }
};

enum class Constraint {
    column_one_hot,   // every subchannel at the MBS serves exactly one first-tier receiver
    mbs_budget,       // at most M MBS assignments in total
    iab_budget,       // at most M subchannels per IAB node
    binary,           // all entries in {0, 1}
};

const char* constraint_name(Constraint c);

struct ConstraintViolation {
    Constraint constraint;
    int row = -1;
    int col = -1;
    std::string message;
};

// nullopt when feasible. Binary-ness is checked first, then column sums and
// budgets. Mismatched shapes throw ShapeError.
std::optional<ConstraintViolation> validate_allocation(const Allocation& alloc, int L, int M);

// Throws ShapeError or InfeasibleAllocation.
void require_feasible(const Allocation& alloc, int L, int M);

struct RateOptions {
    double rate_log_base = 2.0;
    double utility_log_base = std::numbers::e;
    double c_floor = 1e-3;
    // Interference sums on raw gains without transmit powers, and the IAB
    // power in the backhaul numerator.
    bool literal_interference = false;
};

// SINR per receiver (rows ordered u0, b_1..b_L, u_1..u_L) and subchannel.
Eigen::MatrixXd compute_sinr(const Allocation& alloc, const ChannelState& ch, const ChannelParams& params,
                             const RateOptions& opts = {});

struct RateVector {
    Eigen::VectorXd rates;     // 1 + L end-to-end rates, u0 first
    Eigen::VectorXd backhaul;  // L, MBS -> b_l
    Eigen::VectorXd access;    // L, b_l -> u_l
};

RateVector rates_from_sinr(const Eigen::MatrixXd& sinr, int L, const RateOptions& opts = {});

RateVector compute_rates(const Allocation& alloc, const ChannelState& ch, const ChannelParams& params,
                         const RateOptions& opts = {});

// Proportional-fairness utility, sum of log(max(C_j, c_floor)).
double utility(const RateVector& rates, const RateOptions& opts = {});

struct QosSpec {
    Eigen::VectorXd omega;

    static QosSpec uniform(int L, double required_rate = 5.0) {
        return QosSpec{Eigen::VectorXd::Constant(1 + L, required_rate)};
    }
};

// Bit j is 1 iff rates[j] >= omega[j].
Eigen::VectorXd qos_bits(const RateVector& rates, const QosSpec& qos);

}  // namespace iabsa
