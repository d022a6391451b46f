#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "iabsa/common.hpp"

namespace iabsa {

using Point = Eigen::Vector2d;

struct NetworkConfig {
    int L = 4;                  // IAB nodes
    int M = 10;                 // subchannels
    double iab_radius = 250.0;  // m, IAB ring around the MBS
    double ue_radius = 150.0;   // m, UE group ring around its serving BS
    double speed_max = 2.0;     // m/s, speed ~ U(0, speed_max)
    double step_duration = 1.0; // s per coherence step
    double min_distance = 1.0;  // m, lower clamp for link distances

    // Throws ConfigError on a violated invariant.
    void validate() const;
};

// Geometry of one run. ue_pos[0] is u0 (served by the MBS); ue_pos[l] is the
// group served by IAB node l, whose position is iab_pos[l - 1].
struct Layout {
    Point mbs_pos = Point::Zero();
    std::vector<Point> iab_pos;
    std::vector<Point> ue_pos;

    int num_iab() const { return static_cast<int>(iab_pos.size()); }
    // Position of base station i: 0 is the MBS, l in [1, L] is IAB node l.
    const Point& bs_pos(int i) const { return i == 0 ? mbs_pos : iab_pos[i - 1]; }
};

// IAB nodes at iab_radius with i.i.d. uniform angles, each UE group at
// ue_radius from its serving BS with an i.i.d. uniform angle.
Layout deploy(const NetworkConfig& config, Rng& rng);

// Same construction with explicit angles (radians). iab_angles has L entries,
// ue_angles has 1 + L.
Layout deploy_with_angles(const NetworkConfig& config, std::span<const double> iab_angles,
                          std::span<const double> ue_angles);

// Random-walk step: every UE moves speed * step_duration along its heading,
// speed ~ U(0, speed_max), heading ~ U(0, 2pi). Base stations stay put.
Layout step_mobility(const Layout& layout, const NetworkConfig& config, Rng& rng);

// Deterministic displacement with given per-UE speeds and headings.
Layout displace(const Layout& layout, const NetworkConfig& config, std::span<const double> speeds,
                std::span<const double> headings);

// Euclidean distance clamped below at min_distance.
double link_distance(const Point& a, const Point& b, double min_distance);

}  // namespace iabsa
