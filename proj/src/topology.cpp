#include "iabsa/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace iabsa {

namespace {

Point polar(double radius, double angle) {
    return Point(radius * std::cos(angle), radius * std::sin(angle));
}

}  // namespace

void NetworkConfig::validate() const {
    if (L < 1) throw ConfigError("network.L must be >= 1");
    if (M < 1) throw ConfigError("network.M must be >= 1");
    if (!(iab_radius > 0) || !(ue_radius > 0)) throw ConfigError("network radii must be > 0");
    if (!(min_distance > 0)) throw ConfigError("network.min_distance must be > 0");
    if (!(speed_max >= 0)) throw ConfigError("network.speed_max must be >= 0");
    if (!(step_duration >= 0)) throw ConfigError("network.step_duration must be >= 0");
}

Layout deploy_with_angles(const NetworkConfig& config, std::span<const double> iab_angles,
                          std::span<const double> ue_angles) {
    const auto L = static_cast<std::size_t>(config.L);
    if (iab_angles.size() != L || ue_angles.size() != L + 1)
        throw ShapeError("deploy: expected L IAB angles and 1 + L UE angles");

    Layout layout;
    layout.iab_pos.reserve(L);
    for (double a : iab_angles) layout.iab_pos.push_back(polar(config.iab_radius, a));
    layout.ue_pos.reserve(L + 1);
    for (std::size_t l = 0; l <= L; ++l)
        layout.ue_pos.push_back(layout.bs_pos(static_cast<int>(l)) + polar(config.ue_radius, ue_angles[l]));
    return layout;
}

Layout deploy(const NetworkConfig& config, Rng& rng) {
    config.validate();
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::vector<double> iab_angles(config.L);
    std::vector<double> ue_angles(config.L + 1);
    for (auto& a : iab_angles) a = angle(rng);
    for (auto& a : ue_angles) a = angle(rng);
    return deploy_with_angles(config, iab_angles, ue_angles);
}

Layout displace(const Layout& layout, const NetworkConfig& config, std::span<const double> speeds,
                std::span<const double> headings) {
    if (speeds.size() != layout.ue_pos.size() || headings.size() != layout.ue_pos.size())
        throw ShapeError("displace: one speed and heading per UE group required");
    Layout next = layout;
    for (std::size_t u = 0; u < next.ue_pos.size(); ++u)
        next.ue_pos[u] += polar(speeds[u] * config.step_duration, headings[u]);
    return next;
}

Layout step_mobility(const Layout& layout, const NetworkConfig& config, Rng& rng) {
    std::uniform_real_distribution<double> speed(0.0, config.speed_max);
    std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
    std::vector<double> speeds(layout.ue_pos.size());
    std::vector<double> headings(layout.ue_pos.size());
    for (std::size_t u = 0; u < speeds.size(); ++u) {
        speeds[u] = config.speed_max > 0 ? speed(rng) : 0.0;
        headings[u] = heading(rng);
    }
    return displace(layout, config, speeds, headings);
}

double link_distance(const Point& a, const Point& b, double min_distance) {
    return std::max((a - b).norm(), min_distance);
}

}  // namespace iabsa
