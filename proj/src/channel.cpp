#include "iabsa/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace iabsa {

void ChannelParams::validate() const {
    if (!(bandwidth_hz > 0)) throw ConfigError("channel.bandwidth_hz must be > 0");
    for (double v : {mbs_pl_a, mbs_pl_b, iab_pl_a, iab_pl_b, noise_figure_db, tx_power_mbs_dbm,
                     tx_power_iab_dbm, self_interference_db})
        if (!std::isfinite(v)) throw ConfigError("channel parameters must be finite");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double pathloss_db(const ChannelParams& params, LinkKind kind, double distance_m) {
    if (!(distance_m > 0)) throw std::invalid_argument("pathloss_db: distance must be positive");
    const double lg = std::log10(distance_m);
    return kind == LinkKind::mbs_tx ? params.mbs_pl_a + params.mbs_pl_b * lg
                                    : params.iab_pl_a + params.iab_pl_b * lg;
}

double noise_power_dbm(const ChannelParams& params, int num_subchannels) {
    double w = params.bandwidth_hz;
    if (params.noise_per_subchannel) w /= num_subchannels;
    return -174.0 + 10.0 * std::log10(w) + params.noise_figure_db;
}

LinkTensor draw_small_scale(Rng& rng, int L, int M) {
    LinkTensor h(L, M);
    std::exponential_distribution<double> exp1(1.0);
    for (double& v : h.data()) {
        // exponential_distribution may return exactly 0 in principle; keep the gain positive.
        do {
            v = exp1(rng);
        } while (!(v > 0));
    }
    return h;
}

const Point& receiver_pos(const Layout& layout, int rx) {
    const int L = layout.num_iab();
    if (rx == 0) return layout.ue_pos[0];
    if (rx <= L) return layout.iab_pos[rx - 1];
    return layout.ue_pos[rx - L];
}

ChannelState gain_tensor(const Layout& layout, const ChannelParams& params, const LinkTensor& fading,
                         double min_distance) {
    const int L = layout.num_iab();
    if (fading.L() != L || static_cast<int>(layout.ue_pos.size()) != L + 1)
        throw ShapeError("gain_tensor: fading/layout size mismatch");
    ChannelState ch{LinkTensor(L, fading.M())};
    for (int tx = 0; tx <= L; ++tx) {
        const LinkKind kind = tx == 0 ? LinkKind::mbs_tx : LinkKind::iab_tx;
        for (int rx = 0; rx < 1 + 2 * L; ++rx) {
            const double d = link_distance(layout.bs_pos(tx), receiver_pos(layout, rx), min_distance);
            const double alpha = std::pow(10.0, -pathloss_db(params, kind, d) / 10.0);
            for (int m = 0; m < fading.M(); ++m) ch.gains(tx, rx, m) = alpha * fading(tx, rx, m);
        }
    }
    return ch;
}

}  // namespace iabsa
