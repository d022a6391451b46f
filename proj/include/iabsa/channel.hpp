#pragma once

#include <vector>

#include "iabsa/common.hpp"
#include "iabsa/topology.hpp"

namespace iabsa {

enum class LinkKind { mbs_tx, iab_tx };

struct ChannelParams {
    double mbs_pl_a = 34.0;  // dB, MBS pathloss a + b log10(d)
    double mbs_pl_b = 40.0;
    double iab_pl_a = 37.0;  // dB, IAB pathloss
    double iab_pl_b = 30.0;
    double bandwidth_hz = 2e7;
    double noise_figure_db = 10.0;
    double tx_power_mbs_dbm = 43.0;
    double tx_power_iab_dbm = 33.0;
    double self_interference_db = -70.0;
    // Use W / M instead of the full band W in the noise floor.
    bool noise_per_subchannel = false;

    void validate() const;
};

double dbm_to_watts(double dbm);
double db_to_linear(double db);

// a + b log10(d) for the transmitter kind. Throws std::invalid_argument for d <= 0.
double pathloss_db(const ChannelParams& params, LinkKind kind, double distance_m);

// -174 dBm/Hz + 10 log10(W) + NF. With noise_per_subchannel, W is divided by
// num_subchannels.
double noise_power_dbm(const ChannelParams& params, int num_subchannels = 1);

// Dense (transmitter, receiver, subchannel) tensor.
//   transmitters: 0 = MBS, l = IAB node l                    (1 + L)
//   receivers:    0 = u0, l = IAB node l, L + l = UE group l  (1 + 2L)
class LinkTensor {
public:
    LinkTensor() = default;
    LinkTensor(int L, int M, double fill = 0.0)
        : L_(L), M_(M), data_(static_cast<std::size_t>((1 + L) * (1 + 2 * L) * M), fill) {}

    int L() const { return L_; }
    int M() const { return M_; }
    int num_tx() const { return 1 + L_; }
    int num_rx() const { return 1 + 2 * L_; }

    double& operator()(int tx, int rx, int m) { return data_[index(tx, rx, m)]; }
    double operator()(int tx, int rx, int m) const { return data_[index(tx, rx, m)]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool operator==(const LinkTensor&) const = default;

private:
    std::size_t index(int tx, int rx, int m) const {
        return (static_cast<std::size_t>(tx) * num_rx() + rx) * M_ + m;
    }

    int L_ = 0;
    int M_ = 0;
    std::vector<double> data_;
};

// Receiver index helpers matching the LinkTensor ordering.
inline int rx_u0() { return 0; }
inline int rx_iab(int l) { return l; }
inline int rx_ue(int L, int l) { return L + l; }

// Small-scale fading power gains, i.i.d. Exp(1) for every triple.
LinkTensor draw_small_scale(Rng& rng, int L, int M);

// Linear channel gains g = 10^(-PL/10) * h.
struct ChannelState {
    LinkTensor gains;

    int L() const { return gains.L(); }
    int M() const { return gains.M(); }
};

ChannelState gain_tensor(const Layout& layout, const ChannelParams& params, const LinkTensor& fading,
                         double min_distance = 1.0);

// Receiver position for the LinkTensor receiver index.
const Point& receiver_pos(const Layout& layout, int rx);

}  // namespace iabsa
