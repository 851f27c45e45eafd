#pragma once

#include "qsdn/net_model.hpp"
#include "qsdn/types.hpp"

#include <map>
#include <random>
#include <set>
#include <vector>

namespace qsdn {

// Calibrated key-rate / QBER models for an emulated subcarrier-wave pair.
// The calibration point is a 0.326 dB link producing 1.06 Mbit/s sifted key
// at 1% QBER; both curves are explicit functions of loss and mean photon
// number, not physical-layer simulations.
struct QkdModelParams {
    double rate_cal_bps = 1.06e6;
    double loss_cal_db = 0.326;
    double mu_cal = 0.2;
    double mu_max = 1.0;
    double qber_cal = 0.01;
    double qber_at_20db = 0.05;
    double qber_eavesdrop = 0.25; // intercept-resend error fraction
    double qber_discard = 0.11;
    double qber_sigma = 0.002; // per-block Gaussian spread
    int max_sidebands = 10;

    // Slope of the linear-in-transmittance noise term, fixed by the
    // (loss_cal, qber_cal) and (20 dB, qber_at_20db) anchor points.
    double qber_noise_slope() const;
};

// R = R_cal * (mu / mu_cal) * 10^(-(loss - loss_cal)/10) * n_sidebands
double sifted_rate_bps(const QkdModelParams& p, double loss_db, double mu, int n_sidebands);

// q = q_cal + k * (10^(loss/10) - 10^(loss_cal/10)); eavesdropper forces 0.25.
double qber_model(const QkdModelParams& p, double loss_db, double mu, bool eavesdropper);

enum class QcDeviceRole { Transmitter, Receiver, Transceiver };

// Transmitter<->Receiver or Transceiver<->anything.
bool roles_compatible(QcDeviceRole a, QcDeviceRole b);

enum class PairStatus { Operational, Compromised, Halted };

struct QcPair {
    ChannelId id{};
    NodeId alice{};
    NodeId bob{};
    LinkId link{};
    double mu = 0.2;
    std::set<int> sidebands{1};
    bool eavesdropper_present = false;
    PairStatus status = PairStatus::Operational;

    int n_sidebands() const { return static_cast<int>(sidebands.size()); }
};

struct KeyBlock {
    ChannelId channel{};
    Bytes bits;
    double qber = 0.0;
    SimTime produced_at = 0.0;
};

struct DiscardEvent {
    ChannelId channel{};
    double qber = 0.0;
    SimTime time = 0.0;
};

struct KeyGenOutput {
    std::vector<KeyBlock> blocks;
    std::vector<DiscardEvent> discards;
    bool channel_dead = false; // link Down, sifted rate is zero
};

// Emits floor(rate * duration / (8 * block_bytes)) blocks. Blocks whose
// sampled QBER exceeds the discard threshold become DiscardEvents and mark
// the pair Compromised.
KeyGenOutput generate_key_blocks(QcPair& pair, const Topology& topo, double duration_s,
                                 std::size_t block_bytes, const QkdModelParams& p,
                                 std::mt19937_64& rng, SimTime now = 0.0);

// Ordered (loss_threshold_db, mu) steps set by the administrator.
struct MuPolicy {
    std::vector<std::pair<double, double>> steps;
};

// Picks the mu of the highest threshold <= measured loss; unchanged mu when
// nothing matches (empty policy, unreachable report, loss below all steps).
double adjust_mean_photon(QcPair& pair, const LossReport& report, const MuPolicy& policy,
                          const QkdModelParams& p);

// Smallest unused index >= 1; throws ConfigError at max_sidebands.
int add_sideband_channel(QcPair& pair, const QkdModelParams& p);
void drop_sideband_channel(QcPair& pair, int index);

struct DeviceKey {
    NodeId node{};
    std::uint16_t device{};
    auto operator<=>(const DeviceKey&) const = default;
};

class DeviceRegistry {
public:
    void set_role(NodeId node, std::uint16_t device, QcDeviceRole role);
    QcDeviceRole role(NodeId node, std::uint16_t device) const; // throws ConfigError
    bool can_pair(const DeviceKey& a, const DeviceKey& b) const;

private:
    std::map<DeviceKey, QcDeviceRole> roles_;
};

} // namespace qsdn
