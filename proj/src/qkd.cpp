#include "qsdn/qkd.hpp"

#include <algorithm>
#include <cmath>

namespace qsdn {

double QkdModelParams::qber_noise_slope() const {
    const double t_cal = std::pow(10.0, loss_cal_db / 10.0);
    const double t_20 = std::pow(10.0, 20.0 / 10.0);
    return (qber_at_20db - qber_cal) / (t_20 - t_cal);
}

namespace {

void check_domain(const QkdModelParams& p, double loss_db, double mu) {
    if (loss_db < 0)
        throw ConfigError("negative loss");
    if (!(mu > 0) || mu > p.mu_max)
        throw ConfigError("mean photon number out of range");
}

} // namespace

double sifted_rate_bps(const QkdModelParams& p, double loss_db, double mu, int n_sidebands) {
    check_domain(p, loss_db, mu);
    if (n_sidebands < 1)
        throw ConfigError("need at least one sideband channel");
    return p.rate_cal_bps * (mu / p.mu_cal) * std::pow(10.0, -(loss_db - p.loss_cal_db) / 10.0) *
           n_sidebands;
}

double qber_model(const QkdModelParams& p, double loss_db, double mu, bool eavesdropper) {
    check_domain(p, loss_db, mu);
    if (eavesdropper)
        return p.qber_eavesdrop;
    const double t = std::pow(10.0, loss_db / 10.0);
    const double t_cal = std::pow(10.0, p.loss_cal_db / 10.0);
    const double q = p.qber_cal + p.qber_noise_slope() * (t - t_cal);
    return std::clamp(q, 0.0, 1.0);
}

bool roles_compatible(QcDeviceRole a, QcDeviceRole b) {
    if (a == QcDeviceRole::Transceiver || b == QcDeviceRole::Transceiver)
        return true;
    return (a == QcDeviceRole::Transmitter && b == QcDeviceRole::Receiver) ||
           (a == QcDeviceRole::Receiver && b == QcDeviceRole::Transmitter);
}

KeyGenOutput generate_key_blocks(QcPair& pair, const Topology& topo, double duration_s,
                                 std::size_t block_bytes, const QkdModelParams& p,
                                 std::mt19937_64& rng, SimTime now) {
    if (pair.status == PairStatus::Halted)
        throw ConfigError("pair is halted");
    if (block_bytes < 1 || duration_s < 0)
        throw ConfigError("bad generation parameters");

    KeyGenOutput out;
    const LinkState& link = topo.link(pair.link);
    if (link.status == LinkStatus::Down) {
        out.channel_dead = true;
        return out;
    }
    if (pair.n_sidebands() == 0)
        return out; // all sideband channels dropped, rate is zero

    const double loss = link.total_loss_db();
    const double rate = sifted_rate_bps(p, loss, pair.mu, pair.n_sidebands());
    const double q_mean = qber_model(p, loss, pair.mu, pair.eavesdropper_present);
    const auto n_blocks =
        static_cast<std::uint64_t>(rate * duration_s / (8.0 * static_cast<double>(block_bytes)));

    std::normal_distribution<double> qber_noise(0.0, p.qber_sigma);
    std::uniform_int_distribution<int> byte_dist(0, 255);
    bool compromised = false;
    for (std::uint64_t i = 0; i < n_blocks; ++i) {
        double q = q_mean;
        if (p.qber_sigma > 0)
            q = std::clamp(q_mean + qber_noise(rng), 0.0, 1.0);
        if (q > p.qber_discard) {
            out.discards.push_back({pair.id, q, now});
            compromised = true;
            continue;
        }
        KeyBlock block;
        block.channel = pair.id;
        block.qber = q;
        block.produced_at = now;
        block.bits.resize(block_bytes);
        for (auto& byte : block.bits)
            byte = static_cast<std::uint8_t>(byte_dist(rng));
        out.blocks.push_back(std::move(block));
    }
    if (n_blocks > 0)
        pair.status = compromised ? PairStatus::Compromised : PairStatus::Operational;
    return out;
}

double adjust_mean_photon(QcPair& pair, const LossReport& report, const MuPolicy& policy,
                          const QkdModelParams& p) {
    if (report.link != pair.link)
        throw ConfigError("loss report is for a different link");
    if (policy.steps.empty() || report.unreachable)
        return pair.mu;
    const double* chosen = nullptr;
    double best_threshold = 0.0;
    for (const auto& [threshold, mu] : policy.steps) {
        if (threshold <= report.measured_loss_db &&
            (chosen == nullptr || threshold >= best_threshold)) {
            chosen = &mu;
            best_threshold = threshold;
        }
    }
    if (chosen == nullptr)
        return pair.mu;
    pair.mu = std::clamp(*chosen, std::nextafter(0.0, 1.0), p.mu_max);
    return pair.mu;
}

int add_sideband_channel(QcPair& pair, const QkdModelParams& p) {
    if (pair.n_sidebands() >= p.max_sidebands)
        throw ConfigError("sideband capacity exceeded");
    int index = 1;
    while (pair.sidebands.count(index))
        ++index;
    pair.sidebands.insert(index);
    return index;
}

void drop_sideband_channel(QcPair& pair, int index) {
    if (pair.sidebands.erase(index) == 0)
        throw ConfigError("unknown sideband index " + std::to_string(index));
}

void DeviceRegistry::set_role(NodeId node, std::uint16_t device, QcDeviceRole role) {
    roles_[{node, device}] = role;
}

QcDeviceRole DeviceRegistry::role(NodeId node, std::uint16_t device) const {
    auto it = roles_.find({node, device});
    if (it == roles_.end())
        throw ConfigError("unknown device");
    return it->second;
}

bool DeviceRegistry::can_pair(const DeviceKey& a, const DeviceKey& b) const {
    return roles_compatible(role(a.node, a.device), role(b.node, b.device));
}

} // namespace qsdn
