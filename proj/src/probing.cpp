#include "chansel/probing.hpp"

#include <stdexcept>

namespace chansel {

void ProbeConfig::validate() const {
    if (burst_size < 1) throw std::invalid_argument("probe burst_size must be >= 1");
    if (packet_bytes < 1) throw std::invalid_argument("probe packet_bytes must be >= 1");
}

std::vector<PacketSpec> make_probe_burst(long gop_index, double slot_start_s,
                                         const ProbeConfig& cfg, double deadline_s) {
    cfg.validate();
    std::vector<PacketSpec> out;
    out.reserve(cfg.burst_size);
    for (int i = 0; i < cfg.burst_size; ++i) {
        out.push_back(PacketSpec{slot_start_s, cfg.packet_bytes, PacketKind::probe,
                                 gop_index, 0, deadline_s});
    }
    return out;
}

std::map<int, std::vector<DeliveryRecord>> schedule_probes(Simulator& sim,
                                                           int video_channel,
                                                           const ProbeConfig& cfg,
                                                           double deadline_s) {
    if (video_channel < 1 || video_channel > sim.num_channels())
        throw std::invalid_argument("unknown video channel");
    std::map<int, std::vector<DeliveryRecord>> out;
    const auto burst =
        make_probe_burst(sim.slot_index(), sim.slot_start_s(), cfg, deadline_s);
    for (int c = 1; c <= sim.num_channels(); ++c) {
        if (c == video_channel) continue;
        out.emplace(c, sim.transmit_burst(c, burst));
    }
    return out;
}

}  // namespace chansel
