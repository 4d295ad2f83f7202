#pragma once

#include <map>
#include <span>
#include <vector>

#include "chansel/netsim.hpp"

namespace chansel {

struct ProbeConfig {
    int burst_size = 50;
    int packet_bytes = 100;

    void validate() const;
};

// A packet train: burst_size probe packets injected back-to-back at the
// start of the slot. Probes carry the same deadline as the video packets so
// their delivery flags mean the same thing.
std::vector<PacketSpec> make_probe_burst(long gop_index, double slot_start_s,
                                         const ProbeConfig& cfg, double deadline_s);

// Transmits a probe burst on every channel except the one carrying video;
// returns the outcomes keyed by channel.
std::map<int, std::vector<DeliveryRecord>> schedule_probes(Simulator& sim,
                                                           int video_channel,
                                                           const ProbeConfig& cfg,
                                                           double deadline_s);

}  // namespace chansel
