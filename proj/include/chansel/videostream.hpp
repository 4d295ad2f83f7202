#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chansel/netsim.hpp"

namespace chansel {

struct EncoderProfile {
    int frames_per_gop = 30;
    int ref_frame_packets = 42;
    int packet_bytes = 1400;
    int diff_packets_min = 2;
    int diff_packets_max = 4;
    double frame_rate_fps = 30.0;

    void validate() const;
};

// Packetizes one GoP: frame 0 is the reference frame (a fixed burst), every
// later frame a small burst of differential packets. Frame i is injected at
// slot_start + i / frame_rate. Burst sizes are a pure function of
// (seed, gop_index, frame), so a replayed GoP always packetizes identically.
std::vector<PacketSpec> packetize_gop(long gop_index, const EncoderProfile& profile,
                                      double slot_start_s, double deadline_s,
                                      uint64_t packet_seed);

// Surrogate for decoded video quality: linear penalties per lost packet,
// clamped to a fixed dB range. A packet counts as lost when its delivery
// flag is 0, whether it was dropped or merely late.
struct PsnrModel {
    double psnr_max_db = 55.0;
    double psnr_min_db = 15.0;
    double w_ref_db = 1.5;
    double w_diff_db = 0.5;
};

double compute_psnr(std::span<const DeliveryRecord> records,
                    const PsnrModel& model = {});

struct GopOutcome {
    long gop_index = 0;
    std::vector<DeliveryRecord> records;
    double psnr_db = 0.0;
};

struct AbrTier {
    double bitrate_bps = 0.0;
    long file_size_bytes = 0;
    double avg_psnr_db = 0.0;
};

// Bitrate -> (file size, achievable PSNR) ladder used by the ABR baseline.
class AbrTable {
  public:
    static AbrTable builtin();
    static AbrTable load_csv(const std::string& path);
    void save_csv(const std::string& path) const;

    explicit AbrTable(std::vector<AbrTier> tiers);
    std::span<const AbrTier> tiers() const { return tiers_; }

  private:
    std::vector<AbrTier> tiers_;  // sorted by decreasing bitrate
};

// highest tier whose bitrate fits the predicted throughput; the lowest tier
// when none does
std::pair<double, double> abr_select(double predicted_throughput_bps,
                                     const AbrTable& table);

}  // namespace chansel
