#pragma once

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chansel/features.hpp"
#include "chansel/netsim.hpp"
#include "chansel/predictor.hpp"
#include "chansel/probing.hpp"
#include "chansel/videostream.hpp"

namespace chansel {

enum class Policy { fixed, delay, predictive, oracle, abr };
Policy policy_from_string(const std::string& name);
const char* to_string(Policy policy);

// argmax of the classifier soft scores; ties go to the lowest channel index
int select_predictive(std::span<const double> scores);

// argmin of the last slot's average packet delay; ties go to the lowest index
int select_delay_based(std::span<const double> last_avg_delay_s);

// argmax over per-channel means of future PSNR windows
int select_oracle(std::span<const std::vector<double>> psnr_windows);

// Everything a per-GoP run needs besides the simulator itself.
struct StreamSetup {
    EncoderProfile profile;
    ProbeConfig probes;
    PsnrModel psnr;
    int history_len = 10;        // H
    int label_window = 10;       // W, horizon of the oracle
    double inference_allowance_s = 5e-6;  // shaves the delivery deadline
    uint64_t packet_seed = 1;
    AbrTable abr = AbrTable::builtin();
};

// PSNRs the video would achieve on one channel over the next `gops` slots,
// evaluated on a snapshot. The real simulator state is untouched; repeated
// calls return identical values.
std::vector<double> replay_psnr_window(const Simulator& sim, int channel, int gops,
                                       const StreamSetup& setup);

struct SelectionState {
    int current_channel = 1;
    // per channel, newest first; fed by video packets on the current channel
    // and by probes elsewhere
    std::vector<std::deque<SlotFeatures>> histories;
    std::vector<double> scores;
    long slots_observed = 0;
};

struct StepOutput {
    long gop_index = 0;
    int channel = 0;
    double psnr_db = 0.0;
    // observed features this slot; channels without traffic (no probing
    // policy) hold nullopt
    std::vector<std::optional<SlotFeatures>> slot_features;
    SlotReport report;
    double abr_bitrate_bps = 0.0;  // only set by the abr policy
};

// Drives one experiment: per GoP it picks a channel with the configured
// policy (using only information from earlier slots), transmits the video
// there, probes the other channels when the policy consumes probe features,
// and closes the slot.
class OnlineEngine {
  public:
    OnlineEngine(Policy policy, SimConfig sim_cfg, StreamSetup setup,
                 const CnnModel* video_model, const CnnModel* probe_model);

    // channel used during warm-up and by the fixed policy (default 1)
    void set_initial_channel(int channel);

    StepOutput step();

    const Simulator& sim() const { return sim_; }
    Simulator& sim() { return sim_; }
    const SelectionState& state() const { return state_; }

  private:
    int choose_channel();
    bool uses_probes() const;

    Policy policy_;
    StreamSetup setup_;
    Simulator sim_;
    SelectionState state_;
    const CnnModel* video_model_;
    const CnnModel* probe_model_;
};

}  // namespace chansel
