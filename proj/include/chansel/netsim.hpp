#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chansel/rng.hpp"

namespace chansel {

enum class PacketKind { reference, differential, probe, background };
const char* to_string(PacketKind kind);

struct PacketSpec {
    double injection_time_s = 0.0;
    int size_bytes = 0;
    PacketKind kind = PacketKind::background;
    long gop_index = 0;
    int flow_id = 0;  // 0 for video/probe traffic, 1..N for background flows
    double deadline_s = 0.0;
};

struct DeliveryRecord {
    PacketSpec packet;
    // absent when the packet was dropped at the queue (backlog cap)
    std::optional<double> delivery_time_s;
    // true iff delivery_time_s is present and <= deadline
    bool delivered = false;
};

enum class AppClass { youtube, skype_voice, ftp, skype_video, web };
const char* to_string(AppClass cls);
AppClass app_class_from_string(const std::string& name);

// On/off background source: exponential on/off holding times, constant
// packet rate while on.
struct BackgroundFlowModel {
    AppClass app_class = AppClass::web;
    double mean_on_s = 1.0;
    double mean_off_s = 1.0;
    double rate_bps = 1e6;
    int packet_bytes = 1000;
};

std::vector<BackgroundFlowModel> default_roster();

struct SimConfig {
    int num_channels = 3;
    double gop_duration_s = 1.0;
    int frames_per_gop = 30;
    uint64_t seed = 1;
    double nominal_rate_bps = 10e6;
    std::vector<double> channel_rate_bps;  // optional per-channel override
    double base_latency_s = 0.002;
    double backlog_cap_s = 0.09;   // queue capacity in seconds of service at the nominal rate
    double bg_deadline_s = 1.0;    // deadline offset applied to background packets
    double mobility_variance = 0.005;  // variance of the per-slot multiplicative rate factor
    double bg_rate_scale = 1.0;      // scales every roster rate
    // one roster per channel; a single entry is broadcast to all channels
    std::vector<std::vector<BackgroundFlowModel>> roster{default_roster()};

    void validate() const;  // throws std::invalid_argument
    double rate_for_channel(int channel_1based) const;
};

struct ChannelSlotReport {
    int channel = 0;  // 1-based
    double service_rate_bps = 0.0;
    double bg_offered_bps = 0.0;    // background bits injected during the slot
    double bg_delivered_bps = 0.0;  // background bits delivered by their deadline
    std::vector<double> flow_delivered_bps;
    uint32_t flow_on_mask = 0;  // bit i set: roster flow i active at slot end
    int toggle_count = 0;
};

struct SlotReport {
    long slot_index = 0;
    std::vector<ChannelSlotReport> channels;
};

// One contended channel: a fluid FIFO queue with a per-slot service rate,
// plus the background flows loading it. Value type so counterfactual replay
// is a plain copy. Background randomness comes from per-flow streams derived
// from (seed, channel, flow index), so adding a flow to the roster never
// perturbs the realization of the existing ones.
class Channel {
  public:
    Channel(int id_1based, const SimConfig& cfg);

    void begin_slot(double slot_start_s, double duration_s, long slot_index);
    std::vector<DeliveryRecord> transmit(std::span<const PacketSpec> packets,
                                         double slot_start_s, double duration_s,
                                         std::vector<DeliveryRecord>* bg_records);
    ChannelSlotReport finish_slot(double duration_s,
                                  std::vector<DeliveryRecord>* bg_records);

    // service capacity left for a new stream this slot, given already
    // generated background arrivals and queue carry-over
    double available_bps(double slot_start_s, double duration_s) const;

    int id() const { return id_; }
    double service_rate_bps() const { return service_rate_; }
    double clear_time_s() const { return clear_time_; }
    size_t num_flows() const { return flows_.size(); }
    uint64_t state_hash() const;

  private:
    struct FlowState {
        BackgroundFlowModel model;
        Rng rng;
        bool on = false;
        double next_toggle_s = 0.0;
        double next_emit_s = 0.0;
    };

    DeliveryRecord process_packet(const PacketSpec& pkt);
    void account(const DeliveryRecord& rec);

    int id_ = 1;
    double nominal_rate_ = 0.0;
    double base_latency_ = 0.0;
    double cap_bits_ = 0.0;
    double bg_deadline_ = 0.0;
    double mobility_variance_ = 0.0;

    double service_rate_ = 0.0;
    double clear_time_ = 0.0;
    Rng mobility_rng_;
    std::vector<FlowState> flows_;

    // current slot
    long slot_index_ = 0;
    std::vector<PacketSpec> pending_;  // background arrivals not yet serviced
    size_t pending_next_ = 0;
    double last_processed_s_ = -1.0;
    double offered_bits_ = 0.0;
    double delivered_bits_ = 0.0;
    std::vector<double> flow_delivered_bits_;
    int toggle_count_ = 0;
};

// Deterministic multi-channel simulator advancing in GoP slots. For a fixed
// (config, seed) every operation sequence yields bit-identical outputs.
class Simulator {
  public:
    explicit Simulator(SimConfig cfg);

    // Ends the current slot (servicing leftover background arrivals),
    // reports it, and opens the next one.
    SlotReport advance_gop();

    // Injects a burst into the current slot of one channel and returns the
    // per-packet outcome. Packets must fall inside the current slot.
    std::vector<DeliveryRecord> transmit_burst(int channel,
                                               std::span<const PacketSpec> packets);

    // Same result as transmit_burst on an identical state, without mutating
    // the simulator.
    std::vector<DeliveryRecord> counterfactual_replay(
        int channel, std::span<const PacketSpec> packets) const;

    double slot_start_s() const { return slot_start_; }
    long slot_index() const { return slot_index_; }
    double gop_duration_s() const { return cfg_.gop_duration_s; }
    int num_channels() const { return static_cast<int>(channels_.size()); }
    const SimConfig& config() const { return cfg_; }
    const Channel& channel(int channel_1based) const;
    double available_bps(int channel_1based) const;
    uint64_t state_hash() const;

    // receives every DeliveryRecord the simulator produces (injected and
    // background); not copied into counterfactual replays
    using RecordSink = std::function<void(int channel, const DeliveryRecord&)>;
    void set_record_sink(RecordSink sink) { sink_ = std::move(sink); }

  private:
    void check_channel(int channel_1based) const;

    SimConfig cfg_;
    double slot_start_ = 0.0;
    long slot_index_ = 0;
    std::vector<Channel> channels_;
    RecordSink sink_;
};

// Steps a snapshot of one channel forward in time, independently of the
// simulator it was taken from. Used to evaluate "what if the video used this
// channel" without touching real state.
class ChannelReplayer {
  public:
    ChannelReplayer(const Channel& snapshot, double slot_start_s,
                    double duration_s, long slot_index);

    // transmit a burst in the current slot, close the slot, open the next;
    // returns the burst outcome
    std::vector<DeliveryRecord> step(std::span<const PacketSpec> packets);

    double slot_start_s() const { return slot_start_; }
    long slot_index() const { return slot_index_; }

  private:
    Channel channel_;
    double slot_start_;
    double duration_;
    long slot_index_;
};

// arithmetic mean of per-slot background throughput on one channel
double background_throughput(std::span<const SlotReport> window, int channel);

}  // namespace chansel
