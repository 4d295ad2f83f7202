#include "chansel/netsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace chansel {

namespace {

uint64_t mix_double(uint64_t h, double v) {
    return hash_mix(h, std::bit_cast<uint64_t>(v));
}

}  // namespace

const char* to_string(PacketKind kind) {
    switch (kind) {
        case PacketKind::reference: return "reference";
        case PacketKind::differential: return "differential";
        case PacketKind::probe: return "probe";
        case PacketKind::background: return "background";
    }
    return "?";
}

const char* to_string(AppClass cls) {
    switch (cls) {
        case AppClass::youtube: return "youtube";
        case AppClass::skype_voice: return "skype_voice";
        case AppClass::ftp: return "ftp";
        case AppClass::skype_video: return "skype_video";
        case AppClass::web: return "web";
    }
    return "?";
}

AppClass app_class_from_string(const std::string& name) {
    if (name == "youtube") return AppClass::youtube;
    if (name == "skype_voice") return AppClass::skype_voice;
    if (name == "ftp") return AppClass::ftp;
    if (name == "skype_video") return AppClass::skype_video;
    if (name == "web") return AppClass::web;
    throw std::invalid_argument("unknown app class: " + name);
}

std::vector<BackgroundFlowModel> default_roster() {
    // Five coexisting application classes on a 10 Mb/s channel. The youtube
    // and ftp entries drive minute-scale congestion regimes of different
    // depth; the first web entry is a fast on/off source that only overloads
    // the channel while one of them is active, so congested regimes
    // alternate lossy bursts with clean gaps at the seconds scale. The
    // remaining flows provide steady light load.
    return {
        {AppClass::youtube, 95.0, 142.0, 6.0e6, 1400},
        {AppClass::web, 0.7, 0.95, 5.7e6, 1000},
        {AppClass::web, 0.4, 15.0, 16.0e6, 1000},
        {AppClass::skype_video, 90.0, 60.0, 1.2e6, 1200},
        {AppClass::web, 45.0, 24.0, 0.8e6, 1000},
        {AppClass::skype_voice, 120.0, 60.0, 0.15e6, 200},
    };
}

void SimConfig::validate() const {
    if (num_channels < 2) throw std::invalid_argument("num_channels must be >= 2");
    if (frames_per_gop < 1) throw std::invalid_argument("frames_per_gop must be >= 1");
    if (gop_duration_s <= 0) throw std::invalid_argument("gop_duration_s must be > 0");
    if (nominal_rate_bps <= 0) throw std::invalid_argument("nominal_rate_bps must be > 0");
    if (!channel_rate_bps.empty() &&
        channel_rate_bps.size() != static_cast<size_t>(num_channels)) {
        throw std::invalid_argument("channel_rate_bps must list one rate per channel");
    }
    for (double r : channel_rate_bps) {
        if (r <= 0) throw std::invalid_argument("channel rates must be > 0");
    }
    if (base_latency_s < 0) throw std::invalid_argument("base_latency_s must be >= 0");
    if (backlog_cap_s <= 0) throw std::invalid_argument("backlog_cap_s must be > 0");
    if (bg_deadline_s <= 0) throw std::invalid_argument("bg_deadline_s must be > 0");
    if (mobility_variance < 0) throw std::invalid_argument("mobility_variance must be >= 0");
    if (bg_rate_scale <= 0) throw std::invalid_argument("bg_rate_scale must be > 0");
    if (roster.size() != 1 && roster.size() != static_cast<size_t>(num_channels)) {
        throw std::invalid_argument("roster must have one entry or one per channel");
    }
    for (const auto& flows : roster) {
        for (const auto& f : flows) {
            if (f.mean_on_s <= 0 || f.mean_off_s <= 0)
                throw std::invalid_argument("flow on/off durations must be > 0");
            if (f.rate_bps <= 0) throw std::invalid_argument("flow rate must be > 0");
            if (f.packet_bytes < 1) throw std::invalid_argument("flow packet size must be >= 1");
        }
    }
}

double SimConfig::rate_for_channel(int channel_1based) const {
    if (channel_rate_bps.empty()) return nominal_rate_bps;
    return channel_rate_bps[channel_1based - 1];
}

Channel::Channel(int id_1based, const SimConfig& cfg)
    : id_(id_1based),
      nominal_rate_(cfg.rate_for_channel(id_1based)),
      base_latency_(cfg.base_latency_s),
      cap_bits_(cfg.backlog_cap_s * cfg.rate_for_channel(id_1based)),
      bg_deadline_(cfg.bg_deadline_s),
      mobility_variance_(cfg.mobility_variance),
      service_rate_(cfg.rate_for_channel(id_1based)),
      mobility_rng_(derive_seed(cfg.seed, "mobility", static_cast<uint64_t>(id_1based))) {
    const auto& roster =
        cfg.roster.size() == 1 ? cfg.roster[0] : cfg.roster[id_1based - 1];
    flows_.reserve(roster.size());
    for (size_t i = 0; i < roster.size(); ++i) {
        FlowState fs{roster[i],
                     Rng(derive_seed(cfg.seed, "bgflow",
                                     static_cast<uint64_t>(id_1based), i)),
                     false, 0.0, 0.0};
        fs.model.rate_bps *= cfg.bg_rate_scale;
        // start in the stationary regime: on with probability duty cycle,
        // residual holding time is again exponential (memoryless)
        double duty = fs.model.mean_on_s / (fs.model.mean_on_s + fs.model.mean_off_s);
        fs.on = fs.rng.uniform() < duty;
        fs.next_toggle_s =
            fs.rng.exponential(fs.on ? fs.model.mean_on_s : fs.model.mean_off_s);
        fs.next_emit_s = 0.0;
        flows_.push_back(std::move(fs));
    }
    flow_delivered_bits_.assign(flows_.size(), 0.0);
}

void Channel::begin_slot(double slot_start_s, double duration_s, long slot_index) {
    slot_index_ = slot_index;
    offered_bits_ = 0.0;
    delivered_bits_ = 0.0;
    flow_delivered_bits_.assign(flows_.size(), 0.0);
    toggle_count_ = 0;
    pending_.clear();
    pending_next_ = 0;
    last_processed_s_ = -1.0;

    if (mobility_variance_ > 0.0) {
        double factor = 1.0 + std::sqrt(mobility_variance_) * mobility_rng_.normal();
        service_rate_ = nominal_rate_ * std::clamp(factor, 0.05, 4.0);
    } else {
        service_rate_ = nominal_rate_;
    }

    const double slot_end = slot_start_s + duration_s;
    struct Arrival {
        double time;
        size_t flow;
    };
    std::vector<Arrival> arrivals;
    for (size_t i = 0; i < flows_.size(); ++i) {
        FlowState& f = flows_[i];
        const double interval = f.model.packet_bytes * 8.0 / f.model.rate_bps;
        auto emit_until = [&](double limit) {
            while (f.on && f.next_emit_s < limit) {
                if (f.next_emit_s >= slot_start_s)
                    arrivals.push_back({f.next_emit_s, i});
                f.next_emit_s += interval;
            }
        };
        while (f.next_toggle_s < slot_end) {
            if (f.on) {
                emit_until(f.next_toggle_s);
                f.on = false;
                f.next_toggle_s += f.rng.exponential(f.model.mean_off_s);
            } else {
                f.on = true;
                f.next_emit_s = f.next_toggle_s;
                f.next_toggle_s += f.rng.exponential(f.model.mean_on_s);
            }
            ++toggle_count_;
        }
        emit_until(slot_end);
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return a.time != b.time ? a.time < b.time : a.flow < b.flow;
    });
    pending_.reserve(arrivals.size());
    for (const Arrival& a : arrivals) {
        const auto& m = flows_[a.flow].model;
        pending_.push_back(PacketSpec{a.time, m.packet_bytes, PacketKind::background,
                                      slot_index_, static_cast<int>(a.flow) + 1,
                                      a.time + bg_deadline_});
        offered_bits_ += m.packet_bytes * 8.0;
    }
}

DeliveryRecord Channel::process_packet(const PacketSpec& pkt) {
    const double t = pkt.injection_time_s;
    const double bits = pkt.size_bytes * 8.0;
    DeliveryRecord rec{pkt, std::nullopt, false};
    const double backlog_bits = std::max(0.0, clear_time_ - t) * service_rate_;
    if (backlog_bits + bits > cap_bits_) {
        // queue overflow: dropped, no delivery time
    } else {
        const double start = std::max(t, clear_time_);
        const double finish = start + bits / service_rate_;
        clear_time_ = finish;
        const double delivery = finish + base_latency_;
        rec.delivery_time_s = delivery;
        rec.delivered = delivery <= pkt.deadline_s;
    }
    last_processed_s_ = t;
    return rec;
}

void Channel::account(const DeliveryRecord& rec) {
    if (rec.packet.kind != PacketKind::background || !rec.delivered) return;
    const double bits = rec.packet.size_bytes * 8.0;
    delivered_bits_ += bits;
    flow_delivered_bits_[rec.packet.flow_id - 1] += bits;
}

std::vector<DeliveryRecord> Channel::transmit(std::span<const PacketSpec> packets,
                                              double slot_start_s, double duration_s,
                                              std::vector<DeliveryRecord>* bg_records) {
    const double slot_end = slot_start_s + duration_s;
    for (const PacketSpec& p : packets) {
        if (p.size_bytes <= 0) throw std::invalid_argument("packet size must be > 0");
        if (p.deadline_s <= p.injection_time_s)
            throw std::invalid_argument("packet deadline must be after injection");
        if (p.gop_index < 0) throw std::invalid_argument("gop_index must be >= 0");
        if (p.injection_time_s < slot_start_s || p.injection_time_s >= slot_end)
            throw std::invalid_argument("packet injection time outside current slot");
    }
    // bursts are processed in arrival order against the slot's background
    std::vector<size_t> order(packets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return packets[a].injection_time_s < packets[b].injection_time_s;
    });
    if (!packets.empty() &&
        packets[order.front()].injection_time_s < last_processed_s_) {
        throw std::invalid_argument("bursts within a slot must arrive in order");
    }

    std::vector<DeliveryRecord> out(packets.size());
    size_t bi = pending_next_;
    size_t fi = 0;
    while (fi < order.size()) {
        const PacketSpec& fg = packets[order[fi]];
        // background wins ties: it was already in flight
        while (bi < pending_.size() &&
               pending_[bi].injection_time_s <= fg.injection_time_s) {
            DeliveryRecord rec = process_packet(pending_[bi]);
            account(rec);
            if (bg_records) bg_records->push_back(std::move(rec));
            ++bi;
        }
        out[order[fi]] = process_packet(fg);
        ++fi;
    }
    while (bi < pending_.size()) {
        DeliveryRecord rec = process_packet(pending_[bi]);
        account(rec);
        if (bg_records) bg_records->push_back(std::move(rec));
        ++bi;
    }
    pending_next_ = pending_.size();
    return out;
}

ChannelSlotReport Channel::finish_slot(double duration_s,
                                       std::vector<DeliveryRecord>* bg_records) {
    while (pending_next_ < pending_.size()) {
        DeliveryRecord rec = process_packet(pending_[pending_next_]);
        account(rec);
        if (bg_records) bg_records->push_back(std::move(rec));
        ++pending_next_;
    }
    ChannelSlotReport rep;
    rep.channel = id_;
    rep.service_rate_bps = service_rate_;
    rep.bg_offered_bps = offered_bits_ / duration_s;
    rep.bg_delivered_bps = delivered_bits_ / duration_s;
    rep.flow_delivered_bps.resize(flows_.size());
    for (size_t i = 0; i < flows_.size(); ++i)
        rep.flow_delivered_bps[i] = flow_delivered_bits_[i] / duration_s;
    rep.flow_on_mask = 0;
    for (size_t i = 0; i < flows_.size(); ++i)
        if (flows_[i].on) rep.flow_on_mask |= (1u << i);
    rep.toggle_count = toggle_count_;
    return rep;
}

double Channel::available_bps(double slot_start_s, double duration_s) const {
    const double carry_bits = std::max(0.0, clear_time_ - slot_start_s) * service_rate_;
    double upcoming_bits = 0.0;  // background arrivals not yet serviced
    for (size_t i = pending_next_; i < pending_.size(); ++i)
        upcoming_bits += pending_[i].size_bytes * 8.0;
    const double free_bits = service_rate_ * duration_s - carry_bits - upcoming_bits;
    return std::max(0.0, free_bits / duration_s);
}

uint64_t Channel::state_hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    h = hash_mix(h, static_cast<uint64_t>(id_));
    h = mix_double(h, service_rate_);
    h = mix_double(h, clear_time_);
    h = hash_mix(h, mobility_rng_.state_hash());
    for (const FlowState& f : flows_) {
        h = hash_mix(h, f.rng.state_hash());
        h = hash_mix(h, f.on ? 1 : 0);
        h = mix_double(h, f.next_toggle_s);
        h = mix_double(h, f.next_emit_s);
    }
    h = hash_mix(h, pending_.size() - pending_next_);
    for (size_t i = pending_next_; i < pending_.size(); ++i) {
        h = mix_double(h, pending_[i].injection_time_s);
        h = hash_mix(h, static_cast<uint64_t>(pending_[i].size_bytes));
    }
    h = mix_double(h, offered_bits_);
    h = mix_double(h, delivered_bits_);
    return h;
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    channels_.reserve(cfg_.num_channels);
    for (int c = 1; c <= cfg_.num_channels; ++c) channels_.emplace_back(c, cfg_);
    for (auto& ch : channels_) ch.begin_slot(0.0, cfg_.gop_duration_s, 0);
}

void Simulator::check_channel(int channel_1based) const {
    if (channel_1based < 1 || channel_1based > num_channels())
        throw std::invalid_argument("unknown channel " + std::to_string(channel_1based));
}

const Channel& Simulator::channel(int channel_1based) const {
    check_channel(channel_1based);
    return channels_[channel_1based - 1];
}

double Simulator::available_bps(int channel_1based) const {
    check_channel(channel_1based);
    return channels_[channel_1based - 1].available_bps(slot_start_, cfg_.gop_duration_s);
}

SlotReport Simulator::advance_gop() {
    SlotReport report;
    report.slot_index = slot_index_;
    report.channels.reserve(channels_.size());
    std::vector<DeliveryRecord> bg;
    for (auto& ch : channels_) {
        bg.clear();
        report.channels.push_back(
            ch.finish_slot(cfg_.gop_duration_s, sink_ ? &bg : nullptr));
        if (sink_)
            for (const auto& rec : bg) sink_(ch.id(), rec);
    }
    ++slot_index_;
    slot_start_ += cfg_.gop_duration_s;
    for (auto& ch : channels_)
        ch.begin_slot(slot_start_, cfg_.gop_duration_s, slot_index_);
    return report;
}

std::vector<DeliveryRecord> Simulator::transmit_burst(
    int channel, std::span<const PacketSpec> packets) {
    check_channel(channel);
    std::vector<DeliveryRecord> bg;
    auto out = channels_[channel - 1].transmit(packets, slot_start_,
                                               cfg_.gop_duration_s,
                                               sink_ ? &bg : nullptr);
    if (sink_) {
        for (const auto& rec : bg) sink_(channel, rec);
        for (const auto& rec : out) sink_(channel, rec);
    }
    return out;
}

std::vector<DeliveryRecord> Simulator::counterfactual_replay(
    int channel, std::span<const PacketSpec> packets) const {
    check_channel(channel);
    Channel copy = channels_[channel - 1];
    return copy.transmit(packets, slot_start_, cfg_.gop_duration_s, nullptr);
}

uint64_t Simulator::state_hash() const {
    uint64_t h = 0x84222325cbf29ce4ULL;
    h = mix_double(h, slot_start_);
    h = hash_mix(h, static_cast<uint64_t>(slot_index_));
    for (const auto& ch : channels_) h = hash_mix(h, ch.state_hash());
    return h;
}

ChannelReplayer::ChannelReplayer(const Channel& snapshot, double slot_start_s,
                                 double duration_s, long slot_index)
    : channel_(snapshot),
      slot_start_(slot_start_s),
      duration_(duration_s),
      slot_index_(slot_index) {}

std::vector<DeliveryRecord> ChannelReplayer::step(std::span<const PacketSpec> packets) {
    auto out = channel_.transmit(packets, slot_start_, duration_, nullptr);
    channel_.finish_slot(duration_, nullptr);
    ++slot_index_;
    slot_start_ += duration_;
    channel_.begin_slot(slot_start_, duration_, slot_index_);
    return out;
}

double background_throughput(std::span<const SlotReport> window, int channel) {
    if (window.empty()) throw std::invalid_argument("empty slot window");
    double sum = 0.0;
    for (const SlotReport& slot : window) {
        bool found = false;
        for (const auto& ch : slot.channels) {
            if (ch.channel == channel) {
                sum += ch.bg_delivered_bps;
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("channel missing from slot report");
    }
    return sum / static_cast<double>(window.size());
}

}  // namespace chansel
