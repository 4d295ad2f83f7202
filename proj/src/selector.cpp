#include "chansel/selector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chansel {

Policy policy_from_string(const std::string& name) {
    if (name == "fixed") return Policy::fixed;
    if (name == "delay") return Policy::delay;
    if (name == "predictive") return Policy::predictive;
    if (name == "oracle") return Policy::oracle;
    if (name == "abr") return Policy::abr;
    throw std::invalid_argument("unknown policy: " + name);
}

const char* to_string(Policy policy) {
    switch (policy) {
        case Policy::fixed: return "fixed";
        case Policy::delay: return "delay";
        case Policy::predictive: return "predictive";
        case Policy::oracle: return "oracle";
        case Policy::abr: return "abr";
    }
    return "?";
}

int select_predictive(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("no scores to select from");
    int best = 1;
    for (size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best - 1]) best = static_cast<int>(c) + 1;
    }
    return best;
}

int select_delay_based(std::span<const double> last_avg_delay_s) {
    if (last_avg_delay_s.empty()) throw std::invalid_argument("no delays to select from");
    int best = 1;
    for (size_t c = 1; c < last_avg_delay_s.size(); ++c) {
        if (last_avg_delay_s[c] < last_avg_delay_s[best - 1])
            best = static_cast<int>(c) + 1;
    }
    return best;
}

int select_oracle(std::span<const std::vector<double>> psnr_windows) {
    if (psnr_windows.empty()) throw std::invalid_argument("no windows to select from");
    const size_t w = psnr_windows.front().size();
    std::vector<double> means;
    means.reserve(psnr_windows.size());
    for (const auto& window : psnr_windows) {
        if (window.size() != w) throw std::invalid_argument("window length mismatch");
        double sum = 0.0;
        for (double phi : window) sum += phi;
        means.push_back(sum / static_cast<double>(w));
    }
    return select_predictive(means);
}

std::vector<double> replay_psnr_window(const Simulator& sim, int channel, int gops,
                                       const StreamSetup& setup) {
    ChannelReplayer replay(sim.channel(channel), sim.slot_start_s(),
                           sim.gop_duration_s(), sim.slot_index());
    std::vector<double> psnr;
    psnr.reserve(gops);
    for (int i = 0; i < gops; ++i) {
        const double slot_start = replay.slot_start_s();
        const double deadline =
            slot_start + sim.gop_duration_s() - setup.inference_allowance_s;
        const auto packets = packetize_gop(replay.slot_index(), setup.profile,
                                           slot_start, deadline, setup.packet_seed);
        const auto records = replay.step(packets);
        psnr.push_back(compute_psnr(records, setup.psnr));
    }
    return psnr;
}

OnlineEngine::OnlineEngine(Policy policy, SimConfig sim_cfg, StreamSetup setup,
                           const CnnModel* video_model, const CnnModel* probe_model)
    : policy_(policy),
      setup_(std::move(setup)),
      sim_(std::move(sim_cfg)),
      video_model_(video_model),
      probe_model_(probe_model) {
    if (policy_ == Policy::predictive && (!video_model_ || !probe_model_))
        throw std::invalid_argument("predictive policy requires both classifiers");
    state_.histories.resize(sim_.num_channels());
    state_.scores.assign(sim_.num_channels(), 0.0);
}

void OnlineEngine::set_initial_channel(int channel) {
    if (channel < 1 || channel > sim_.num_channels())
        throw std::invalid_argument("initial channel out of range");
    if (state_.slots_observed != 0)
        throw std::logic_error("initial channel must be set before stepping");
    state_.current_channel = channel;
}

bool OnlineEngine::uses_probes() const {
    return policy_ == Policy::delay || policy_ == Policy::predictive;
}

int OnlineEngine::choose_channel() {
    const int warmup = setup_.history_len + 1;
    switch (policy_) {
        case Policy::fixed:
        case Policy::abr:
            return state_.current_channel;
        case Policy::delay: {
            if (state_.slots_observed < warmup) return state_.current_channel;
            std::vector<double> delays(sim_.num_channels());
            for (int c = 1; c <= sim_.num_channels(); ++c)
                delays[c - 1] = state_.histories[c - 1].front().avg_delay_s;
            return select_delay_based(delays);
        }
        case Policy::predictive: {
            if (state_.slots_observed < warmup) return state_.current_channel;
            return select_predictive(state_.scores);
        }
        case Policy::oracle: {
            std::vector<std::vector<double>> windows;
            windows.reserve(sim_.num_channels());
            for (int c = 1; c <= sim_.num_channels(); ++c)
                windows.push_back(
                    replay_psnr_window(sim_, c, setup_.label_window, setup_));
            return select_oracle(windows);
        }
    }
    return state_.current_channel;
}

StepOutput OnlineEngine::step() {
    StepOutput out;
    out.gop_index = sim_.slot_index();
    const double slot_start = sim_.slot_start_s();
    const double deadline =
        slot_start + sim_.gop_duration_s() - setup_.inference_allowance_s;

    const int chosen = choose_channel();
    state_.current_channel = chosen;
    out.channel = chosen;

    if (policy_ == Policy::abr) {
        const auto [bitrate, tier_psnr] =
            abr_select(sim_.available_bps(chosen), setup_.abr);
        out.abr_bitrate_bps = bitrate;
        out.psnr_db = tier_psnr;
    }

    const auto video_packets = packetize_gop(out.gop_index, setup_.profile,
                                             slot_start, deadline, setup_.packet_seed);
    const auto video_records = sim_.transmit_burst(chosen, video_packets);
    if (policy_ != Policy::abr)
        out.psnr_db = compute_psnr(video_records, setup_.psnr);

    out.slot_features.assign(sim_.num_channels(), std::nullopt);
    out.slot_features[chosen - 1] =
        extract_slot_features(video_records, sim_.gop_duration_s());
    if (uses_probes()) {
        const auto probe_records =
            schedule_probes(sim_, chosen, setup_.probes, deadline);
        for (const auto& [c, records] : probe_records)
            out.slot_features[c - 1] =
                extract_slot_features(records, sim_.gop_duration_s());
    }

    for (int c = 1; c <= sim_.num_channels(); ++c) {
        if (!out.slot_features[c - 1]) continue;
        auto& hist = state_.histories[c - 1];
        hist.push_front(*out.slot_features[c - 1]);
        while (hist.size() > static_cast<size_t>(setup_.history_len) + 1)
            hist.pop_back();
    }
    ++state_.slots_observed;

    if (policy_ == Policy::predictive &&
        state_.slots_observed >= setup_.history_len + 1) {
        for (int c = 1; c <= sim_.num_channels(); ++c) {
            const auto& hist = state_.histories[c - 1];
            std::vector<SlotFeatures> newest_first(hist.begin(), hist.end());
            const FeatureMatrix mat = build_feature_matrix(newest_first);
            const CnnModel* model = c == chosen ? video_model_ : probe_model_;
            state_.scores[c - 1] = model->calibration.apply(score(*model, mat));
        }
    }

    out.report = sim_.advance_gop();
    return out;
}

}  // namespace chansel
