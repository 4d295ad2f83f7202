#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chansel/config.hpp"
#include "chansel/features.hpp"
#include "chansel/netsim.hpp"
#include "chansel/predictor.hpp"
#include "chansel/probing.hpp"
#include "chansel/selector.hpp"
#include "chansel/videostream.hpp"

namespace chansel {

struct ExperimentConfig {
    SimConfig sim;
    EncoderProfile video;
    ProbeConfig probe;
    LabelConfig label;
    CnnArch arch;
    TrainConfig train;
    Policy policy = Policy::predictive;
    long num_gops = 5000;
    int history_len = 10;
    double inference_allowance_s = 5e-6;
    int rotation_period = 50;

    void validate() const;
    StreamSetup stream_setup() const;
};

ExperimentConfig experiment_from_config(const ConfigMap& cfg);

// -------------------------------------------------------------------------
// dataset generation

struct DatasetBundle {
    Dataset video;
    Dataset probe;
    NormStats video_stats;  // whole-file statistics, recorded in the metadata
    NormStats probe_stats;
    double video_class1_fraction = 0.0;
    double probe_class1_fraction = 0.0;
};

// Runs the simulator for num_gops slots, rotating the video across channels
// every rotation_period GoPs and probing the rest. Each kept slot yields one
// video-sourced row and C-1 probe-sourced rows; the label comes from a
// counterfactual replay of the video over the next W slots of that channel.
DatasetBundle gen_dataset(const ExperimentConfig& cfg);

void write_dataset(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                   const std::string& dir);
Dataset read_dataset_csv(const std::string& path);

// -------------------------------------------------------------------------
// offline ablations

enum class AblationAxis { probe_burst, history };

struct AblationPoint {
    int axis_value = 0;
    double video_accuracy = 0.0;
    double probe_accuracy = 0.0;
};

std::vector<AblationPoint> ablate_offline(const ExperimentConfig& cfg,
                                          AblationAxis axis,
                                          std::span<const int> values);
void write_ablation_csv(std::span<const AblationPoint> table, AblationAxis axis,
                        const std::string& path);

// truncate every row's history to H' (keeping the newest H'+1 slots)
Dataset slice_history(const Dataset& dataset, int new_history_len);

// -------------------------------------------------------------------------
// online runs

struct GopLogRow {
    long gop_index = 0;
    int channel = 0;
    double psnr_db = 0.0;
    double abr_bitrate_bps = 0.0;
    std::vector<std::optional<SlotFeatures>> per_channel;
};

struct ResultBundle {
    std::string policy;
    uint64_t seed = 0;
    long num_gops = 0;
    int num_channels = 0;
    std::vector<GopLogRow> log;
    double mean_psnr_db = 0.0;
    std::vector<std::pair<double, double>> cdf;  // (psnr_db, cum_fraction)
    long switches = 0;
    std::vector<double> mean_bg_delivered_bps;  // per channel
    // digest of per-slot background arrivals and toggles; equal digests mean
    // equal background realizations across policies
    uint64_t bg_realization_hash = 0;
};

ResultBundle run_online(const ExperimentConfig& cfg, const CnnModel* video_model,
                        const CnnModel* probe_model,
                        const std::string& event_log_path = "");

// recompute mean and CDF from the per-GoP log
void finalize_bundle(ResultBundle& bundle, const PsnrModel& psnr);

void write_report(const ResultBundle& bundle, const std::string& dir);
ResultBundle read_per_gop_csv(const std::string& path);

// -------------------------------------------------------------------------
// probe/video impact on background traffic

enum class InjectedStream { none, probes, video };
InjectedStream injected_from_string(const std::string& name);
const char* to_string(InjectedStream injected);

struct DegradationRow {
    AppClass app_class;
    double baseline_bps = 0.0;
    double injected_bps = 0.0;
    std::optional<double> loss_fraction;  // absent when the baseline is zero
};

struct DegradationResult {
    InjectedStream injected = InjectedStream::none;
    int probe_burst = 0;
    std::vector<DegradationRow> per_class;
    double aggregate_baseline_bps = 0.0;
    double aggregate_injected_bps = 0.0;
    std::optional<double> aggregate_loss_fraction;
};

// Injects the chosen stream on channel 1 every slot and compares the
// delivered background throughput of that channel, per application class,
// against a no-injection run of the same seed.
DegradationResult measure_degradation(const ExperimentConfig& cfg,
                                      InjectedStream injected, int probe_burst);
void write_degradation(const DegradationResult& result, const std::string& dir);

// round-trip safe decimal formatting for doubles in CSV/JSON artifacts
std::string fmt_double(double v);

}  // namespace chansel
