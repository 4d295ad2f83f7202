#include "chansel/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace chansel {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s) {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::runtime_error("bad number: " + s);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

nlohmann::json stats_json(const NormStats& stats) {
    return {{"mean", stats.mean}, {"stddev", stats.stddev}};
}

void append_feature_columns(std::string& line, const FeatureMatrix& mat) {
    for (int r = 0; r < FeatureMatrix::kRows; ++r) {
        for (int j = 0; j < mat.cols(); ++j) {
            line.push_back(',');
            line += fmt_double(mat.at(r, j));
        }
    }
}

double class1_fraction(const Dataset& dataset) {
    if (dataset.rows.empty()) return 0.0;
    long ones = 0;
    for (const DataRow& row : dataset.rows) ones += row.label;
    return static_cast<double>(ones) / static_cast<double>(dataset.rows.size());
}

NormStats whole_file_stats(const Dataset& dataset) {
    std::vector<FeatureMatrix> mats;
    mats.reserve(dataset.rows.size());
    for (const DataRow& row : dataset.rows) mats.push_back(row.features);
    return compute_norm_stats(mats);
}

}  // namespace

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ExperimentConfig::validate() const {
    sim.validate();
    video.validate();
    probe.validate();
    label.validate();
    arch.validate();
    train.validate();
    if (history_len < 0) throw std::invalid_argument("history_len must be >= 0");
    if (arch.cols != history_len + 1)
        throw std::invalid_argument("cnn width must equal window.H + 1");
    if (num_gops < label.window_w + history_len + 1)
        throw std::invalid_argument("run.num_gops must be >= W + H + 1");
    if (rotation_period < 1) throw std::invalid_argument("rotation_period must be >= 1");
    if (inference_allowance_s < 0 || inference_allowance_s >= sim.gop_duration_s)
        throw std::invalid_argument("inference allowance must be in [0, gop duration)");
}

StreamSetup ExperimentConfig::stream_setup() const {
    StreamSetup setup;
    setup.profile = video;
    setup.probes = probe;
    setup.history_len = history_len;
    setup.label_window = label.window_w;
    setup.inference_allowance_s = inference_allowance_s;
    setup.packet_seed = derive_seed(sim.seed, "packetization");
    return setup;
}

ExperimentConfig experiment_from_config(const ConfigMap& cfg) {
    ExperimentConfig out;
    out.sim.num_channels = static_cast<int>(cfg.get_long("channels.count"));
    out.sim.gop_duration_s = cfg.get_double("gop.duration_s");
    out.sim.frames_per_gop = static_cast<int>(cfg.get_long("gop.frames"));
    out.sim.seed = cfg.get_u64("sim.seed");
    out.sim.nominal_rate_bps = cfg.get_double("sim.rate_bps");
    out.sim.base_latency_s = cfg.get_double("sim.base_latency_s");
    out.sim.backlog_cap_s = cfg.get_double("sim.backlog_cap_s");
    out.sim.bg_deadline_s = cfg.get_double("sim.bg_deadline_s");
    out.sim.mobility_variance = cfg.get_double("sim.mobility_variance");
    out.sim.bg_rate_scale = cfg.get_double("bg.rate_scale");

    out.video.frames_per_gop = out.sim.frames_per_gop;
    out.video.frame_rate_fps = out.sim.frames_per_gop / out.sim.gop_duration_s;
    out.video.ref_frame_packets = static_cast<int>(cfg.get_long("video.ref_packets"));
    out.video.packet_bytes = static_cast<int>(cfg.get_long("video.packet_bytes"));
    out.video.diff_packets_min = static_cast<int>(cfg.get_long("video.diff_min"));
    out.video.diff_packets_max = static_cast<int>(cfg.get_long("video.diff_max"));

    out.probe.burst_size = static_cast<int>(cfg.get_long("probe.count"));
    out.probe.packet_bytes = static_cast<int>(cfg.get_long("probe.bytes"));

    out.label.window_w = static_cast<int>(cfg.get_long("window.W"));
    out.label.threshold_db = cfg.get_double("label.y_db");
    out.label.min_above = static_cast<int>(cfg.get_long("label.k"));

    out.history_len = static_cast<int>(cfg.get_long("window.H"));
    out.arch.cols = out.history_len + 1;
    out.arch.num_kernels = static_cast<int>(cfg.get_long("cnn.kernels"));
    out.arch.kernel_len = static_cast<int>(cfg.get_long("cnn.kernel_len"));
    out.arch.hidden = cfg.get_int_list("cnn.hidden");

    out.train.learning_rate = cfg.get_double("train.lr");
    out.train.epochs = static_cast<int>(cfg.get_long("train.epochs"));
    out.train.batch_size = static_cast<int>(cfg.get_long("train.batch"));
    out.train.train_fraction = cfg.get_double("train.fraction");
    out.train.seed = out.sim.seed;

    out.policy = policy_from_string(cfg.get("run.policy"));
    out.num_gops = cfg.get_long("run.num_gops");
    out.rotation_period = static_cast<int>(cfg.get_long("run.rotation_period"));
    out.inference_allowance_s = cfg.get_double("run.inference_allowance_s");
    out.validate();
    return out;
}

// -------------------------------------------------------------------------

DatasetBundle gen_dataset(const ExperimentConfig& cfg) {
    cfg.validate();
    const StreamSetup setup = cfg.stream_setup();
    Simulator sim(cfg.sim);
    const int C = sim.num_channels();
    const int H = cfg.history_len;
    const int W = cfg.label.window_w;

    std::vector<std::deque<SlotFeatures>> histories(C);
    std::vector<bool> newest_is_probe(C, false);
    DatasetBundle out;
    out.video.history_len = H;
    out.probe.history_len = H;

    for (long p = 0; p < cfg.num_gops; ++p) {
        const int video_ch =
            1 + static_cast<int>((p / cfg.rotation_period) % C);
        const double slot_start = sim.slot_start_s();
        const double deadline =
            slot_start + sim.gop_duration_s() - cfg.inference_allowance_s;

        const auto video_packets =
            packetize_gop(p, cfg.video, slot_start, deadline, setup.packet_seed);
        const auto video_records = sim.transmit_burst(video_ch, video_packets);
        const auto probe_records = schedule_probes(sim, video_ch, cfg.probe, deadline);

        for (int c = 1; c <= C; ++c) {
            const SlotFeatures f =
                c == video_ch
                    ? extract_slot_features(video_records, sim.gop_duration_s())
                    : extract_slot_features(probe_records.at(c), sim.gop_duration_s());
            histories[c - 1].push_front(f);
            while (histories[c - 1].size() > static_cast<size_t>(H) + 1)
                histories[c - 1].pop_back();
            newest_is_probe[c - 1] = c != video_ch;
        }

        sim.advance_gop();

        // warm-up and tail slots are not labeled
        if (p < H || p > cfg.num_gops - W - 1) continue;
        for (int c = 1; c <= C; ++c) {
            const auto window = replay_psnr_window(sim, c, W, setup);
            DataRow row;
            row.gop_index = p;
            row.channel = c;
            row.from_probe = newest_is_probe[c - 1];
            std::vector<SlotFeatures> newest_first(histories[c - 1].begin(),
                                                   histories[c - 1].end());
            row.features = build_feature_matrix(newest_first);
            row.label = label_window(window, cfg.label);
            (row.from_probe ? out.probe : out.video).rows.push_back(std::move(row));
        }
    }

    out.video_stats = whole_file_stats(out.video);
    out.probe_stats = whole_file_stats(out.probe);
    out.video_class1_fraction = class1_fraction(out.video);
    out.probe_class1_fraction = class1_fraction(out.probe);
    return out;
}

namespace {

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out = open_out(path);
    std::string header = "gop_index,channel,source";
    const int cols = dataset.history_len + 1;
    const char* names[3] = {"d", "v", "p"};
    for (int r = 0; r < 3; ++r)
        for (int j = 0; j < cols; ++j)
            header += "," + std::string(names[r]) + std::to_string(j);
    header += ",label";
    out << header << '\n';
    for (const DataRow& row : dataset.rows) {
        std::string line = std::to_string(row.gop_index) + "," +
                           std::to_string(row.channel) + "," +
                           (row.from_probe ? "probe" : "video");
        append_feature_columns(line, row.features);
        line += "," + std::to_string(row.label);
        out << line << '\n';
    }
}

}  // namespace

void write_dataset(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                   const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_dataset_csv(bundle.video, dir + "/video_features.csv");
    write_dataset_csv(bundle.probe, dir + "/probe_features.csv");

    nlohmann::json meta;
    meta["seed"] = cfg.sim.seed;
    meta["num_gops"] = cfg.num_gops;
    meta["history_len"] = cfg.history_len;
    meta["rotation_period"] = cfg.rotation_period;
    meta["inference_allowance_s"] = cfg.inference_allowance_s;
    meta["label"] = {{"W", cfg.label.window_w},
                     {"y_db", cfg.label.threshold_db},
                     {"k", cfg.label.min_above}};
    meta["probe"] = {{"count", cfg.probe.burst_size},
                     {"bytes", cfg.probe.packet_bytes}};
    meta["video_rows"] = bundle.video.rows.size();
    meta["probe_rows"] = bundle.probe.rows.size();
    meta["video_class1_fraction"] = bundle.video_class1_fraction;
    meta["probe_class1_fraction"] = bundle.probe_class1_fraction;
    meta["video_stats"] = stats_json(bundle.video_stats);
    meta["probe_stats"] = stats_json(bundle.probe_stats);
    open_out(dir + "/metadata.json") << meta.dump(2) << '\n';
}

Dataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset: " + path);
    const auto header = split_csv(line);
    if (header.size() < 5 || header[0] != "gop_index" || header.back() != "label")
        throw std::runtime_error("bad dataset header in " + path);
    const size_t feature_cols = header.size() - 4;
    if (feature_cols % 3 != 0) throw std::runtime_error("bad column count in " + path);
    const int cols = static_cast<int>(feature_cols / 3);

    Dataset dataset;
    dataset.history_len = cols - 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw std::runtime_error("short row in " + path);
        DataRow row;
        row.gop_index = std::stol(fields[0]);
        row.channel = std::stoi(fields[1]);
        row.from_probe = fields[2] == "probe";
        row.features.history_len = dataset.history_len;
        row.features.values.resize(3 * cols);
        for (int r = 0; r < 3; ++r)
            for (int j = 0; j < cols; ++j)
                row.features.at(r, j) = parse_double(fields[3 + r * cols + j]);
        row.label = std::stoi(fields.back());
        dataset.rows.push_back(std::move(row));
    }
    return dataset;
}

// -------------------------------------------------------------------------

Dataset slice_history(const Dataset& dataset, int new_history_len) {
    if (new_history_len > dataset.history_len)
        throw std::invalid_argument("cannot extend history by slicing");
    Dataset out;
    out.history_len = new_history_len;
    out.rows.reserve(dataset.rows.size());
    const int cols = new_history_len + 1;
    for (const DataRow& row : dataset.rows) {
        DataRow cut = row;
        cut.features.history_len = new_history_len;
        cut.features.values.resize(3 * cols);
        for (int r = 0; r < 3; ++r)
            for (int j = 0; j < cols; ++j)
                cut.features.at(r, j) = row.features.at(r, j);
        out.rows.push_back(std::move(cut));
    }
    return out;
}

std::vector<AblationPoint> ablate_offline(const ExperimentConfig& cfg,
                                          AblationAxis axis,
                                          std::span<const int> values) {
    std::vector<AblationPoint> table;
    if (axis == AblationAxis::probe_burst) {
        for (int burst : values) {
            ExperimentConfig point = cfg;
            point.probe.burst_size = burst;
            const DatasetBundle bundle = gen_dataset(point);
            AblationPoint row;
            row.axis_value = burst;
            row.video_accuracy =
                train(bundle.video, point.arch, point.train).heldout.accuracy;
            row.probe_accuracy =
                train(bundle.probe, point.arch, point.train).heldout.accuracy;
            table.push_back(row);
        }
        return table;
    }
    // history axis: one run at full H, then truncated re-training
    const DatasetBundle bundle = gen_dataset(cfg);
    for (int h : values) {
        if (h > cfg.history_len)
            throw std::invalid_argument("history ablation value exceeds window.H");
        CnnArch arch = cfg.arch;
        arch.cols = h + 1;
        arch.kernel_len = std::min(cfg.arch.kernel_len, h + 1);
        AblationPoint row;
        row.axis_value = h;
        row.video_accuracy =
            train(slice_history(bundle.video, h), arch, cfg.train).heldout.accuracy;
        row.probe_accuracy =
            train(slice_history(bundle.probe, h), arch, cfg.train).heldout.accuracy;
        table.push_back(row);
    }
    return table;
}

void write_ablation_csv(std::span<const AblationPoint> table, AblationAxis axis,
                        const std::string& path) {
    std::ofstream out = open_out(path);
    out << (axis == AblationAxis::probe_burst ? "probe_burst" : "history_len")
        << ",video_accuracy,probe_accuracy\n";
    for (const AblationPoint& row : table) {
        out << row.axis_value << ',' << fmt_double(row.video_accuracy) << ','
            << fmt_double(row.probe_accuracy) << '\n';
    }
}

// -------------------------------------------------------------------------

namespace {

uint64_t mix_report(uint64_t h, const SlotReport& report) {
    h = hash_mix(h, static_cast<uint64_t>(report.slot_index));
    for (const auto& ch : report.channels) {
        h = hash_mix(h, std::bit_cast<uint64_t>(ch.bg_offered_bps));
        h = hash_mix(h, ch.flow_on_mask);
        h = hash_mix(h, static_cast<uint64_t>(ch.toggle_count));
    }
    return h;
}

}  // namespace

ResultBundle run_online(const ExperimentConfig& cfg, const CnnModel* video_model,
                        const CnnModel* probe_model,
                        const std::string& event_log_path) {
    cfg.validate();
    if (cfg.policy == Policy::predictive && (!video_model || !probe_model))
        throw std::invalid_argument("predictive run needs trained models");

    OnlineEngine engine(cfg.policy, cfg.sim, cfg.stream_setup(), video_model,
                        probe_model);

    std::ofstream events;
    if (!event_log_path.empty()) {
        events = open_out(event_log_path);
        events << "gop_index,channel,kind,injection_time,delivery_time,flag\n";
        engine.sim().set_record_sink([&events](int channel, const DeliveryRecord& rec) {
            events << rec.packet.gop_index << ',' << channel << ','
                   << to_string(rec.packet.kind) << ','
                   << fmt_double(rec.packet.injection_time_s) << ',';
            if (rec.delivery_time_s) events << fmt_double(*rec.delivery_time_s);
            events << ',' << (rec.delivered ? 1 : 0) << '\n';
        });
    }

    ResultBundle bundle;
    bundle.policy = to_string(cfg.policy);
    bundle.seed = cfg.sim.seed;
    bundle.num_gops = cfg.num_gops;
    bundle.num_channels = cfg.sim.num_channels;
    bundle.mean_bg_delivered_bps.assign(cfg.sim.num_channels, 0.0);
    uint64_t h = 0x9ae16a3b2f90404fULL;

    for (long p = 0; p < cfg.num_gops; ++p) {
        StepOutput out = engine.step();
        h = mix_report(h, out.report);
        for (int c = 0; c < cfg.sim.num_channels; ++c)
            bundle.mean_bg_delivered_bps[c] += out.report.channels[c].bg_delivered_bps;
        GopLogRow row;
        row.gop_index = out.gop_index;
        row.channel = out.channel;
        row.psnr_db = out.psnr_db;
        row.abr_bitrate_bps = out.abr_bitrate_bps;
        row.per_channel = std::move(out.slot_features);
        if (!bundle.log.empty() && bundle.log.back().channel != row.channel)
            ++bundle.switches;
        bundle.log.push_back(std::move(row));
    }
    for (double& v : bundle.mean_bg_delivered_bps)
        v /= static_cast<double>(cfg.num_gops);
    bundle.bg_realization_hash = h;
    finalize_bundle(bundle, PsnrModel{});
    return bundle;
}

void finalize_bundle(ResultBundle& bundle, const PsnrModel& psnr) {
    double sum = 0.0;
    for (const GopLogRow& row : bundle.log) sum += row.psnr_db;
    bundle.mean_psnr_db =
        bundle.log.empty() ? 0.0 : sum / static_cast<double>(bundle.log.size());

    bundle.cdf.clear();
    const double lo = psnr.psnr_min_db;
    const double hi = psnr.psnr_max_db;
    for (double edge = lo; edge < hi + 0.25; edge += 0.5) {
        long at_or_below = 0;
        for (const GopLogRow& row : bundle.log)
            if (row.psnr_db <= edge + 1e-12) ++at_or_below;
        bundle.cdf.emplace_back(
            edge, bundle.log.empty()
                      ? 1.0
                      : static_cast<double>(at_or_below) /
                            static_cast<double>(bundle.log.size()));
    }
    if (!bundle.cdf.empty()) bundle.cdf.back().second = 1.0;
}

void write_report(const ResultBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);

    std::ofstream per_gop = open_out(dir + "/per_gop.csv");
    per_gop << "# policy=" << bundle.policy << " seed=" << bundle.seed
            << " channels=" << bundle.num_channels << '\n';
    std::string header = "gop_index,channel,psnr_db,abr_bitrate_bps";
    for (int c = 1; c <= bundle.num_channels; ++c) {
        header += ",d_ch" + std::to_string(c);
        header += ",v_ch" + std::to_string(c);
        header += ",p_ch" + std::to_string(c);
    }
    per_gop << header << '\n';
    for (const GopLogRow& row : bundle.log) {
        per_gop << row.gop_index << ',' << row.channel << ','
                << fmt_double(row.psnr_db) << ',' << fmt_double(row.abr_bitrate_bps);
        for (const auto& f : row.per_channel) {
            if (f) {
                per_gop << ',' << fmt_double(f->avg_delay_s) << ','
                        << fmt_double(f->delay_variance_s2) << ','
                        << fmt_double(f->loss_fraction);
            } else {
                per_gop << ",,,";
            }
        }
        per_gop << '\n';
    }

    std::ofstream cdf = open_out(dir + "/cdf.csv");
    cdf << "psnr_db,cum_fraction\n";
    for (const auto& [edge, frac] : bundle.cdf)
        cdf << fmt_double(edge) << ',' << fmt_double(frac) << '\n';

    nlohmann::json j;
    j["policy"] = bundle.policy;
    j["seed"] = bundle.seed;
    j["num_gops"] = bundle.num_gops;
    j["num_channels"] = bundle.num_channels;
    j["mean_psnr_db"] = bundle.mean_psnr_db;
    j["switches"] = bundle.switches;
    j["mean_bg_delivered_bps"] = bundle.mean_bg_delivered_bps;
    j["bg_realization_hash"] = bundle.bg_realization_hash;
    open_out(dir + "/summary.json") << j.dump(2) << '\n';
}

ResultBundle read_per_gop_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open per-GoP log: " + path);
    ResultBundle bundle;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# policy=", 0) != 0)
        throw std::runtime_error("missing metadata line in " + path);
    {
        std::istringstream meta(line.substr(2));
        std::string item;
        while (meta >> item) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) continue;
            const std::string key = item.substr(0, eq);
            const std::string value = item.substr(eq + 1);
            if (key == "policy") bundle.policy = value;
            if (key == "seed") bundle.seed = std::stoull(value);
            if (key == "channels") bundle.num_channels = std::stoi(value);
        }
    }
    if (!std::getline(in, line)) throw std::runtime_error("missing header in " + path);
    const auto header = split_csv(line);
    const size_t expected = 4 + 3 * static_cast<size_t>(bundle.num_channels);
    if (header.size() != expected)
        throw std::runtime_error("unexpected column count in " + path);

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != expected) throw std::runtime_error("short row in " + path);
        GopLogRow row;
        row.gop_index = std::stol(fields[0]);
        row.channel = std::stoi(fields[1]);
        row.psnr_db = parse_double(fields[2]);
        row.abr_bitrate_bps = parse_double(fields[3]);
        for (int c = 0; c < bundle.num_channels; ++c) {
            const std::string& d = fields[4 + 3 * c];
            if (d.empty()) {
                row.per_channel.emplace_back(std::nullopt);
                continue;
            }
            SlotFeatures f;
            f.avg_delay_s = parse_double(d);
            f.delay_variance_s2 = parse_double(fields[5 + 3 * c]);
            f.loss_fraction = parse_double(fields[6 + 3 * c]);
            row.per_channel.emplace_back(f);
        }
        if (!bundle.log.empty() && bundle.log.back().channel != row.channel)
            ++bundle.switches;
        bundle.log.push_back(std::move(row));
    }
    bundle.num_gops = static_cast<long>(bundle.log.size());
    finalize_bundle(bundle, PsnrModel{});
    return bundle;
}

// -------------------------------------------------------------------------

InjectedStream injected_from_string(const std::string& name) {
    if (name == "none") return InjectedStream::none;
    if (name == "probes") return InjectedStream::probes;
    if (name == "video") return InjectedStream::video;
    throw std::invalid_argument("unknown injected stream: " + name);
}

const char* to_string(InjectedStream injected) {
    switch (injected) {
        case InjectedStream::none: return "none";
        case InjectedStream::probes: return "probes";
        case InjectedStream::video: return "video";
    }
    return "?";
}

namespace {

// mean delivered bps per roster flow on channel 1
std::vector<double> run_flow_throughput(const ExperimentConfig& cfg,
                                        InjectedStream injected, int probe_burst) {
    Simulator sim(cfg.sim);
    const StreamSetup setup = cfg.stream_setup();
    std::vector<double> sums;
    for (long p = 0; p < cfg.num_gops; ++p) {
        const double slot_start = sim.slot_start_s();
        const double deadline =
            slot_start + sim.gop_duration_s() - cfg.inference_allowance_s;
        if (injected == InjectedStream::video) {
            const auto packets =
                packetize_gop(p, cfg.video, slot_start, deadline, setup.packet_seed);
            sim.transmit_burst(1, packets);
        } else if (injected == InjectedStream::probes) {
            ProbeConfig probe = cfg.probe;
            probe.burst_size = probe_burst;
            sim.transmit_burst(1, make_probe_burst(p, slot_start, probe, deadline));
        }
        const SlotReport report = sim.advance_gop();
        const auto& flows = report.channels[0].flow_delivered_bps;
        if (sums.empty()) sums.assign(flows.size(), 0.0);
        for (size_t i = 0; i < flows.size(); ++i) sums[i] += flows[i];
    }
    for (double& v : sums) v /= static_cast<double>(cfg.num_gops);
    return sums;
}

}  // namespace

DegradationResult measure_degradation(const ExperimentConfig& cfg,
                                      InjectedStream injected, int probe_burst) {
    cfg.validate();
    if (injected == InjectedStream::probes && probe_burst < 1)
        throw std::invalid_argument("probe burst must be >= 1");
    const auto baseline = run_flow_throughput(cfg, InjectedStream::none, 0);
    const auto loaded = injected == InjectedStream::none
                            ? baseline
                            : run_flow_throughput(cfg, injected, probe_burst);

    const auto& roster = cfg.sim.roster[0];  // channel 1 in both roster layouts
    DegradationResult result;
    result.injected = injected;
    result.probe_burst = injected == InjectedStream::probes ? probe_burst : 0;

    // aggregate flows by application class
    for (size_t i = 0; i < baseline.size(); ++i) {
        const AppClass cls = roster[i].app_class;
        auto it = std::find_if(result.per_class.begin(), result.per_class.end(),
                               [&](const DegradationRow& r) { return r.app_class == cls; });
        if (it == result.per_class.end()) {
            result.per_class.push_back(DegradationRow{cls, 0.0, 0.0, std::nullopt});
            it = std::prev(result.per_class.end());
        }
        it->baseline_bps += baseline[i];
        it->injected_bps += loaded[i];
    }
    for (DegradationRow& row : result.per_class) {
        if (row.baseline_bps > 0.0)
            row.loss_fraction = (row.baseline_bps - row.injected_bps) / row.baseline_bps;
        result.aggregate_baseline_bps += row.baseline_bps;
        result.aggregate_injected_bps += row.injected_bps;
    }
    if (result.aggregate_baseline_bps > 0.0) {
        result.aggregate_loss_fraction =
            (result.aggregate_baseline_bps - result.aggregate_injected_bps) /
            result.aggregate_baseline_bps;
    }
    return result;
}

void write_degradation(const DegradationResult& result, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream csv = open_out(dir + "/degradation.csv");
    csv << "app_class,baseline_bps,injected_bps,loss_fraction\n";
    for (const DegradationRow& row : result.per_class) {
        csv << to_string(row.app_class) << ',' << fmt_double(row.baseline_bps) << ','
            << fmt_double(row.injected_bps) << ','
            << (row.loss_fraction ? fmt_double(*row.loss_fraction) : "undefined")
            << '\n';
    }

    nlohmann::json j;
    j["injected"] = to_string(result.injected);
    if (result.injected == InjectedStream::probes)
        j["probe_burst"] = result.probe_burst;
    j["aggregate_baseline_bps"] = result.aggregate_baseline_bps;
    j["aggregate_injected_bps"] = result.aggregate_injected_bps;
    if (result.aggregate_loss_fraction)
        j["aggregate_loss_fraction"] = *result.aggregate_loss_fraction;
    else
        j["aggregate_loss_fraction"] = nullptr;
    nlohmann::json per_class = nlohmann::json::array();
    for (const DegradationRow& row : result.per_class) {
        nlohmann::json r;
        r["app_class"] = to_string(row.app_class);
        r["baseline_bps"] = row.baseline_bps;
        r["injected_bps"] = row.injected_bps;
        if (row.loss_fraction)
            r["loss_fraction"] = *row.loss_fraction;
        else
            r["loss_fraction"] = nullptr;
        per_class.push_back(r);
    }
    j["per_class"] = per_class;
    open_out(dir + "/degradation.json") << j.dump(2) << '\n';
}

}  // namespace chansel
