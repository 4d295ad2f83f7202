#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chansel/harness.hpp"

namespace {

using namespace chansel;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--set", opts.overrides,
                    "override a config key, e.g. --set sim.seed=7")
        ->take_all();
    cmd->add_option("--out", opts.out_dir, "output directory");
}

ExperimentConfig load_experiment(const CommonOpts& opts) {
    ConfigMap cfg = opts.config_path.empty() ? ConfigMap::defaults()
                                             : ConfigMap::from_file(opts.config_path);
    cfg.apply_env();
    for (const std::string& kv : opts.overrides) cfg.apply_override(kv);
    return experiment_from_config(cfg);
}

void write_train_report(const TrainResult& video, const TrainResult& probe,
                        const std::string& dir) {
    nlohmann::json j;
    auto section = [](const TrainResult& r) {
        nlohmann::json s;
        s["heldout_accuracy"] = r.heldout.accuracy;
        s["tp"] = r.heldout.tp;
        s["fp"] = r.heldout.fp;
        s["tn"] = r.heldout.tn;
        s["fn"] = r.heldout.fn;
        s["epoch_loss"] = r.epoch_loss;
        s["num_params"] = r.model.num_params();
        return s;
    };
    j["video"] = section(video);
    j["probe"] = section(probe);
    std::ofstream out(dir + "/train_report.json");
    out << j.dump(2) << '\n';
}

int cmd_gen_dataset(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_experiment(opts);
    const DatasetBundle bundle = gen_dataset(cfg);
    write_dataset(bundle, cfg, opts.out_dir);
    std::cout << "wrote " << bundle.video.rows.size() << " video rows and "
              << bundle.probe.rows.size() << " probe rows to " << opts.out_dir
              << " (class-1 fractions " << bundle.video_class1_fraction << " / "
              << bundle.probe_class1_fraction << ")\n";
    return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& data_dir) {
    const ExperimentConfig cfg = load_experiment(opts);
    std::filesystem::create_directories(opts.out_dir);
    const Dataset video = read_dataset_csv(data_dir + "/video_features.csv");
    const Dataset probe = read_dataset_csv(data_dir + "/probe_features.csv");

    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult video_result = train(video, cfg.arch, cfg.train);
    const TrainResult probe_result = train(probe, cfg.arch, cfg.train);
    const auto t1 = std::chrono::steady_clock::now();

    save_model_json(video_result.model, opts.out_dir + "/video_model.json");
    save_model_json(probe_result.model, opts.out_dir + "/probe_model.json");
    write_train_report(video_result, probe_result, opts.out_dir);
    std::cout << "video classifier held-out accuracy "
              << video_result.heldout.accuracy << '\n'
              << "probe classifier held-out accuracy "
              << probe_result.heldout.accuracy << '\n'
              << "trained in "
              << std::chrono::duration<double>(t1 - t0).count() << " s\n";
    return 0;
}

int cmd_ablate(const CommonOpts& opts, const std::string& axis_name,
               std::vector<int> values) {
    const ExperimentConfig cfg = load_experiment(opts);
    AblationAxis axis;
    if (axis_name == "probe_burst") {
        axis = AblationAxis::probe_burst;
        if (values.empty()) values = {5, 10, 20, 50};
    } else if (axis_name == "history") {
        axis = AblationAxis::history;
        if (values.empty()) values = {2, 4, 6, 8, 10};
    } else {
        std::cerr << "axis must be probe_burst or history\n";
        return 2;
    }
    const auto table = ablate_offline(cfg, axis, values);
    std::filesystem::create_directories(opts.out_dir);
    const std::string path = opts.out_dir + "/ablation_" + axis_name + ".csv";
    write_ablation_csv(table, axis, path);
    for (const AblationPoint& row : table) {
        std::cout << axis_name << '=' << row.axis_value << " video "
                  << row.video_accuracy << " probe " << row.probe_accuracy << '\n';
    }
    std::cout << "wrote " << path << '\n';
    return 0;
}

int cmd_run_online(const CommonOpts& opts, const std::string& policy_name,
                   const std::string& models_dir, const std::string& event_log) {
    ExperimentConfig cfg = load_experiment(opts);
    if (!policy_name.empty()) cfg.policy = policy_from_string(policy_name);

    CnnModel video_model;
    CnnModel probe_model;
    const CnnModel* vp = nullptr;
    const CnnModel* pp = nullptr;
    if (cfg.policy == Policy::predictive) {
        if (models_dir.empty()) {
            std::cerr << "predictive policy requires --models\n";
            return 2;
        }
        video_model = load_model_json(models_dir + "/video_model.json");
        probe_model = load_model_json(models_dir + "/probe_model.json");
        vp = &video_model;
        pp = &probe_model;
    }
    std::filesystem::create_directories(opts.out_dir);
    const ResultBundle bundle = run_online(
        cfg, vp, pp, event_log.empty() ? "" : opts.out_dir + "/" + event_log);
    write_report(bundle, opts.out_dir);
    std::cout << "policy " << bundle.policy << ": mean PSNR " << bundle.mean_psnr_db
              << " dB over " << bundle.num_gops << " GoPs, " << bundle.switches
              << " switches\n";
    return 0;
}

int cmd_degradation(const CommonOpts& opts, const std::string& inject_name,
                    int probe_burst) {
    const ExperimentConfig cfg = load_experiment(opts);
    const InjectedStream injected = injected_from_string(inject_name);
    const DegradationResult result = measure_degradation(cfg, injected, probe_burst);
    write_degradation(result, opts.out_dir);
    if (result.aggregate_loss_fraction) {
        std::cout << "aggregate background throughput loss "
                  << *result.aggregate_loss_fraction * 100.0 << " %\n";
    } else {
        std::cout << "aggregate background throughput loss undefined\n";
    }
    return 0;
}

int cmd_report(const CommonOpts& opts, const std::string& per_gop_path) {
    ResultBundle bundle = read_per_gop_csv(per_gop_path);
    write_report(bundle, opts.out_dir);
    std::cout << "policy " << bundle.policy << ": mean PSNR " << bundle.mean_psnr_db
              << " dB over " << bundle.num_gops << " GoPs\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probe-based wireless channel selection for real-time video"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    auto* gen = app.add_subcommand("gen-dataset",
                                   "simulate and emit labeled feature datasets");
    add_common(gen, gen_opts);

    CommonOpts train_opts;
    std::string data_dir = "out";
    auto* tr = app.add_subcommand("train", "train the video and probe classifiers");
    add_common(tr, train_opts);
    tr->add_option("--data", data_dir, "directory with *_features.csv");

    CommonOpts ablate_opts;
    std::string axis = "probe_burst";
    std::vector<int> axis_values;
    auto* ab = app.add_subcommand("ablate", "accuracy sweeps over probe burst or history");
    add_common(ab, ablate_opts);
    ab->add_option("--axis", axis, "probe_burst or history");
    ab->add_option("--values", axis_values, "axis values")->take_all();

    CommonOpts run_opts;
    std::string policy;
    std::string models_dir;
    std::string event_log;
    auto* run = app.add_subcommand("run-online", "per-GoP channel selection run");
    add_common(run, run_opts);
    run->add_option("--policy", policy, "fixed | delay | predictive | oracle | abr");
    run->add_option("--models", models_dir, "directory with trained model JSONs");
    run->add_option("--event-log", event_log,
                    "also write a per-packet delivery log with this file name");

    CommonOpts deg_opts;
    std::string inject = "probes";
    int probe_burst = 10;
    auto* deg = app.add_subcommand("degradation",
                                   "background throughput impact of a stream");
    add_common(deg, deg_opts);
    deg->add_option("--inject", inject, "none | probes | video");
    deg->add_option("--probe-burst", probe_burst, "probe packets per slot");

    CommonOpts report_opts;
    std::string per_gop_path;
    auto* rep = app.add_subcommand("report", "recompute summary and CDF from a per-GoP log");
    add_common(rep, report_opts);
    rep->add_option("--per-gop", per_gop_path, "per_gop.csv from a previous run")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen_dataset(gen_opts);
        if (tr->parsed()) return cmd_train(train_opts, data_dir);
        if (ab->parsed()) return cmd_ablate(ablate_opts, axis, axis_values);
        if (run->parsed()) return cmd_run_online(run_opts, policy, models_dir, event_log);
        if (deg->parsed()) return cmd_degradation(deg_opts, inject, probe_burst);
        if (rep->parsed()) return cmd_report(report_opts, per_gop_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
