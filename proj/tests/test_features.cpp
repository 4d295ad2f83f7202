#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "chansel/features.hpp"

using namespace chansel;

namespace {

DeliveryRecord delivered_at(double injection, double delay) {
    return {PacketSpec{injection, 100, PacketKind::probe, 0, 0, injection + 1.0},
            injection + delay, true};
}

DeliveryRecord lost_at(double injection) {
    return {PacketSpec{injection, 100, PacketKind::probe, 0, 0, injection + 1.0},
            std::nullopt, false};
}

}  // namespace

TEST_CASE("extract_slot_features basic statistics") {
    std::vector<DeliveryRecord> same{delivered_at(0.0, 0.0625), delivered_at(0.25, 0.0625),
                                     delivered_at(0.5, 0.0625)};
    auto f = extract_slot_features(same);
    CHECK(f.avg_delay_s == doctest::Approx(0.0625));
    CHECK(f.delay_variance_s2 == 0.0);
    CHECK(f.loss_fraction == 0.0);

    std::vector<DeliveryRecord> none{lost_at(0.0), lost_at(0.1)};
    f = extract_slot_features(none);
    CHECK(f.avg_delay_s == 1.0);
    CHECK(f.delay_variance_s2 == 0.0);
    CHECK(f.loss_fraction == 1.0);

    std::vector<DeliveryRecord> mixed{delivered_at(0.0, 0.01), delivered_at(0.1, 0.03),
                                      lost_at(0.2)};
    f = extract_slot_features(mixed);
    CHECK(f.avg_delay_s == doctest::Approx(0.02));
    CHECK(f.delay_variance_s2 == doctest::Approx(0.0001));
    CHECK(f.loss_fraction == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(extract_slot_features({}), std::invalid_argument);
}

TEST_CASE("extract_slot_features is permutation invariant") {
    std::vector<DeliveryRecord> records;
    Rng rng(6);
    for (int i = 0; i < 40; ++i) {
        if (rng.uniform() < 0.3) records.push_back(lost_at(rng.uniform(0.0, 0.9)));
        else records.push_back(delivered_at(rng.uniform(0.0, 0.9), rng.uniform(0.001, 0.09)));
    }
    const auto base = extract_slot_features(records);
    for (int trial = 0; trial < 10; ++trial) {
        for (size_t i = records.size() - 1; i > 0; --i)
            std::swap(records[i], records[rng.uniform_int(0, static_cast<int>(i))]);
        const auto f = extract_slot_features(records);
        CHECK(f.avg_delay_s == doctest::Approx(base.avg_delay_s).epsilon(1e-12));
        CHECK(f.delay_variance_s2 ==
              doctest::Approx(base.delay_variance_s2).epsilon(1e-9));
        CHECK(f.loss_fraction == base.loss_fraction);
    }
}

TEST_CASE("total loss forces the sentinel delay and zero variance") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<DeliveryRecord> records;
        const int n = rng.uniform_int(1, 30);
        for (int i = 0; i < n; ++i) records.push_back(lost_at(rng.uniform(0.0, 0.9)));
        const auto f = extract_slot_features(records, 1.0);
        CHECK(f.loss_fraction == 1.0);
        CHECK(f.avg_delay_s == 1.0);
        CHECK(f.delay_variance_s2 == 0.0);
    }
}

TEST_CASE("build_feature_matrix lays out rows D, V, P with newest first") {
    std::vector<SlotFeatures> history;
    for (int i = 0; i <= 10; ++i)
        history.push_back({0.01 * i, 0.001 * i, 0.05 * i});
    const auto mat = build_feature_matrix(history);
    CHECK(mat.history_len == 10);
    CHECK(mat.cols() == 11);
    CHECK(mat.values.size() == 33);
    CHECK(mat.at(0, 4) == doctest::Approx(0.04));
    CHECK(mat.at(1, 4) == doctest::Approx(0.004));
    CHECK(mat.at(2, 4) == doctest::Approx(0.20));

    const auto tiny = build_feature_matrix(std::vector<SlotFeatures>{{0.5, 0.1, 0.2}});
    CHECK(tiny.history_len == 0);
    CHECK(tiny.cols() == 1);

    auto permuted = history;
    std::swap(permuted[0], permuted[10]);
    CHECK(build_feature_matrix(permuted).values != mat.values);

    CHECK_THROWS_AS(build_feature_matrix({}), std::invalid_argument);
}

TEST_CASE("normalize is a per-row z-score with a zero-std guard") {
    FeatureMatrix mat;
    mat.history_len = 1;
    mat.values = {0.0, 2.0, 5.0, 5.0, 0.3, 0.7};
    NormStats stats;
    stats.mean = {1.0, 5.0, 0.5};
    stats.stddev = {1.0, 0.0, 0.1};
    const auto out = normalize(mat, stats);
    CHECK(out.at(0, 0) == doctest::Approx(-1.0));
    CHECK(out.at(0, 1) == doctest::Approx(1.0));
    // zero-std row passes through unscaled
    CHECK(out.at(1, 0) == 5.0);
    CHECK(out.at(1, 1) == 5.0);
    CHECK(out.at(2, 0) == doctest::Approx(-2.0));
    CHECK(out.at(2, 1) == doctest::Approx(2.0));

    // row equal to the stats mean maps to zeros
    FeatureMatrix flat;
    flat.history_len = 1;
    flat.values = {1.0, 1.0, 5.0, 5.0, 0.5, 0.5};
    const auto zeros = normalize(flat, stats);
    CHECK(zeros.at(0, 0) == 0.0);
    CHECK(zeros.at(2, 1) == 0.0);
}

TEST_CASE("training stats normalize the training set to zero mean unit std") {
    Rng rng(12);
    std::vector<FeatureMatrix> sample;
    for (int i = 0; i < 200; ++i) {
        std::vector<SlotFeatures> history;
        for (int j = 0; j < 11; ++j)
            history.push_back({rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.01),
                               rng.uniform(0.0, 1.0)});
        sample.push_back(build_feature_matrix(history));
    }
    const auto stats = compute_norm_stats(sample);
    for (int r = 0; r < 3; ++r) {
        double sum = 0.0, sq = 0.0;
        long n = 0;
        for (const auto& mat : sample) {
            const auto norm = normalize(mat, stats);
            for (int j = 0; j < norm.cols(); ++j) {
                sum += norm.at(r, j);
                sq += norm.at(r, j) * norm.at(r, j);
                ++n;
            }
        }
        CHECK(sum / n == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(sq / n == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("label_window counts strictly-above-threshold GoPs") {
    LabelConfig cfg;
    std::vector<double> seven{45, 45, 45, 45, 45, 45, 45, 30, 30, 30};
    CHECK(label_window(seven, cfg) == 1);
    std::vector<double> six{45, 45, 45, 45, 45, 45, 30, 30, 30, 30};
    CHECK(label_window(six, cfg) == 1);  // boundary: >= k
    std::vector<double> at_threshold(10, 40.0);
    CHECK(label_window(at_threshold, cfg) == 0);  // strict inequality at the threshold
    std::vector<double> five{45, 45, 45, 45, 45, 30, 30, 30, 30, 30};
    CHECK(label_window(five, cfg) == 0);
    CHECK_THROWS_AS(label_window(std::vector<double>(9, 50.0), cfg),
                    std::invalid_argument);
}

TEST_CASE("label_window equals brute-force counting and is monotone") {
    LabelConfig cfg;
    Rng rng(23);
    for (int trial = 0; trial < 10000; ++trial) {
        std::vector<double> window(10);
        for (double& v : window) v = rng.uniform(15.0, 55.0);
        int count = 0;
        for (double v : window)
            if (v > cfg.threshold_db) ++count;
        const int expect = count >= cfg.min_above ? 1 : 0;
        CHECK(label_window(window, cfg) == expect);
        // raising any entry never flips 1 -> 0
        const int before = label_window(window, cfg);
        window[rng.uniform_int(0, 9)] = 55.0;
        CHECK(label_window(window, cfg) >= before);
    }
}
