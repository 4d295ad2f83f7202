#pragma once

#include <array>
#include <span>
#include <vector>

#include "chansel/netsim.hpp"

namespace chansel {

// Per-slot summary of what the channel did to a packet stream.
struct SlotFeatures {
    double avg_delay_s = 0.0;
    double delay_variance_s2 = 0.0;
    double loss_fraction = 0.0;
};

// Delay statistics cover delivered packets only; losses are captured by the
// loss fraction. A slot with nothing delivered gets the most pessimistic
// finite value: avg delay = gop duration, variance 0, loss 1.
SlotFeatures extract_slot_features(std::span<const DeliveryRecord> records,
                                   double gop_duration_s = 1.0);

// 3 x (H+1) matrix: rows are avg delay, delay variance, loss fraction;
// column j holds the features of slot -j (newest first).
struct FeatureMatrix {
    static constexpr int kRows = 3;

    int history_len = 0;  // H
    std::vector<double> values;  // row-major, kRows x (H+1)

    int cols() const { return history_len + 1; }
    double at(int row, int lag) const { return values[row * cols() + lag]; }
    double& at(int row, int lag) { return values[row * cols() + lag]; }
    std::span<const double> row(int r) const {
        return {values.data() + r * cols(), static_cast<size_t>(cols())};
    }
};

FeatureMatrix build_feature_matrix(std::span<const SlotFeatures> newest_first);

struct NormStats {
    std::array<double, 3> mean{0.0, 0.0, 0.0};
    std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

NormStats compute_norm_stats(std::span<const FeatureMatrix> sample);

// per-row z-score; rows whose training stddev is zero pass through unscaled
FeatureMatrix normalize(const FeatureMatrix& mat, const NormStats& stats);

struct LabelConfig {
    int window_w = 10;        // GoPs in the prediction window
    double threshold_db = 40.0;
    int min_above = 6;        // k

    void validate() const;
};

// 1 iff at least k of the W window PSNRs are strictly above the threshold
int label_window(std::span<const double> psnr_db, const LabelConfig& cfg);

struct DataRow {
    long gop_index = 0;
    int channel = 0;
    bool from_probe = false;
    FeatureMatrix features;
    int label = 0;
};

struct Dataset {
    int history_len = 0;
    std::vector<DataRow> rows;
};

}  // namespace chansel
