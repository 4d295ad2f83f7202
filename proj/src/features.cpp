#include "chansel/features.hpp"

#include <cmath>
#include <stdexcept>

namespace chansel {

SlotFeatures extract_slot_features(std::span<const DeliveryRecord> records,
                                   double gop_duration_s) {
    if (records.empty()) throw std::invalid_argument("no records for slot");
    double sum = 0.0;
    long delivered = 0;
    long lost = 0;
    for (const DeliveryRecord& rec : records) {
        if (rec.delivered) {
            sum += *rec.delivery_time_s - rec.packet.injection_time_s;
            ++delivered;
        } else {
            ++lost;
        }
    }
    SlotFeatures f;
    f.loss_fraction = static_cast<double>(lost) / static_cast<double>(records.size());
    if (delivered == 0) {
        f.avg_delay_s = gop_duration_s;
        f.delay_variance_s2 = 0.0;
        return f;
    }
    f.avg_delay_s = sum / static_cast<double>(delivered);
    if (delivered >= 2) {
        double sq = 0.0;
        for (const DeliveryRecord& rec : records) {
            if (!rec.delivered) continue;
            const double d = *rec.delivery_time_s - rec.packet.injection_time_s;
            sq += (d - f.avg_delay_s) * (d - f.avg_delay_s);
        }
        f.delay_variance_s2 = sq / static_cast<double>(delivered);
    }
    return f;
}

FeatureMatrix build_feature_matrix(std::span<const SlotFeatures> newest_first) {
    if (newest_first.empty())
        throw std::invalid_argument("feature history must not be empty");
    FeatureMatrix mat;
    mat.history_len = static_cast<int>(newest_first.size()) - 1;
    mat.values.resize(FeatureMatrix::kRows * newest_first.size());
    for (size_t j = 0; j < newest_first.size(); ++j) {
        const int lag = static_cast<int>(j);
        mat.at(0, lag) = newest_first[j].avg_delay_s;
        mat.at(1, lag) = newest_first[j].delay_variance_s2;
        mat.at(2, lag) = newest_first[j].loss_fraction;
    }
    for (double v : mat.values) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
    }
    return mat;
}

NormStats compute_norm_stats(std::span<const FeatureMatrix> sample) {
    if (sample.empty()) throw std::invalid_argument("empty sample for norm stats");
    NormStats stats;
    for (int r = 0; r < FeatureMatrix::kRows; ++r) {
        double sum = 0.0;
        long n = 0;
        for (const FeatureMatrix& mat : sample) {
            for (int j = 0; j < mat.cols(); ++j) sum += mat.at(r, j);
            n += mat.cols();
        }
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (const FeatureMatrix& mat : sample) {
            for (int j = 0; j < mat.cols(); ++j) {
                const double d = mat.at(r, j) - mean;
                sq += d * d;
            }
        }
        stats.mean[r] = mean;
        stats.stddev[r] = std::sqrt(sq / static_cast<double>(n));
    }
    return stats;
}

FeatureMatrix normalize(const FeatureMatrix& mat, const NormStats& stats) {
    FeatureMatrix out = mat;
    for (int r = 0; r < FeatureMatrix::kRows; ++r) {
        if (stats.stddev[r] == 0.0) continue;
        for (int j = 0; j < mat.cols(); ++j)
            out.at(r, j) = (mat.at(r, j) - stats.mean[r]) / stats.stddev[r];
    }
    return out;
}

void LabelConfig::validate() const {
    if (window_w < 1) throw std::invalid_argument("window_w must be >= 1");
    if (min_above < 0 || min_above > window_w)
        throw std::invalid_argument("need 0 <= k <= W");
}

int label_window(std::span<const double> psnr_db, const LabelConfig& cfg) {
    cfg.validate();
    if (psnr_db.size() != static_cast<size_t>(cfg.window_w))
        throw std::invalid_argument("PSNR window length must equal W");
    int above = 0;
    for (double phi : psnr_db) {
        if (phi > cfg.threshold_db) ++above;
    }
    return above >= cfg.min_above ? 1 : 0;
}

}  // namespace chansel
