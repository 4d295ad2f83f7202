#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chansel/features.hpp"

namespace chansel {

// 1-D CNN over the feature matrix: each kernel slides along every feature
// row (kernels shared across rows), the rectified responses are unrolled and
// fed through fully connected layers to a single logistic output.
struct CnnArch {
    int rows = FeatureMatrix::kRows;
    int cols = 11;        // H + 1
    int num_kernels = 10;  // lambda
    int kernel_len = 5;    // T_k
    std::vector<int> hidden{64, 32};

    int conv_out_len() const { return cols - kernel_len + 1; }
    int unrolled() const { return rows * num_kernels * conv_out_len(); }
    std::vector<int> layer_sizes() const;  // dense in/out chain
    void validate() const;
};

// logit-space affine map fitted on a held-back slice of the training split;
// makes soft scores from independently trained classifiers comparable
struct Calibration {
    double scale = 1.0;
    double offset = 0.0;

    double apply(double raw_score) const;
};

struct CnnModel {
    CnnArch arch;
    std::vector<double> conv;                  // num_kernels x kernel_len
    std::vector<std::vector<double>> weights;  // per dense layer, [out][in] row-major
    std::vector<std::vector<double>> biases;
    NormStats stats;  // normalization applied before the network at inference
    Calibration calibration;

    size_t num_params() const;
};

Calibration fit_calibration(std::span<const double> raw_scores,
                            std::span<const int> labels);

// seeded Glorot-uniform weights, zero biases
CnnModel init_model(const CnnArch& arch, uint64_t seed);

// valid (no padding) 1-D convolution of a kernel along one row:
// out[j] = sum_p kernel[p] * row[kernel_len - 1 + j - p]
std::vector<double> conv1d_row(std::span<const double> row,
                               std::span<const double> kernel);

// network output for an (already normalized) feature matrix; pure function
double forward(const CnnModel& model, const FeatureMatrix& input);

// normalization with the model's own stats, then forward
double score(const CnnModel& model, const FeatureMatrix& raw);

struct Sample {
    FeatureMatrix x;
    int label = 0;
};

struct Gradients {
    std::vector<double> conv;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const CnnModel& model);
    void add(const Gradients& other);
    void scale(double s);
};

struct BatchGrad {
    Gradients grad;      // gradient of the mean binary cross-entropy
    double mean_loss = 0.0;
};

// Gradient of the mean binary cross-entropy over the batch. Parallelized
// over fixed-size sample blocks with an ordered reduction, so the result
// does not depend on the number of OpenMP threads.
BatchGrad batch_grad(const CnnModel& model, std::span<const Sample> batch);

// plain serial loop over the batch, kept as the reference implementation
BatchGrad batch_grad_serial(const CnnModel& model, std::span<const Sample> batch);

// forward pass over many inputs, parallel across samples
void batch_forward(const CnnModel& model, std::span<const Sample> batch,
                   std::span<double> out_scores);

double mean_bce(const CnnModel& model, std::span<const Sample> batch);

struct TrainConfig {
    double learning_rate = 0.003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 100;
    int batch_size = 64;
    double train_fraction = 0.75;
    uint64_t seed = 1;

    void validate() const;
};

struct EvalReport {
    double accuracy = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<double> scores;

    long total() const { return tp + fp + tn + fn; }
};

struct TrainResult {
    CnnModel model;
    EvalReport heldout;
    std::vector<double> epoch_loss;  // mean training loss per epoch, logged only
};

// Shuffles, splits train/test, z-scores with training-split statistics,
// and runs Adam over mini-batches. Deterministic for a fixed seed.
TrainResult train(const Dataset& dataset, const CnnArch& arch, const TrainConfig& cfg);

// applies the model's stats to raw feature rows and scores with a 0.5 threshold
EvalReport evaluate(const CnnModel& model, std::span<const DataRow> test_rows);

void save_model_json(const CnnModel& model, const std::string& path);
CnnModel load_model_json(const std::string& path);

}  // namespace chansel
