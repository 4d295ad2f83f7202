#include "chansel/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace chansel {

namespace {

constexpr double kProbClamp = 1e-12;
// fixed block size for the parallel batch reduction; keeping the blocking
// independent of the thread count keeps results byte-identical under any
// OMP_NUM_THREADS
constexpr size_t kGradBlock = 8;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double bce(double p, int z) {
    const double c = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return z ? -std::log(c) : -std::log(1.0 - c);
}

// per-sample activations and deltas, reused across a block
struct Workspace {
    std::vector<double> conv_pre;             // rows * kernels * L
    std::vector<double> conv_act;
    std::vector<std::vector<double>> pre;     // dense pre-activations
    std::vector<std::vector<double>> act;     // dense outputs
    std::vector<double> delta_a;
    std::vector<double> delta_b;

    explicit Workspace(const CnnArch& a) {
        conv_pre.resize(a.unrolled());
        conv_act.resize(a.unrolled());
        const auto sizes = a.layer_sizes();
        pre.resize(sizes.size() - 1);
        act.resize(sizes.size() - 1);
        size_t widest = a.unrolled();
        for (size_t l = 0; l + 1 < sizes.size(); ++l) {
            pre[l].resize(sizes[l + 1]);
            act[l].resize(sizes[l + 1]);
            widest = std::max(widest, static_cast<size_t>(sizes[l + 1]));
        }
        delta_a.resize(widest);
        delta_b.resize(widest);
    }
};

double forward_ws(const CnnModel& model, const FeatureMatrix& input, Workspace& ws) {
    const CnnArch& a = model.arch;
    if (input.cols() != a.cols)
        throw std::invalid_argument("input width does not match the model");
    const int L = a.conv_out_len();
    for (int r = 0; r < a.rows; ++r) {
        const double* row = input.values.data() + r * a.cols;
        for (int k = 0; k < a.num_kernels; ++k) {
            const double* kern = model.conv.data() + k * a.kernel_len;
            double* dst_pre = ws.conv_pre.data() + (r * a.num_kernels + k) * L;
            double* dst_act = ws.conv_act.data() + (r * a.num_kernels + k) * L;
            for (int j = 0; j < L; ++j) {
                double acc = 0.0;
                for (int p = 0; p < a.kernel_len; ++p)
                    acc += kern[p] * row[a.kernel_len - 1 + j - p];
                dst_pre[j] = acc;
                dst_act[j] = acc > 0.0 ? acc : 0.0;
            }
        }
    }
    const auto sizes = a.layer_sizes();
    const double* in = ws.conv_act.data();
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int ni = sizes[l];
        const int no = sizes[l + 1];
        const bool last = l + 2 == sizes.size();
        const double* w = model.weights[l].data();
        for (int o = 0; o < no; ++o) {
            double acc = model.biases[l][o];
            const double* wrow = w + o * ni;
            for (int i = 0; i < ni; ++i) acc += wrow[i] * in[i];
            ws.pre[l][o] = acc;
            ws.act[l][o] = last ? logistic(acc) : (acc > 0.0 ? acc : 0.0);
        }
        in = ws.act[l].data();
    }
    return ws.act.back()[0];
}

// accumulates the (unscaled) gradient of one sample's BCE into g
void backward_ws(const CnnModel& model, const FeatureMatrix& input, int label,
                 Workspace& ws, Gradients& g) {
    const CnnArch& a = model.arch;
    const auto sizes = a.layer_sizes();
    const int layers = static_cast<int>(sizes.size()) - 1;
    const int L = a.conv_out_len();

    // logistic + cross-entropy collapse to (zhat - z) at the output pre-act
    ws.delta_a[0] = ws.act.back()[0] - static_cast<double>(label);
    double* delta = ws.delta_a.data();
    double* delta_prev = ws.delta_b.data();
    for (int l = layers - 1; l >= 0; --l) {
        const int ni = sizes[l];
        const int no = sizes[l + 1];
        const double* in = l == 0 ? ws.conv_act.data() : ws.act[l - 1].data();
        double* gw = g.weights[l].data();
        double* gb = g.biases[l].data();
        const double* w = model.weights[l].data();
        std::fill(delta_prev, delta_prev + ni, 0.0);
        for (int o = 0; o < no; ++o) {
            const double d = delta[o];
            gb[o] += d;
            double* gwrow = gw + o * ni;
            const double* wrow = w + o * ni;
            for (int i = 0; i < ni; ++i) {
                gwrow[i] += d * in[i];
                delta_prev[i] += wrow[i] * d;
            }
        }
        if (l > 0) {
            for (int i = 0; i < ni; ++i)
                if (ws.pre[l - 1][i] <= 0.0) delta_prev[i] = 0.0;
        }
        std::swap(delta, delta_prev);
    }

    // through the conv rectifier into the shared kernels
    for (int r = 0; r < a.rows; ++r) {
        const double* row = input.values.data() + r * a.cols;
        for (int k = 0; k < a.num_kernels; ++k) {
            double* gk = g.conv.data() + k * a.kernel_len;
            const int base = (r * a.num_kernels + k) * L;
            for (int j = 0; j < L; ++j) {
                if (ws.conv_pre[base + j] <= 0.0) continue;
                const double d = delta[base + j];
                for (int p = 0; p < a.kernel_len; ++p)
                    gk[p] += d * row[a.kernel_len - 1 + j - p];
            }
        }
    }
}

BatchGrad block_grad(const CnnModel& model, std::span<const Sample> block,
                     Workspace& ws) {
    BatchGrad out{Gradients::zeros_like(model), 0.0};
    for (const Sample& s : block) {
        const double zhat = forward_ws(model, s.x, ws);
        out.mean_loss += bce(zhat, s.label);
        backward_ws(model, s.x, s.label, ws, out.grad);
    }
    return out;
}

struct ParamView {
    std::vector<double>* param;
    std::vector<double>* grad;
    std::vector<double>* m;
    std::vector<double>* v;
};

std::vector<ParamView> param_views(CnnModel& model, Gradients& g, Gradients& m,
                                   Gradients& v) {
    std::vector<ParamView> views{{&model.conv, &g.conv, &m.conv, &v.conv}};
    for (size_t l = 0; l < model.weights.size(); ++l) {
        views.push_back({&model.weights[l], &g.weights[l], &m.weights[l], &v.weights[l]});
        views.push_back({&model.biases[l], &g.biases[l], &m.biases[l], &v.biases[l]});
    }
    return views;
}

}  // namespace

std::vector<int> CnnArch::layer_sizes() const {
    std::vector<int> sizes{unrolled()};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

void CnnArch::validate() const {
    if (rows != FeatureMatrix::kRows)
        throw std::invalid_argument("arch rows must equal the feature row count");
    if (cols < 1) throw std::invalid_argument("cols must be >= 1");
    if (num_kernels < 1) throw std::invalid_argument("need at least one kernel");
    if (kernel_len < 1 || kernel_len > cols)
        throw std::invalid_argument("kernel length must be in [1, cols]");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("hidden sizes must be >= 1");
}

size_t CnnModel::num_params() const {
    size_t n = conv.size();
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

double Calibration::apply(double raw_score) const {
    const double c = std::clamp(raw_score, kProbClamp, 1.0 - kProbClamp);
    const double logit = std::log(c / (1.0 - c));
    return logistic(scale * logit + offset);
}

Calibration fit_calibration(std::span<const double> raw_scores,
                            std::span<const int> labels) {
    if (raw_scores.size() != labels.size())
        throw std::invalid_argument("calibration inputs must align");
    long ones = 0;
    for (int z : labels) ones += z;
    Calibration cal;
    if (raw_scores.size() < 10 || ones == 0 ||
        ones == static_cast<long>(labels.size()))
        return cal;  // too little signal, keep identity
    std::vector<double> logits(raw_scores.size());
    for (size_t i = 0; i < raw_scores.size(); ++i) {
        const double c = std::clamp(raw_scores[i], kProbClamp, 1.0 - kProbClamp);
        logits[i] = std::log(c / (1.0 - c));
    }
    // gradient descent on the two-parameter logistic regression
    double a = 1.0, b = 0.0;
    const double lr = 0.05;
    for (int iter = 0; iter < 500; ++iter) {
        double ga = 0.0, gb = 0.0;
        for (size_t i = 0; i < logits.size(); ++i) {
            const double err = logistic(a * logits[i] + b) - labels[i];
            ga += err * logits[i];
            gb += err;
        }
        const double n = static_cast<double>(logits.size());
        a -= lr * ga / n;
        b -= lr * gb / n;
    }
    cal.scale = a;
    cal.offset = b;
    return cal;
}

CnnModel init_model(const CnnArch& arch, uint64_t seed) {
    arch.validate();
    CnnModel model;
    model.arch = arch;
    Rng rng(derive_seed(seed, "winit"));
    auto glorot = [&](int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        return rng.uniform(-limit, limit);
    };
    model.conv.resize(arch.num_kernels * arch.kernel_len);
    for (double& w : model.conv) w = glorot(arch.kernel_len, 1);
    const auto sizes = arch.layer_sizes();
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        std::vector<double> w(static_cast<size_t>(sizes[l]) * sizes[l + 1]);
        for (double& x : w) x = glorot(sizes[l], sizes[l + 1]);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(sizes[l + 1], 0.0);
    }
    return model;
}

std::vector<double> conv1d_row(std::span<const double> row,
                               std::span<const double> kernel) {
    const int cols = static_cast<int>(row.size());
    const int tk = static_cast<int>(kernel.size());
    if (tk < 1 || tk > cols) throw std::invalid_argument("kernel longer than row");
    const int L = cols - tk + 1;
    std::vector<double> out(L);
    for (int j = 0; j < L; ++j) {
        double acc = 0.0;
        for (int p = 0; p < tk; ++p) acc += kernel[p] * row[tk - 1 + j - p];
        out[j] = acc;
    }
    return out;
}

double forward(const CnnModel& model, const FeatureMatrix& input) {
    Workspace ws(model.arch);
    return forward_ws(model, input, ws);
}

double score(const CnnModel& model, const FeatureMatrix& raw) {
    return forward(model, normalize(raw, model.stats));
}

Gradients Gradients::zeros_like(const CnnModel& model) {
    Gradients g;
    g.conv.assign(model.conv.size(), 0.0);
    for (const auto& w : model.weights) g.weights.emplace_back(w.size(), 0.0);
    for (const auto& b : model.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

void Gradients::add(const Gradients& other) {
    for (size_t i = 0; i < conv.size(); ++i) conv[i] += other.conv[i];
    for (size_t l = 0; l < weights.size(); ++l) {
        for (size_t i = 0; i < weights[l].size(); ++i)
            weights[l][i] += other.weights[l][i];
        for (size_t i = 0; i < biases[l].size(); ++i)
            biases[l][i] += other.biases[l][i];
    }
}

void Gradients::scale(double s) {
    for (double& x : conv) x *= s;
    for (auto& w : weights)
        for (double& x : w) x *= s;
    for (auto& b : biases)
        for (double& x : b) x *= s;
}

BatchGrad batch_grad_serial(const CnnModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    Workspace ws(model.arch);
    BatchGrad out = block_grad(model, batch, ws);
    out.grad.scale(1.0 / static_cast<double>(batch.size()));
    out.mean_loss /= static_cast<double>(batch.size());
    return out;
}

BatchGrad batch_grad(const CnnModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const size_t blocks = (batch.size() + kGradBlock - 1) / kGradBlock;
    std::vector<BatchGrad> partial(blocks);
#pragma omp parallel
    {
        Workspace ws(model.arch);
#pragma omp for schedule(static)
        for (long b = 0; b < static_cast<long>(blocks); ++b) {
            const size_t off = b * kGradBlock;
            const size_t len = std::min(kGradBlock, batch.size() - off);
            partial[b] = block_grad(model, batch.subspan(off, len), ws);
        }
    }
    BatchGrad out = std::move(partial[0]);
    for (size_t b = 1; b < blocks; ++b) {
        out.grad.add(partial[b].grad);
        out.mean_loss += partial[b].mean_loss;
    }
    out.grad.scale(1.0 / static_cast<double>(batch.size()));
    out.mean_loss /= static_cast<double>(batch.size());
    return out;
}

void batch_forward(const CnnModel& model, std::span<const Sample> batch,
                   std::span<double> out_scores) {
    if (out_scores.size() != batch.size())
        throw std::invalid_argument("output span size mismatch");
#pragma omp parallel
    {
        Workspace ws(model.arch);
#pragma omp for schedule(static)
        for (long i = 0; i < static_cast<long>(batch.size()); ++i)
            out_scores[i] = forward_ws(model, batch[i].x, ws);
    }
}

double mean_bce(const CnnModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    Workspace ws(model.arch);
    double loss = 0.0;
    for (const Sample& s : batch) loss += bce(forward_ws(model, s.x, ws), s.label);
    return loss / static_cast<double>(batch.size());
}

void TrainConfig::validate() const {
    if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be > 0");
    if (train_fraction <= 0 || train_fraction >= 1)
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

TrainResult train(const Dataset& dataset, const CnnArch& arch, const TrainConfig& cfg) {
    cfg.validate();
    arch.validate();
    if (dataset.rows.empty()) throw std::invalid_argument("empty dataset");
    if (arch.cols != dataset.history_len + 1)
        throw std::invalid_argument("arch width does not match the dataset history");
    long positives = 0;
    for (const DataRow& row : dataset.rows) positives += row.label;
    if (positives == 0 || positives == static_cast<long>(dataset.rows.size()))
        throw std::invalid_argument("training requires both classes present");

    const size_t n = dataset.rows.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng split_rng(derive_seed(cfg.seed, "split"));
    for (size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[split_rng.uniform_int(0, static_cast<int>(i))]);
    size_t n_train = static_cast<size_t>(cfg.train_fraction * static_cast<double>(n));
    n_train = std::clamp(n_train, size_t{1}, n - 1);

    // the tail fifth of the training split is held back from gradient
    // descent and used to fit the score calibration
    size_t n_sgd = static_cast<size_t>(0.8 * static_cast<double>(n_train));
    n_sgd = std::clamp(n_sgd, size_t{1}, n_train);

    std::vector<FeatureMatrix> train_raw;
    train_raw.reserve(n_sgd);
    for (size_t i = 0; i < n_sgd; ++i)
        train_raw.push_back(dataset.rows[order[i]].features);
    const NormStats stats = compute_norm_stats(train_raw);

    std::vector<Sample> train_set;
    train_set.reserve(n_sgd);
    for (size_t i = 0; i < n_sgd; ++i) {
        const DataRow& row = dataset.rows[order[i]];
        train_set.push_back(Sample{normalize(row.features, stats), row.label});
    }
    std::vector<Sample> calib_set;
    calib_set.reserve(n_train - n_sgd);
    for (size_t i = n_sgd; i < n_train; ++i) {
        const DataRow& row = dataset.rows[order[i]];
        calib_set.push_back(Sample{normalize(row.features, stats), row.label});
    }
    std::vector<DataRow> test_rows;
    test_rows.reserve(n - n_train);
    for (size_t i = n_train; i < n; ++i) test_rows.push_back(dataset.rows[order[i]]);

    CnnModel model = init_model(arch, cfg.seed);
    model.stats = stats;

    Gradients m = Gradients::zeros_like(model);
    Gradients v = Gradients::zeros_like(model);
    long step = 0;
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
    std::vector<size_t> epoch_order(n_sgd);
    for (size_t i = 0; i < n_sgd; ++i) epoch_order[i] = i;
    std::vector<Sample> batch;
    TrainResult result;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = n_sgd - 1; i > 0; --i)
            std::swap(epoch_order[i],
                      epoch_order[shuffle_rng.uniform_int(0, static_cast<int>(i))]);
        double loss_sum = 0.0;
        for (size_t off = 0; off < n_sgd; off += cfg.batch_size) {
            const size_t len = std::min<size_t>(cfg.batch_size, n_sgd - off);
            batch.clear();
            for (size_t i = 0; i < len; ++i)
                batch.push_back(train_set[epoch_order[off + i]]);
            BatchGrad bg = batch_grad(model, batch);
            loss_sum += bg.mean_loss * static_cast<double>(len);
            ++step;
            const double bias1 = 1.0 - std::pow(cfg.beta1, step);
            const double bias2 = 1.0 - std::pow(cfg.beta2, step);
            for (ParamView view : param_views(model, bg.grad, m, v)) {
                for (size_t i = 0; i < view.param->size(); ++i) {
                    const double g = (*view.grad)[i];
                    double& mi = (*view.m)[i];
                    double& vi = (*view.v)[i];
                    mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * g;
                    vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * g * g;
                    const double mhat = mi / bias1;
                    const double vhat = vi / bias2;
                    (*view.param)[i] -=
                        cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
                }
            }
        }
        result.epoch_loss.push_back(loss_sum / static_cast<double>(n_sgd));
    }

    if (!calib_set.empty()) {
        std::vector<double> raw(calib_set.size());
        std::vector<int> labels(calib_set.size());
        batch_forward(model, calib_set, raw);
        for (size_t i = 0; i < calib_set.size(); ++i) labels[i] = calib_set[i].label;
        model.calibration = fit_calibration(raw, labels);
    }

    result.heldout = evaluate(model, test_rows);
    result.model = std::move(model);
    return result;
}

EvalReport evaluate(const CnnModel& model, std::span<const DataRow> test_rows) {
    EvalReport rep;
    rep.scores.reserve(test_rows.size());
    for (const DataRow& row : test_rows) {
        const double s = score(model, row.features);
        rep.scores.push_back(s);
        const int pred = s >= 0.5 ? 1 : 0;
        if (pred == 1 && row.label == 1) ++rep.tp;
        if (pred == 1 && row.label == 0) ++rep.fp;
        if (pred == 0 && row.label == 0) ++rep.tn;
        if (pred == 0 && row.label == 1) ++rep.fn;
    }
    rep.accuracy = test_rows.empty()
                       ? 0.0
                       : static_cast<double>(rep.tp + rep.tn) /
                             static_cast<double>(test_rows.size());
    return rep;
}

void save_model_json(const CnnModel& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = "chansel-cnn-v1";
    j["arch"] = {{"rows", model.arch.rows},
                 {"cols", model.arch.cols},
                 {"num_kernels", model.arch.num_kernels},
                 {"kernel_len", model.arch.kernel_len},
                 {"hidden", model.arch.hidden}};
    j["conv"] = model.conv;
    j["weights"] = model.weights;
    j["biases"] = model.biases;
    j["stats"] = {{"mean", model.stats.mean}, {"stddev", model.stats.stddev}};
    j["calibration"] = {{"scale", model.calibration.scale},
                        {"offset", model.calibration.offset}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << j.dump(2) << '\n';
}

CnnModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "chansel-cnn-v1")
        throw std::runtime_error("unrecognized model format in " + path);
    CnnModel model;
    model.arch.rows = j["arch"]["rows"].get<int>();
    model.arch.cols = j["arch"]["cols"].get<int>();
    model.arch.num_kernels = j["arch"]["num_kernels"].get<int>();
    model.arch.kernel_len = j["arch"]["kernel_len"].get<int>();
    model.arch.hidden = j["arch"]["hidden"].get<std::vector<int>>();
    model.arch.validate();
    model.conv = j["conv"].get<std::vector<double>>();
    model.weights = j["weights"].get<std::vector<std::vector<double>>>();
    model.biases = j["biases"].get<std::vector<std::vector<double>>>();
    if (j.contains("calibration")) {
        model.calibration.scale = j["calibration"]["scale"].get<double>();
        model.calibration.offset = j["calibration"]["offset"].get<double>();
    }
    auto mean = j["stats"]["mean"].get<std::vector<double>>();
    auto stddev = j["stats"]["stddev"].get<std::vector<double>>();
    if (mean.size() != 3 || stddev.size() != 3)
        throw std::runtime_error("bad normalization stats in " + path);
    std::copy(mean.begin(), mean.end(), model.stats.mean.begin());
    std::copy(stddev.begin(), stddev.end(), model.stats.stddev.begin());
    if (model.conv.size() !=
        static_cast<size_t>(model.arch.num_kernels * model.arch.kernel_len))
        throw std::runtime_error("conv weight count mismatch in " + path);
    const auto sizes = model.arch.layer_sizes();
    if (model.weights.size() != sizes.size() - 1 ||
        model.biases.size() != sizes.size() - 1)
        throw std::runtime_error("layer count mismatch in " + path);
    for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (model.weights[l].size() !=
                static_cast<size_t>(sizes[l]) * static_cast<size_t>(sizes[l + 1]) ||
            model.biases[l].size() != static_cast<size_t>(sizes[l + 1]))
            throw std::runtime_error("layer size mismatch in " + path);
    }
    return model;
}

}  // namespace chansel
