// Compares the OpenMP batch kernels against the serial reference on the
// default classifier architecture. Run with OMP_NUM_THREADS to see scaling.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include <omp.h>

#include "chansel/predictor.hpp"
#include "chansel/reference_kernels.hpp"
#include "chansel/rng.hpp"

using namespace chansel;

namespace {

std::vector<Sample> random_batch(const CnnArch& arch, size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Sample> batch(n);
    for (Sample& s : batch) {
        s.x.history_len = arch.cols - 1;
        s.x.values.resize(arch.rows * arch.cols);
        for (double& v : s.x.values) v = rng.uniform(-2.0, 2.0);
        s.label = rng.uniform() < 0.5 ? 0 : 1;
    }
    return batch;
}

double max_rel_diff(const Gradients& a, const Gradients& b) {
    double worst = 0.0;
    auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
        for (size_t i = 0; i < x.size(); ++i) {
            const double denom = std::max(1.0, std::abs(x[i]));
            worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
        }
    };
    cmp(a.conv, b.conv);
    for (size_t l = 0; l < a.weights.size(); ++l) {
        cmp(a.weights[l], b.weights[l]);
        cmp(a.biases[l], b.biases[l]);
    }
    return worst;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

int main() {
    const CnnArch arch;  // default: 3x11 input, 10 kernels of 5, hidden 64/32
    const CnnModel model = init_model(arch, 7);
    const size_t n = 4096;
    const auto batch = random_batch(arch, n, 11);
    const int reps = 5;

    std::printf("batch kernels, %zu samples x %d reps, %d OpenMP thread(s)\n", n,
                reps, omp_get_max_threads());

    auto t0 = std::chrono::steady_clock::now();
    BatchGrad serial;
    for (int r = 0; r < reps; ++r) serial = batch_grad_serial(model, batch);
    const double t_serial = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    BatchGrad parallel;
    for (int r = 0; r < reps; ++r) parallel = batch_grad(model, batch);
    const double t_parallel = seconds_since(t0);

    const double grad_diff = max_rel_diff(serial.grad, parallel.grad);
    std::printf("grad   serial   %8.1f samples/s\n", reps * n / t_serial);
    std::printf("grad   parallel %8.1f samples/s  speedup %.2fx  max rel diff %.2e\n",
                reps * n / t_parallel, t_serial / t_parallel, grad_diff);

    std::vector<double> scores_ref(n);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        for (size_t i = 0; i < n; ++i)
            scores_ref[i] = ref::forward_naive(model, batch[i].x);
    const double t_fwd_ref = seconds_since(t0);

    std::vector<double> scores(n);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) batch_forward(model, batch, scores);
    const double t_fwd = seconds_since(t0);

    double fwd_diff = 0.0;
    for (size_t i = 0; i < n; ++i)
        fwd_diff = std::max(fwd_diff, std::abs(scores[i] - scores_ref[i]));
    std::printf("fwd    naive    %8.1f samples/s\n", reps * n / t_fwd_ref);
    std::printf("fwd    parallel %8.1f samples/s  speedup %.2fx  max abs diff %.2e\n",
                reps * n / t_fwd, t_fwd_ref / t_fwd, fwd_diff);

    if (grad_diff > 1e-9 || fwd_diff > 1e-9) {
        std::printf("MISMATCH between serial and parallel kernels\n");
        return 1;
    }
    return 0;
}
