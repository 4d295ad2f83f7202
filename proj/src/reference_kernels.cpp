#include "chansel/reference_kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace chansel::ref {

std::vector<double> conv1d_naive(std::span<const double> row,
                                 std::span<const double> kernel) {
    const int cols = static_cast<int>(row.size());
    const int tk = static_cast<int>(kernel.size());
    if (tk > cols) throw std::invalid_argument("kernel longer than row");
    std::vector<double> out;
    for (int l = tk - 1; l < cols; ++l) {
        double acc = 0.0;
        for (int p = 0; p < tk; ++p) acc += kernel[p] * row[l - p];
        out.push_back(acc);
    }
    return out;
}

double forward_naive(const CnnModel& model, const FeatureMatrix& input) {
    const CnnArch& a = model.arch;
    if (input.cols() != a.cols || FeatureMatrix::kRows != a.rows)
        throw std::invalid_argument("input dimensions do not match the model");

    std::vector<double> unrolled;
    for (int r = 0; r < a.rows; ++r) {
        for (int k = 0; k < a.num_kernels; ++k) {
            std::span<const double> kern{model.conv.data() + k * a.kernel_len,
                                         static_cast<size_t>(a.kernel_len)};
            for (double v : conv1d_naive(input.row(r), kern))
                unrolled.push_back(v > 0.0 ? v : 0.0);
        }
    }

    std::vector<double> act = unrolled;
    const auto sizes = a.layer_sizes();
    for (size_t layer = 0; layer + 1 < sizes.size(); ++layer) {
        const int in = sizes[layer];
        const int out = sizes[layer + 1];
        std::vector<double> next(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double acc = model.biases[layer][o];
            for (int i = 0; i < in; ++i)
                acc += model.weights[layer][o * in + i] * act[i];
            const bool last = layer + 2 == sizes.size();
            next[o] = last ? 1.0 / (1.0 + std::exp(-acc)) : (acc > 0.0 ? acc : 0.0);
        }
        act = std::move(next);
    }
    return act[0];
}

}  // namespace chansel::ref
