#pragma once

#include <span>
#include <vector>

#include "chansel/predictor.hpp"

namespace chansel::ref {

// Naive double-loop convolution, written directly from the definition.
// Test oracle for conv1d_row; also the serial baseline in the benchmark.
std::vector<double> conv1d_naive(std::span<const double> row,
                                 std::span<const double> kernel);

// Straight-line network evaluation with freshly allocated intermediates,
// independent of the workspace implementation in forward().
double forward_naive(const CnnModel& model, const FeatureMatrix& input);

}  // namespace chansel::ref
