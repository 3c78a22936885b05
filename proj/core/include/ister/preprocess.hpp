#pragma once

#include <utility>
#include <vector>

#include "ister/autodiff/diff_array.hpp"
#include "ister/matrix.hpp"

namespace ister::preprocess {

inline constexpr double kNormEpsilon = 1e-5;
inline constexpr long kDefaultDecompKernel = 25;

/// Per-channel statistics of one lookback window (population sd).
struct NormStats {
    std::vector<double> mean;
    std::vector<double> sd;
    double epsilon = kNormEpsilon;

    std::size_t channels() const { return mean.size(); }
};

/// (x - mean) / (sd + eps) per channel. A constant channel maps to zeros.
std::pair<Matrix, NormStats> instance_normalize(const Matrix& x, double epsilon = kNormEpsilon);

/// y * (sd + eps) + mean per channel.
Matrix denormalize(const Matrix& y, const NormStats& stats);
/// Differentiable variant for model outputs laid out [S x N].
ad::DiffArray denormalize(const ad::DiffArray& y, const NormStats& stats);

struct DecompPair {
    Matrix seasonal;
    Matrix trend;
};

/// Moving-average trend (centered window, replicate padding) and residual seasonal part.
DecompPair series_decomp(const Matrix& x, long kernel = kDefaultDecompKernel);

} // namespace ister::preprocess
