#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "ister/autodiff/diff_array.hpp"

namespace ister::ad {

// Matrix product over the last two axes.
//   [m x k] * [k x n]         -> [m x n]
//   [... x m x k] * [k x n]   -> [... x m x n]   (shared right operand)
//   [b x m x k] * [b x k x n] -> [b x m x n]     (batched)
DiffArray matmul(const DiffArray& a, const DiffArray& b);

// Elementwise arithmetic with numpy-style broadcasting (shapes aligned on the
// right; size-1 or missing axes stretch).
DiffArray add(const DiffArray& a, const DiffArray& b);
DiffArray sub(const DiffArray& a, const DiffArray& b);
DiffArray mul(const DiffArray& a, const DiffArray& b);
DiffArray scale(const DiffArray& x, double factor);

DiffArray sum(const DiffArray& x, std::size_t axis, bool keepdim = false);
DiffArray mean(const DiffArray& x, std::size_t axis, bool keepdim = false);
DiffArray sum_all(const DiffArray& x);
DiffArray mean_all(const DiffArray& x);

DiffArray softmax_along(const DiffArray& x, std::size_t axis);

DiffArray reshape(const DiffArray& x, Shape shape);
DiffArray transpose(const DiffArray& x, std::size_t axis_a, std::size_t axis_b);
DiffArray permute(const DiffArray& x, const std::vector<std::size_t>& axes);
DiffArray concat(const std::vector<DiffArray>& parts, std::size_t axis);
DiffArray slice(const DiffArray& x, std::size_t axis, std::size_t start, std::size_t length);

// Exact (erf) GELU.
DiffArray gelu(const DiffArray& x);

// Normalizes over the last axis, then applies per-feature gain and bias.
DiffArray layer_norm(const DiffArray& x, const DiffArray& gain, const DiffArray& bias, double eps = 1e-5);

// Inverted dropout: zeroes with probability `rate`, rescales survivors.
DiffArray dropout(const DiffArray& x, double rate, std::mt19937_64& rng);

} // namespace ister::ad
