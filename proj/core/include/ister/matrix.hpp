#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ister {

/// Dense row-major [rows x cols] block of doubles.
///
/// Plain data, no gradient tracking. Series slices are stored time-major:
/// row = timestep, column = channel.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::vector<double> column(std::size_t c) const;

    /// Rows [start, start + count).
    Matrix row_slice(std::size_t start, std::size_t count) const;

    Matrix transposed() const;

    bool empty() const { return data.empty(); }
    std::string shape_string() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// True when every element is finite.
bool all_finite(std::span<const double> values);

} // namespace ister
