#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ister/attention.hpp"

namespace ister::bench {

struct BenchPoint {
    std::size_t tokens = 0;
    ad::OpCount ops;
    double median_seconds = 0.0;
};

struct BenchResult {
    attention::Mechanism mechanism = attention::Mechanism::dot;
    std::size_t width = 0;
    std::size_t reps = 0;
    std::vector<BenchPoint> points;
    double slope = 0.0;      // log-log fit of total op count against tokens
    double time_slope = 0.0; // same fit over median wall time; noisy

    std::string to_json() const;
};

struct BenchSpec {
    std::vector<attention::Mechanism> mechanisms{attention::Mechanism::dot, attention::Mechanism::multihead};
    std::vector<std::size_t> grid{16, 32, 64, 128, 256};
    std::size_t width = 64;
    std::size_t heads = attention::kDefaultHeads;
    std::size_t reps = 5;

    /// Grid of at least 3 strictly increasing points spanning at least 8x,
    /// at least 5 reps; throws ConfigError naming the field.
    void validate() const;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Runs every mechanism over the grid. Each rep is timed with a monotonic clock
/// and counted; counts that differ between reps raise NumericError.
std::vector<BenchResult> run(const BenchSpec& spec);

std::string results_json(const std::vector<BenchResult>& results);
std::string results_csv(const std::vector<BenchResult>& results);

} // namespace ister::bench
