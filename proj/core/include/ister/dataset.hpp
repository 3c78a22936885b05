#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ister/matrix.hpp"

namespace ister::data {

/// A multivariate series, time-major: values is [timesteps x channels].
struct SeriesTable {
    std::string name;
    Matrix values;
    std::vector<std::string> channel_names;
    std::optional<std::string> frequency;
    std::vector<std::string> timestamps; // empty when the source had none

    std::size_t length() const { return values.rows; }
    std::size_t channels() const { return values.cols; }

    /// Rows [start, start + count) as a new table (names and timestamps kept).
    SeriesTable rows(std::size_t start, std::size_t count) const;
};

/// A lookback/horizon pair cut from a table.
struct TimeWindow {
    Matrix lookback; // [T x N]
    Matrix horizon;  // [S x N]
    std::size_t origin = 0; // row of the first lookback step in the parent table
};

/// Chronological train/val/test split, either by fractions or by explicit row counts.
struct SplitSpec {
    std::optional<std::array<double, 3>> fractions;
    std::optional<std::array<std::size_t, 3>> counts;

    static SplitSpec ratio(double train, double val, double test);
    static SplitSpec explicit_counts(std::size_t train, std::size_t val, std::size_t test);
    static SplitSpec standard() { return ratio(0.7, 0.1, 0.2); }
};

struct Splits {
    SeriesTable train;
    SeriesTable val;
    SeriesTable test;
    std::array<std::size_t, 3> offsets{}; // first row of each split in the source table
};

SeriesTable load_csv(const std::filesystem::path& path, bool has_header = true,
                     const std::optional<std::string>& timestamp_column = std::nullopt);

SeriesTable parse_csv(std::istream& in, const std::string& name, bool has_header = true,
                      const std::optional<std::string>& timestamp_column = std::nullopt);

void write_csv(const std::filesystem::path& path, const Matrix& values, const std::vector<std::string>& channel_names);

/// Splits into contiguous, ordered, non-overlapping segments. Every segment must
/// hold at least `min_rows` rows (normally T + S).
Splits chronological_split(const SeriesTable& table, const SplitSpec& spec, std::size_t min_rows);

/// All windows with the given lookback/horizon, origins 0, stride, 2*stride, ...
std::vector<TimeWindow> windows(const SeriesTable& table, long lookback, long horizon, long stride = 1);

/// Per-channel z-scoring fitted on one table (the training split).
class StandardScaler {
public:
    StandardScaler() = default;
    StandardScaler(std::vector<double> mean, std::vector<double> sd);

    static StandardScaler fit(const SeriesTable& table);

    SeriesTable transform(const SeriesTable& table) const;
    Matrix transform(const Matrix& values) const;
    Matrix inverse(const Matrix& values) const;

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& sd() const { return sd_; }
    std::size_t channels() const { return mean_.size(); }

private:
    std::vector<double> mean_;
    std::vector<double> sd_;
};

struct MultiPeriodicSpec {
    std::size_t length = 1000;
    std::size_t channels = 1;
    std::vector<double> periods;
    std::vector<double> amplitudes;
    double noise_sd = 0.0;
    double trend_slope = 0.0;
    std::uint64_t seed = 0;
};

/// channel c at step t: sum_j amp_j * sin(2*pi*t/period_j + phase(c, j)) + slope*t + noise,
/// with phases and noise drawn from `seed`.
SeriesTable synth_multiperiodic(const MultiPeriodicSpec& spec);

/// Channel 0 carries a noiseless-plus-noise multi-periodic signal; the remaining
/// channels are white noise with the same marginal scale.
SeriesTable synth_signal_among_noise(std::size_t length, std::size_t noise_channels, double noise_sd,
                                     std::uint64_t seed);

/// Multi-periodic channels with planted cross-channel dependence. Every channel
/// carries its own two-period pattern whose amplitude is redrawn from
/// U(0.3, 1.7) every `amplitude_block` steps, plus a unit-variance AR(1)
/// component. Channel 0 (the driver) leads: each other channel carries the
/// driver's AR(1) component delayed by `lag` steps.
SeriesTable synth_coupled(std::size_t length, std::size_t channels, std::size_t lag, double noise_sd,
                          std::uint64_t seed, std::size_t amplitude_block = 48);

} // namespace ister::data
