#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ister/backbone.hpp"
#include "ister/dataset.hpp"
#include "ister/training.hpp"

namespace ister::cli {

inline constexpr int kSchemaVersion = 1;

enum class SynthKind { multiperiodic, signal_among_noise, coupled };

SynthKind parse_synth_kind(const std::string& name);
std::string to_string(SynthKind kind);

/// Parameters for the built-in synthetic generators. Fields a generator does
/// not use are ignored.
struct SynthSpec {
    SynthKind kind = SynthKind::multiperiodic;
    std::size_t length = 2000;
    std::size_t channels = 3;
    std::vector<double> periods{24.0, 12.0};
    std::vector<double> amplitudes{1.0, 0.5};
    double noise_sd = 0.1;
    double trend_slope = 0.0;
    std::size_t lag = 3;            // coupled
    std::size_t noise_channels = 7; // signal-among-noise
    std::uint64_t seed = 1;

    void validate() const;
    data::SeriesTable generate() const;
};

struct DataSource {
    std::optional<std::filesystem::path> csv;
    std::optional<std::string> timestamp_column;
    bool has_header = true;
    std::optional<SynthSpec> synth;
    data::SplitSpec split = data::SplitSpec::standard();
    bool scale = true;
};

/// Everything one `train` run needs. The model's channel count comes from the
/// data and is filled in when the table is loaded.
struct RunConfig {
    int schema_version = kSchemaVersion;
    DataSource data;
    model::ModelConfig model;
    training::TrainConfig train;
    model::Variant variant = model::Variant::full;
    std::filesystem::path out = "ister-run";
    std::uint64_t seed = 2024;

    /// Checks every field that can be checked without reading the data,
    /// including that referenced files exist. Throws ConfigError.
    void validate() const;

    /// Loads or generates the table. Throws DataError on malformed input.
    data::SeriesTable load_table() const;

    /// Model config with the variant applied and N taken from `channels`.
    model::ModelConfig model_for(std::size_t channels) const;
};

/// Parses the key-value config format. Relative paths resolve against
/// `base_dir`. Unknown keys and malformed values raise ConfigError naming the key.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical text form; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& config);

} // namespace ister::cli
