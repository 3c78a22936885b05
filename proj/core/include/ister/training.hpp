#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ister/autodiff/diff_array.hpp"
#include "ister/backbone.hpp"
#include "ister/dataset.hpp"
#include "ister/matrix.hpp"
#include "ister/nn.hpp"

namespace ister::training {

double mse(const Matrix& pred, const Matrix& target);
double mae(const Matrix& pred, const Matrix& target);

/// Differentiable mean squared error against a constant target.
ad::DiffArray mse_loss(const ad::DiffArray& pred, const Matrix& target);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First and second moments per parameter, plus the shared step count.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;

    static AdamState zeros(const nn::ParameterList& params);
};

/// One bias-corrected Adam update from the gradients accumulated on each
/// parameter (a parameter with no gradient counts as zero). Throws
/// NumericError before touching anything if a gradient is not finite.
void adam_step(const nn::ParameterList& params, AdamState& state, double learning_rate, const AdamConfig& adam = {});

enum class LrSchedule { constant, halve_per_epoch };

LrSchedule parse_schedule(const std::string& name);
std::string to_string(LrSchedule s);

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 10;
    std::size_t patience = 3;
    std::uint64_t seed = 2024;
    LrSchedule schedule = LrSchedule::constant;
    AdamConfig adam;

    /// Throws ConfigError naming the field.
    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0; // 1-based
    double learning_rate = 0.0;
    double train_loss = 0.0; // mean batch loss, training mode
    double val_loss = 0.0;   // MSE in evaluation mode
    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    bool early_stopped = false;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static TrainReport from_json(const std::string& text);

    /// Everything except wall time, for reproducibility checks.
    bool same_metrics(const TrainReport& other) const;
};

/// Windows for each split, already on the dataset-scaled axis.
struct WindowSets {
    std::vector<data::TimeWindow> train;
    std::vector<data::TimeWindow> val;
    std::vector<data::TimeWindow> test;
};

/// Cuts windows from each split: stride 1 for training, S for val/test.
WindowSets make_windows(const data::Splits& splits, std::size_t lookback, std::size_t horizon);

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
};

/// Mean per-window MSE/MAE of evaluation-mode forecasts.
Metrics evaluate(const model::IsterModel& model, const std::vector<data::TimeWindow>& windows);

struct TrainResult {
    model::IsterModel model; // best-validation parameters
    TrainReport report;
};

TrainResult train(const model::IsterModel& initial, const WindowSets& sets, const TrainConfig& config);

struct SeedRun {
    std::uint64_t seed = 0;
    TrainReport report;
};

struct RobustnessSummary {
    std::vector<SeedRun> runs;
    double mse_mean = 0.0;
    double mse_sd = 0.0;
    double mae_mean = 0.0;
    double mae_sd = 0.0;

    std::string to_json() const;
};

/// Trains one model per seed (seed drives both initialization and batching).
RobustnessSummary run_seeds(const model::ModelConfig& config, const WindowSets& sets, TrainConfig base,
                            const std::vector<std::uint64_t>& seeds);

} // namespace ister::training
