#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ister/backbone.hpp"
#include "ister/dataset.hpp"

namespace ister::model {

/// Information a checkpoint carries besides the weights.
struct CheckpointMeta {
    std::vector<std::string> channel_names;
    std::optional<data::StandardScaler> scaler; // dataset-level scaling fitted on the training split
    std::string variant = "full";
};

struct Checkpoint {
    IsterModel model;
    CheckpointMeta meta;
};

inline constexpr int kCheckpointVersion = 1;

/// JSON document: format tag, version, config, metadata and every parameter
/// as {name, shape, data}. Serializing a loaded checkpoint reproduces the
/// original bytes.
std::string checkpoint_json(const IsterModel& model, const CheckpointMeta& meta);
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const IsterModel& model, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace ister::model
