#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ister/backbone.hpp"
#include "ister/dataset.hpp"

namespace ister::interpret {

/// One bar of a contribution chart: a token label, its averaged score, and
/// the lookback steps [range_start, range_end) the token was embedded from.
struct ScoreEntry {
    std::string label;
    double score = 0.0;
    std::size_t range_start = 0;
    std::size_t range_end = 0;
    friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

/// A component layout seen in some windows but not reported.
struct PlanGroup {
    std::string signature;
    std::size_t windows = 0;
    friend bool operator==(const PlanGroup&, const PlanGroup&) = default;
};

/// Query-softmax readout of a trained model. Channel scores come from the
/// channel encoder, averaged over every window; period scores come from the
/// period encoder, averaged over channels and over the windows sharing the
/// most common component layout. A section is empty when it was not requested.
struct ContributionReport {
    std::size_t lookback = 0;
    std::size_t layer = 0;

    std::size_t channel_windows = 0;
    std::vector<ScoreEntry> channels;

    std::size_t period_windows = 0;
    std::string plan_signature;
    std::vector<ScoreEntry> periods; // "channel-token" first, then "p(j)" in layout order
    std::vector<PlanGroup> other_plans;

    friend bool operator==(const ContributionReport&, const ContributionReport&) = default;
};

enum class Branch { both, channel, period };

Branch parse_branch(const std::string& name);
std::string to_string(Branch b);

/// Channel labels come from `channel_names` ("ch0", "ch1", ... when empty).
/// `layer` defaults to the last block. Throws ConfigError when a requested
/// branch does not use dot attention or the layer is out of range, and
/// DataError when there are no windows.
ContributionReport extract_contributions(const model::IsterModel& model, const std::vector<data::TimeWindow>& windows,
                                         const std::vector<std::string>& channel_names = {},
                                         std::optional<std::size_t> layer = std::nullopt,
                                         Branch branch = Branch::both);

enum class ExportFormat { json, csv, svg_bar };

ExportFormat parse_format(const std::string& name);
std::string to_string(ExportFormat f);

std::string report_json(const ContributionReport& report);
ContributionReport parse_report(const std::string& text);

/// Header "label,score,range_start,range_end", channel rows then period rows.
std::string report_csv(const ContributionReport& report);

/// 800x400 bar chart, one bar per entry, labels under the bars.
std::string report_svg(const ContributionReport& report);

void export_report(const ContributionReport& report, const std::filesystem::path& path, ExportFormat format);

} // namespace ister::interpret
