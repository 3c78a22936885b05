#include "ister/interpretability.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ister/error.hpp"
#include "ister/io.hpp"

namespace ister::interpret {

using nlohmann::json;

Branch parse_branch(const std::string& name)
{
    if (name == "both") return Branch::both;
    if (name == "channel") return Branch::channel;
    if (name == "period") return Branch::period;
    throw ConfigError("unknown branch '" + name + "' (expected both, channel or period)");
}

std::string to_string(Branch b)
{
    switch (b) {
    case Branch::both: return "both";
    case Branch::channel: return "channel";
    case Branch::period: return "period";
    }
    return "both";
}

ExportFormat parse_format(const std::string& name)
{
    if (name == "json") return ExportFormat::json;
    if (name == "csv") return ExportFormat::csv;
    if (name == "svg-bar" || name == "svg") return ExportFormat::svg_bar;
    throw ConfigError("unknown format '" + name + "' (expected json, csv or svg-bar)");
}

std::string to_string(ExportFormat f)
{
    switch (f) {
    case ExportFormat::json: return "json";
    case ExportFormat::csv: return "csv";
    case ExportFormat::svg_bar: return "svg-bar";
    }
    return "json";
}

namespace {

struct PeriodGroup {
    periodicity::PeriodPlan plan;
    std::vector<double> sums;
    std::size_t windows = 0;
    std::size_t first_seen = 0;
};

void add_into(std::vector<double>& acc, const std::vector<double>& x)
{
    if (acc.empty()) {
        acc.assign(x.size(), 0.0);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        acc[i] += x[i];
    }
}

} // namespace

ContributionReport extract_contributions(const model::IsterModel& model, const std::vector<data::TimeWindow>& windows,
                                         const std::vector<std::string>& channel_names,
                                         std::optional<std::size_t> layer, Branch branch)
{
    const auto& cfg = model.config();
    if (!channel_names.empty() && channel_names.size() != cfg.channels) {
        throw DimensionError("explain: " + std::to_string(channel_names.size()) + " channel names for " +
                             std::to_string(cfg.channels) + " channels");
    }
    const std::size_t chosen = layer.value_or(cfg.blocks - 1);
    if (chosen >= cfg.blocks) {
        throw ConfigError("explain.layer: " + std::to_string(chosen) + " is out of range for " +
                          std::to_string(cfg.blocks) + " blocks");
    }
    const bool want_channel = branch != Branch::period;
    const bool want_period = branch != Branch::channel;
    if (want_channel && cfg.channel_attention != model::AttentionKind::dot) {
        throw ConfigError("explain: the channel encoder uses " + model::to_string(cfg.channel_attention) +
                          " attention; contribution scores need dot attention");
    }
    if (want_period && cfg.period_attention != model::AttentionKind::dot) {
        throw ConfigError("explain: the period encoder uses " + model::to_string(cfg.period_attention) +
                          " attention; contribution scores need dot attention");
    }
    if (windows.empty()) {
        throw DataError("explain: no windows to aggregate");
    }

    std::vector<double> channel_sums;
    std::map<std::string, PeriodGroup> groups;
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto forecast = model.forward(windows[w].lookback, true);
        const auto& cap = *forecast.capture;
        if (want_channel) {
            add_into(channel_sums, cap.channel_weights[chosen]->token_scores(0));
        }
        if (want_period) {
            const auto& weights = *cap.period_weights[chosen];
            std::vector<double> mean(weights.tokens, 0.0);
            for (std::size_t b = 0; b < weights.batch; ++b) {
                const auto s = weights.token_scores(b);
                for (std::size_t i = 0; i < s.size(); ++i) {
                    mean[i] += s[i] / static_cast<double>(weights.batch);
                }
            }
            auto [it, inserted] = groups.try_emplace(cap.plan.signature());
            if (inserted) {
                it->second.plan = cap.plan;
                it->second.first_seen = w;
            }
            add_into(it->second.sums, mean);
            it->second.windows += 1;
        }
    }

    ContributionReport r;
    r.lookback = cfg.lookback;
    r.layer = chosen;
    if (want_channel) {
        r.channel_windows = windows.size();
        for (std::size_t c = 0; c < channel_sums.size(); ++c) {
            const auto label = channel_names.empty() ? "ch" + std::to_string(c) : channel_names[c];
            r.channels.push_back({label, channel_sums[c] / static_cast<double>(windows.size()), 0, cfg.lookback});
        }
    }
    if (want_period) {
        // largest group wins; ties go to the layout seen first
        const PeriodGroup* best = nullptr;
        for (const auto& [sig, g] : groups) {
            if (!best || g.windows > best->windows ||
                (g.windows == best->windows && g.first_seen < best->first_seen)) {
                best = &g;
            }
        }
        r.period_windows = best->windows;
        r.plan_signature = best->plan.signature();
        const double n = static_cast<double>(best->windows);
        r.periods.push_back({"channel-token", best->sums[0] / n, 0, cfg.lookback});
        for (std::size_t i = 0; i < best->plan.components(); ++i) {
            const auto& seg = best->plan.layout[i];
            r.periods.push_back({best->plan.label(i), best->sums[i + 1] / n, seg.start, seg.start + seg.length});
        }
        std::vector<const PeriodGroup*> rest;
        for (const auto& [sig, g] : groups) {
            if (&g != best) {
                rest.push_back(&g);
            }
        }
        std::sort(rest.begin(), rest.end(), [](const PeriodGroup* a, const PeriodGroup* b) {
            return a->windows != b->windows ? a->windows > b->windows : a->first_seen < b->first_seen;
        });
        for (const auto* g : rest) {
            r.other_plans.push_back({g->plan.signature(), g->windows});
        }
    }
    return r;
}

namespace {

json entries_json(const std::vector<ScoreEntry>& entries)
{
    json out = json::array();
    for (const auto& e : entries) {
        out.push_back({{"label", e.label}, {"score", e.score}, {"range", {e.range_start, e.range_end}}});
    }
    return out;
}

std::vector<ScoreEntry> entries_from(const json& j)
{
    std::vector<ScoreEntry> out;
    for (const auto& e : j) {
        const auto& range = e.at("range");
        out.push_back({e.at("label").get<std::string>(), e.at("score").get<double>(),
                       range.at(0).get<std::size_t>(), range.at(1).get<std::size_t>()});
    }
    return out;
}

std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    return out + "\"";
}

} // namespace

std::string report_json(const ContributionReport& r)
{
    json others = json::array();
    for (const auto& g : r.other_plans) {
        others.push_back({{"plan", g.signature}, {"windows", g.windows}});
    }
    json j = {{"format", "ister-contributions"},
              {"version", 1},
              {"lookback", r.lookback},
              {"layer", r.layer},
              {"channels", {{"windows", r.channel_windows}, {"entries", entries_json(r.channels)}}},
              {"periods",
               {{"windows", r.period_windows},
                {"plan", r.plan_signature},
                {"entries", entries_json(r.periods)},
                {"other_plans", others}}}};
    return j.dump(1);
}

ContributionReport parse_report(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        if (j.at("format").get<std::string>() != "ister-contributions") {
            throw DataError("not a contribution report");
        }
        ContributionReport r;
        r.lookback = j.at("lookback").get<std::size_t>();
        r.layer = j.at("layer").get<std::size_t>();
        const auto& ch = j.at("channels");
        r.channel_windows = ch.at("windows").get<std::size_t>();
        r.channels = entries_from(ch.at("entries"));
        const auto& pe = j.at("periods");
        r.period_windows = pe.at("windows").get<std::size_t>();
        r.plan_signature = pe.at("plan").get<std::string>();
        r.periods = entries_from(pe.at("entries"));
        for (const auto& g : pe.at("other_plans")) {
            r.other_plans.push_back({g.at("plan").get<std::string>(), g.at("windows").get<std::size_t>()});
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed contribution report: ") + e.what());
    }
}

std::string report_csv(const ContributionReport& r)
{
    std::ostringstream os;
    os << "label,score,range_start,range_end\n";
    auto rows = [&](const std::vector<ScoreEntry>& entries) {
        for (const auto& e : entries) {
            os << csv_field(e.label) << ',' << fixed(e.score, 12) << ',' << e.range_start << ',' << e.range_end
               << '\n';
        }
    };
    rows(r.channels);
    rows(r.periods);
    return os.str();
}

std::string report_svg(const ContributionReport& r)
{
    constexpr double width = 800.0;
    constexpr double height = 400.0;
    constexpr double left = 50.0;
    constexpr double right = 20.0;
    constexpr double top = 30.0;
    constexpr double bottom = 90.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    std::vector<std::pair<const ScoreEntry*, const char*>> bars;
    for (const auto& e : r.channels) bars.emplace_back(&e, "#3b6ea5");
    for (const auto& e : r.periods) bars.emplace_back(&e, "#c2702f");

    double peak = 0.0;
    for (const auto& [e, colour] : bars) peak = std::max(peak, e->score);
    if (peak <= 0.0) peak = 1.0;

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" viewBox=\"0 0 800 400\">\n";
    os << "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
    os << "<text x=\"400\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
       << "contribution scores, layer " << r.layer << "</text>\n";
    os << "<line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(top + plot_h, 1) << "\" x2=\""
       << fixed(width - right, 1) << "\" y2=\"" << fixed(top + plot_h, 1) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed(left - 6, 1) << "\" y=\"" << fixed(top + 4, 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << fixed(peak, 3) << "</text>\n";

    const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& [e, colour] = bars[i];
        const double h = plot_h * e->score / peak;
        const double x = left + slot * static_cast<double>(i) + slot * 0.1;
        const double cx = left + slot * (static_cast<double>(i) + 0.5);
        const double label_y = top + plot_h + 12.0;
        os << "<rect x=\"" << fixed(x, 2) << "\" y=\"" << fixed(top + plot_h - h, 2) << "\" width=\""
           << fixed(slot * 0.8, 2) << "\" height=\"" << fixed(h, 2) << "\" fill=\"" << colour << "\"/>\n";
        os << "<text x=\"" << fixed(cx, 2) << "\" y=\"" << fixed(label_y, 2) << "\" transform=\"rotate(60 "
           << fixed(cx, 2) << ' ' << fixed(label_y, 2)
           << ")\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(e->label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void export_report(const ContributionReport& report, const std::filesystem::path& path, ExportFormat format)
{
    switch (format) {
    case ExportFormat::json: io::write_text_atomic(path, report_json(report)); break;
    case ExportFormat::csv: io::write_text_atomic(path, report_csv(report)); break;
    case ExportFormat::svg_bar: io::write_text_atomic(path, report_svg(report)); break;
    }
}

} // namespace ister::interpret
