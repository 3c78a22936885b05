#include "ister_cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ister/error.hpp"
#include "ister/io.hpp"

namespace ister::cli {

SynthKind parse_synth_kind(const std::string& name)
{
    if (name == "multiperiodic") return SynthKind::multiperiodic;
    if (name == "signal-among-noise") return SynthKind::signal_among_noise;
    if (name == "coupled") return SynthKind::coupled;
    throw ConfigError("synth.kind: unknown generator '" + name +
                      "' (expected multiperiodic, signal-among-noise or coupled)");
}

std::string to_string(SynthKind kind)
{
    switch (kind) {
    case SynthKind::multiperiodic: return "multiperiodic";
    case SynthKind::signal_among_noise: return "signal-among-noise";
    case SynthKind::coupled: return "coupled";
    }
    return "multiperiodic";
}

void SynthSpec::validate() const
{
    if (length == 0) throw ConfigError("synth.length: must be positive");
    if (!(noise_sd >= 0.0)) throw ConfigError("synth.noise_sd: must be non-negative");
    switch (kind) {
    case SynthKind::multiperiodic:
        if (channels == 0) throw ConfigError("synth.channels: must be positive");
        if (periods.size() != amplitudes.size()) {
            throw ConfigError("synth.amplitudes: expected " + std::to_string(periods.size()) + " values to match periods");
        }
        for (double p : periods) {
            if (!(p > 0.0)) throw ConfigError("synth.periods: must be positive");
        }
        break;
    case SynthKind::signal_among_noise:
        if (noise_channels == 0) throw ConfigError("synth.noise_channels: must be positive");
        break;
    case SynthKind::coupled:
        if (channels < 2) throw ConfigError("synth.channels: coupled data needs at least 2 channels");
        if (lag >= length) throw ConfigError("synth.lag: must be shorter than the series");
        break;
    }
}

data::SeriesTable SynthSpec::generate() const
{
    validate();
    switch (kind) {
    case SynthKind::signal_among_noise: return data::synth_signal_among_noise(length, noise_channels, noise_sd, seed);
    case SynthKind::coupled: return data::synth_coupled(length, channels, lag, noise_sd, seed);
    case SynthKind::multiperiodic: break;
    }
    data::MultiPeriodicSpec spec;
    spec.length = length;
    spec.channels = channels;
    spec.periods = periods;
    spec.amplitudes = amplitudes;
    spec.noise_sd = noise_sd;
    spec.trend_slope = trend_slope;
    spec.seed = seed;
    return data::synth_multiperiodic(spec);
}

void RunConfig::validate() const
{
    if (schema_version != kSchemaVersion) {
        throw ConfigError("schema_version: unsupported version " + std::to_string(schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
    }
    if (data.csv && data.synth) throw ConfigError("data.csv: a config may name a CSV file or a [synth] section, not both");
    if (!data.csv && !data.synth) throw ConfigError("data.csv: no data source (set data.csv or add a [synth] section)");
    if (data.csv && !std::filesystem::is_regular_file(*data.csv)) {
        throw ConfigError("data.csv: file not found: " + data.csv->string());
    }
    if (data.synth) data.synth->validate();
    if (data.split.fractions) {
        double total = 0.0;
        for (double f : *data.split.fractions) {
            if (!(f >= 0.0)) throw ConfigError("data.split: fractions must be non-negative");
            total += f;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data.split: fractions must sum to 1");
    }
    model_for(data.synth && data.synth->kind != SynthKind::signal_among_noise ? data.synth->channels : 1).validate();
    train.validate();
    if (out.empty()) throw ConfigError("out: output directory must not be empty");
}

data::SeriesTable RunConfig::load_table() const
{
    if (data.synth) return data.synth->generate();
    return data::load_csv(*data.csv, data.has_header, data.timestamp_column);
}

model::ModelConfig RunConfig::model_for(std::size_t channels) const
{
    auto c = model::ablation_variant(model, variant);
    c.channels = channels;
    return c;
}

namespace {

std::string scalar(const CLI::ConfigItem& item)
{
    if (item.inputs.size() != 1) {
        throw ConfigError(item.fullname() + ": expected a single value, got " + std::to_string(item.inputs.size()));
    }
    return item.inputs.front();
}

std::uint64_t to_unsigned(const std::string& key, const std::string& text)
{
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
    }
    return v;
}

double to_double(const std::string& key, const std::string& text)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
}

bool to_bool(const std::string& key, const std::string& text)
{
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> to_doubles(const CLI::ConfigItem& item)
{
    std::vector<double> out;
    for (const auto& s : item.inputs) out.push_back(to_double(item.fullname(), s));
    return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text)
{
    std::filesystem::path p(text);
    return p.is_relative() && !base.empty() ? base / p : p;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string list(const std::vector<double>& values)
{
    std::string s = "[";
    for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + fmt(values[i]);
    return s + "]";
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

} // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir)
{
    RunConfig c;
    std::istringstream in(text);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    bool has_version = false;
    SynthSpec synth;
    bool has_synth = false;
    using Handler = std::function<void(const CLI::ConfigItem&)>;
    auto u = [](const CLI::ConfigItem& it) { return to_unsigned(it.fullname(), scalar(it)); };
    auto d = [](const CLI::ConfigItem& it) { return to_double(it.fullname(), scalar(it)); };
    auto& m = c.model;
    auto& t = c.train;
    const std::map<std::string, Handler> handlers{
        {"schema_version", [&](const auto& it) { c.schema_version = static_cast<int>(u(it)); has_version = true; }},
        {"seed", [&](const auto& it) { c.seed = u(it); }},
        {"variant", [&](const auto& it) { c.variant = model::parse_variant(scalar(it)); }},
        {"out", [&](const auto& it) { c.out = resolve(base_dir, scalar(it)); }},
        {"data.csv", [&](const auto& it) { c.data.csv = resolve(base_dir, scalar(it)); }},
        {"data.timestamp_column", [&](const auto& it) { c.data.timestamp_column = scalar(it); }},
        {"data.header", [&](const auto& it) { c.data.has_header = to_bool(it.fullname(), scalar(it)); }},
        {"data.scale", [&](const auto& it) { c.data.scale = to_bool(it.fullname(), scalar(it)); }},
        {"data.split",
         [&](const auto& it) {
             auto f = to_doubles(it);
             if (f.size() != 3) throw ConfigError("data.split: expected 3 fractions [train, val, test]");
             c.data.split = data::SplitSpec::ratio(f[0], f[1], f[2]);
         }},
        {"data.split_counts",
         [&](const auto& it) {
             if (it.inputs.size() != 3) throw ConfigError("data.split_counts: expected 3 row counts [train, val, test]");
             c.data.split = data::SplitSpec::explicit_counts(to_unsigned(it.fullname(), it.inputs[0]),
                                                             to_unsigned(it.fullname(), it.inputs[1]),
                                                             to_unsigned(it.fullname(), it.inputs[2]));
         }},
        {"synth.kind", [&](const auto& it) { synth.kind = parse_synth_kind(scalar(it)); }},
        {"synth.length", [&](const auto& it) { synth.length = u(it); }},
        {"synth.channels", [&](const auto& it) { synth.channels = u(it); }},
        {"synth.periods", [&](const auto& it) { synth.periods = to_doubles(it); }},
        {"synth.amplitudes", [&](const auto& it) { synth.amplitudes = to_doubles(it); }},
        {"synth.noise_sd", [&](const auto& it) { synth.noise_sd = d(it); }},
        {"synth.trend_slope", [&](const auto& it) { synth.trend_slope = d(it); }},
        {"synth.lag", [&](const auto& it) { synth.lag = u(it); }},
        {"synth.noise_channels", [&](const auto& it) { synth.noise_channels = u(it); }},
        {"synth.seed", [&](const auto& it) { synth.seed = u(it); }},
        {"model.lookback", [&](const auto& it) { m.lookback = u(it); }},
        {"model.horizon", [&](const auto& it) { m.horizon = u(it); }},
        {"model.width", [&](const auto& it) { m.width = u(it); }},
        {"model.top_k", [&](const auto& it) { m.top_k = u(it); }},
        {"model.blocks", [&](const auto& it) { m.blocks = u(it); }},
        {"model.heads", [&](const auto& it) { m.heads = u(it); }},
        {"model.ffn_multiple", [&](const auto& it) { m.ffn_multiple = u(it); }},
        {"model.dropout", [&](const auto& it) { m.dropout = d(it); }},
        {"model.decomp_kernel", [&](const auto& it) { m.decomp_kernel = static_cast<long>(u(it)); }},
        {"train.learning_rate", [&](const auto& it) { t.learning_rate = d(it); }},
        {"train.batch_size", [&](const auto& it) { t.batch_size = u(it); }},
        {"train.max_epochs", [&](const auto& it) { t.max_epochs = u(it); }},
        {"train.patience", [&](const auto& it) { t.patience = u(it); }},
        {"train.schedule", [&](const auto& it) { t.schedule = training::parse_schedule(scalar(it)); }},
    };

    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        const auto key = item.fullname();
        if (key.rfind("synth.", 0) == 0) has_synth = true;
        auto h = handlers.find(key);
        if (h == handlers.end()) throw ConfigError(key + ": unknown key");
        try {
            h->second(item);
        } catch (const ConfigError& e) {
            const std::string what = e.what();
            if (what.rfind(key, 0) == 0) throw;
            throw ConfigError(key + ": " + what);
        }
    }
    if (!has_version) throw ConfigError("schema_version: missing (expected schema_version = " +
                                        std::to_string(kSchemaVersion) + ")");
    if (has_synth) c.data.synth = synth;
    c.train.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    if (!std::filesystem::is_regular_file(path)) throw ConfigError("config: file not found: " + path.string());
    return parse_run_config(io::read_text(path), path.parent_path());
}

std::string to_text(const RunConfig& c)
{
    std::ostringstream os;
    os << "schema_version = " << c.schema_version << '\n'
       << "seed = " << c.seed << '\n'
       << "variant = " << quoted(model::to_string(c.variant)) << '\n'
       << "out = " << quoted(c.out.string()) << "\n\n[data]\n";
    if (c.data.csv) os << "csv = " << quoted(c.data.csv->string()) << '\n';
    if (c.data.timestamp_column) os << "timestamp_column = " << quoted(*c.data.timestamp_column) << '\n';
    os << "header = " << (c.data.has_header ? "true" : "false") << '\n'
       << "scale = " << (c.data.scale ? "true" : "false") << '\n';
    if (c.data.split.counts) {
        const auto& n = *c.data.split.counts;
        os << "split_counts = [" << n[0] << ", " << n[1] << ", " << n[2] << "]\n";
    } else if (c.data.split.fractions) {
        const auto& f = *c.data.split.fractions;
        os << "split = " << list({f[0], f[1], f[2]}) << '\n';
    }
    if (c.data.synth) {
        const auto& s = *c.data.synth;
        os << "\n[synth]\nkind = " << quoted(to_string(s.kind)) << '\n'
           << "length = " << s.length << '\n'
           << "channels = " << s.channels << '\n'
           << "periods = " << list(s.periods) << '\n'
           << "amplitudes = " << list(s.amplitudes) << '\n'
           << "noise_sd = " << fmt(s.noise_sd) << '\n'
           << "trend_slope = " << fmt(s.trend_slope) << '\n'
           << "lag = " << s.lag << '\n'
           << "noise_channels = " << s.noise_channels << '\n'
           << "seed = " << s.seed << '\n';
    }
    const auto& m = c.model;
    os << "\n[model]\nlookback = " << m.lookback << '\n'
       << "horizon = " << m.horizon << '\n'
       << "width = " << m.width << '\n'
       << "top_k = " << m.top_k << '\n'
       << "blocks = " << m.blocks << '\n'
       << "heads = " << m.heads << '\n'
       << "ffn_multiple = " << m.ffn_multiple << '\n'
       << "dropout = " << fmt(m.dropout) << '\n'
       << "decomp_kernel = " << m.decomp_kernel << '\n';
    const auto& t = c.train;
    os << "\n[train]\nlearning_rate = " << fmt(t.learning_rate) << '\n'
       << "batch_size = " << t.batch_size << '\n'
       << "max_epochs = " << t.max_epochs << '\n'
       << "patience = " << t.patience << '\n'
       << "schedule = " << quoted(training::to_string(t.schedule)) << '\n';
    return os.str();
}

} // namespace ister::cli
