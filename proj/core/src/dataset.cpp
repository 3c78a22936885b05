#include "ister/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "ister/error.hpp"
#include "ister/io.hpp"

namespace ister::data {

namespace {

std::string trim(std::string_view s)
{
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) {
        return {};
    }
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(const std::string& cell)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') {
        ++first;
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::size_t floor_fraction(std::size_t n, double f)
{
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
}

} // namespace

SeriesTable SeriesTable::rows(std::size_t start, std::size_t count) const
{
    SeriesTable out;
    out.name = name;
    out.values = values.row_slice(start, count);
    out.channel_names = channel_names;
    out.frequency = frequency;
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(start),
                              timestamps.begin() + static_cast<std::ptrdiff_t>(start + count));
    }
    return out;
}

SplitSpec SplitSpec::ratio(double train, double val, double test)
{
    SplitSpec s;
    s.fractions = std::array<double, 3>{train, val, test};
    return s;
}

SplitSpec SplitSpec::explicit_counts(std::size_t train, std::size_t val, std::size_t test)
{
    SplitSpec s;
    s.counts = std::array<std::size_t, 3>{train, val, test};
    return s;
}

SeriesTable parse_csv(std::istream& in, const std::string& name, bool has_header,
                      const std::optional<std::string>& timestamp_column)
{
    SeriesTable table;
    table.name = name;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> ts_index;
    std::size_t width = 0;
    std::vector<double> values;

    if (has_header) {
        while (std::getline(in, line)) {
            ++line_no;
            if (!trim(line).empty()) {
                break;
            }
        }
        if (trim(line).empty()) {
            throw DataError(name + ": empty file");
        }
        if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
            line.erase(0, 3);
        }
        auto header = split_fields(line);
        width = header.size();
        if (timestamp_column) {
            auto it = std::find(header.begin(), header.end(), *timestamp_column);
            if (it == header.end()) {
                throw DataError(name + ": timestamp column '" + *timestamp_column + "' not found in header");
            }
            ts_index = static_cast<std::size_t>(it - header.begin());
        }
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (!ts_index || c != *ts_index) {
                table.channel_names.push_back(header[c]);
            }
        }
    } else if (timestamp_column) {
        throw DataError(name + ": a timestamp column can only be named when the file has a header");
    }

    std::size_t data_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_fields(line);
        if (width == 0) {
            width = fields.size();
            for (std::size_t c = 0; c < width; ++c) {
                table.channel_names.push_back("c" + std::to_string(c));
            }
        }
        if (fields.size() != width) {
            std::ostringstream os;
            os << name << ": ragged row at line " << line_no << " (" << fields.size() << " fields, expected " << width
               << ")";
            throw DataError(os.str());
        }
        for (std::size_t c = 0; c < width; ++c) {
            if (ts_index && c == *ts_index) {
                table.timestamps.push_back(fields[c]);
                continue;
            }
            auto v = parse_number(fields[c]);
            if (!v) {
                std::ostringstream os;
                os << name << ": missing or non-numeric value '" << fields[c] << "' at line " << line_no
                   << ", column " << c + 1;
                throw DataError(os.str());
            }
            values.push_back(*v);
        }
        ++data_rows;
    }
    const std::size_t channels = table.channel_names.size();
    if (data_rows == 0 || channels == 0) {
        throw DataError(name + ": no data rows");
    }
    table.values = Matrix(data_rows, channels, std::move(values));
    return table;
}

SeriesTable load_csv(const std::filesystem::path& path, bool has_header,
                     const std::optional<std::string>& timestamp_column)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file: " + path.string());
    }
    return parse_csv(in, path.stem().string(), has_header, timestamp_column);
}

void write_csv(const std::filesystem::path& path, const Matrix& values, const std::vector<std::string>& channel_names)
{
    if (channel_names.size() != values.cols) {
        throw DimensionError("write_csv: channel name count does not match " + values.shape_string());
    }
    std::ostringstream os;
    os.precision(17);
    for (std::size_t c = 0; c < channel_names.size(); ++c) {
        os << (c ? "," : "") << channel_names[c];
    }
    os << "\n";
    for (std::size_t r = 0; r < values.rows; ++r) {
        for (std::size_t c = 0; c < values.cols; ++c) {
            os << (c ? "," : "") << values(r, c);
        }
        os << "\n";
    }
    io::write_text_atomic(path, os.str());
}

Splits chronological_split(const SeriesTable& table, const SplitSpec& spec, std::size_t min_rows)
{
    const std::size_t n = table.length();
    std::array<std::size_t, 3> sizes{};
    if (spec.counts) {
        sizes = *spec.counts;
        if (sizes[0] + sizes[1] + sizes[2] > n) {
            std::ostringstream os;
            os << table.name << ": explicit split counts (" << sizes[0] << ", " << sizes[1] << ", " << sizes[2]
               << ") exceed the " << n << " available rows";
            throw DataError(os.str());
        }
    } else if (spec.fractions) {
        const auto& f = *spec.fractions;
        if (std::any_of(f.begin(), f.end(), [](double x) { return x < 0.0; }) ||
            std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9) {
            throw ConfigError("split fractions must be non-negative and sum to 1");
        }
        sizes[0] = floor_fraction(n, f[0]);
        sizes[2] = floor_fraction(n, f[2]);
        sizes[1] = n - sizes[0] - sizes[2];
    } else {
        throw ConfigError("split spec needs fractions or counts");
    }
    static constexpr const char* names[] = {"train", "val", "test"};
    for (std::size_t i = 0; i < 3; ++i) {
        if (sizes[i] == 0 || sizes[i] < min_rows) {
            std::ostringstream os;
            os << table.name << ": " << names[i] << " split has " << sizes[i] << " rows; at least "
               << std::max<std::size_t>(min_rows, 1) << " required (lookback + horizon)";
            throw DataError(os.str());
        }
    }
    Splits out;
    out.offsets = {0, sizes[0], sizes[0] + sizes[1]};
    out.train = table.rows(out.offsets[0], sizes[0]);
    out.val = table.rows(out.offsets[1], sizes[1]);
    out.test = table.rows(out.offsets[2], sizes[2]);
    return out;
}

std::vector<TimeWindow> windows(const SeriesTable& table, long lookback, long horizon, long stride)
{
    if (lookback <= 0 || horizon <= 0) {
        throw ConfigError("window lookback and horizon must be positive");
    }
    if (stride <= 0) {
        throw ConfigError("window stride must be positive");
    }
    const auto t = static_cast<std::size_t>(lookback);
    const auto s = static_cast<std::size_t>(horizon);
    const auto step = static_cast<std::size_t>(stride);
    if (table.length() < t + s) {
        std::ostringstream os;
        os << table.name << ": " << table.length() << " rows cannot hold a window of " << t << " + " << s;
        throw DataError(os.str());
    }
    const std::size_t count = (table.length() - t - s) / step + 1;
    std::vector<TimeWindow> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t origin = i * step;
        out.push_back(TimeWindow{table.values.row_slice(origin, t), table.values.row_slice(origin + t, s), origin});
    }
    return out;
}

StandardScaler::StandardScaler(std::vector<double> mean, std::vector<double> sd) : mean_(std::move(mean)), sd_(std::move(sd))
{
    if (mean_.size() != sd_.size()) {
        throw DimensionError("scaler mean/sd length mismatch");
    }
}

StandardScaler StandardScaler::fit(const SeriesTable& table)
{
    const auto& v = table.values;
    std::vector<double> mean(v.cols, 0.0);
    std::vector<double> sd(v.cols, 0.0);
    for (std::size_t c = 0; c < v.cols; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < v.rows; ++r) m += v(r, c);
        m /= static_cast<double>(v.rows);
        double var = 0.0;
        for (std::size_t r = 0; r < v.rows; ++r) var += (v(r, c) - m) * (v(r, c) - m);
        var /= static_cast<double>(v.rows);
        mean[c] = m;
        sd[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return StandardScaler(std::move(mean), std::move(sd));
}

Matrix StandardScaler::transform(const Matrix& values) const
{
    if (values.cols != mean_.size()) {
        throw DimensionError("scaler fitted on " + std::to_string(mean_.size()) + " channels, got " +
                             std::to_string(values.cols));
    }
    Matrix out = values;
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            out(r, c) = (out(r, c) - mean_[c]) / sd_[c];
        }
    }
    return out;
}

SeriesTable StandardScaler::transform(const SeriesTable& table) const
{
    SeriesTable out = table;
    out.values = transform(table.values);
    return out;
}

Matrix StandardScaler::inverse(const Matrix& values) const
{
    if (values.cols != mean_.size()) {
        throw DimensionError("scaler fitted on " + std::to_string(mean_.size()) + " channels, got " +
                             std::to_string(values.cols));
    }
    Matrix out = values;
    for (std::size_t r = 0; r < out.rows; ++r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            out(r, c) = out(r, c) * sd_[c] + mean_[c];
        }
    }
    return out;
}

SeriesTable synth_multiperiodic(const MultiPeriodicSpec& spec)
{
    if (spec.periods.size() != spec.amplitudes.size()) {
        throw ConfigError("synth: periods and amplitudes must have equal length");
    }
    if (std::any_of(spec.periods.begin(), spec.periods.end(), [](double p) { return !(p > 0.0); })) {
        throw ConfigError("synth: periods must be positive");
    }
    if (spec.channels == 0 || spec.length == 0) {
        throw ConfigError("synth: length and channel count must be positive");
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<double> phases(spec.channels * spec.periods.size());
    for (auto& p : phases) {
        p = phase_dist(rng);
    }
    SeriesTable table;
    table.name = "synthetic";
    table.values = Matrix(spec.length, spec.channels);
    for (std::size_t c = 0; c < spec.channels; ++c) {
        table.channel_names.push_back("c" + std::to_string(c));
    }
    for (std::size_t t = 0; t < spec.length; ++t) {
        const double tt = static_cast<double>(t);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            double v = spec.trend_slope * tt;
            for (std::size_t j = 0; j < spec.periods.size(); ++j) {
                v += spec.amplitudes[j] *
                     std::sin(2.0 * std::numbers::pi * tt / spec.periods[j] + phases[c * spec.periods.size() + j]);
            }
            if (spec.noise_sd > 0.0) {
                v += spec.noise_sd * noise(rng);
            }
            table.values(t, c) = v;
        }
    }
    return table;
}

SeriesTable synth_signal_among_noise(std::size_t length, std::size_t noise_channels, double noise_sd,
                                     std::uint64_t seed)
{
    MultiPeriodicSpec spec;
    spec.length = length;
    spec.channels = 1;
    spec.periods = {24.0, 12.0};
    spec.amplitudes = {1.0, 0.5};
    spec.noise_sd = noise_sd;
    spec.seed = seed;
    auto signal = synth_multiperiodic(spec);

    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> noise(0.0, 1.0);
    // white noise with the signal's variance (0.5 + 0.125 + noise_sd^2)
    const double scale = std::sqrt(0.625 + noise_sd * noise_sd);

    SeriesTable table;
    table.name = "signal_among_noise";
    table.values = Matrix(length, noise_channels + 1);
    table.channel_names.push_back("signal");
    for (std::size_t c = 0; c < noise_channels; ++c) {
        table.channel_names.push_back("noise" + std::to_string(c + 1));
    }
    for (std::size_t t = 0; t < length; ++t) {
        table.values(t, 0) = signal.values(t, 0);
        for (std::size_t c = 1; c <= noise_channels; ++c) {
            table.values(t, c) = scale * noise(rng);
        }
    }
    return table;
}

SeriesTable synth_coupled(std::size_t length, std::size_t channels, std::size_t lag, double noise_sd,
                          std::uint64_t seed, std::size_t amplitude_block)
{
    if (channels < 2) {
        throw ConfigError("synth_coupled: needs at least two channels");
    }
    if (amplitude_block == 0) {
        throw ConfigError("synth_coupled: amplitude block must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);

    // AR(1) driver component, unit marginal variance
    constexpr double phi = 0.6;
    const double innovation = std::sqrt(1.0 - phi * phi);
    std::vector<double> driver(length + lag);
    double z = gauss(rng);
    for (auto& d : driver) {
        z = phi * z + innovation * gauss(rng);
        d = z;
    }

    static constexpr double periods[] = {24.0, 12.0, 8.0};
    std::uniform_real_distribution<double> amp_dist(0.3, 1.7);
    SeriesTable table;
    table.name = "coupled";
    table.values = Matrix(length, channels);
    for (std::size_t c = 0; c < channels; ++c) {
        table.channel_names.push_back(c == 0 ? "driver" : "follower" + std::to_string(c));
        const double p1 = periods[c % 3];
        const double p2 = periods[(c + 1) % 3];
        const double ph1 = phase_dist(rng);
        const double ph2 = phase_dist(rng);
        double amp = 1.0;
        for (std::size_t t = 0; t < length; ++t) {
            if (t % amplitude_block == 0) amp = amp_dist(rng);
            const double tt = static_cast<double>(t);
            double v = amp * (0.8 * std::sin(2.0 * std::numbers::pi * tt / p1 + ph1) +
                              0.4 * std::sin(2.0 * std::numbers::pi * tt / p2 + ph2));
            v += c == 0 ? driver[t + lag] : driver[t];
            if (noise_sd > 0.0) {
                v += noise_sd * gauss(rng);
            }
            table.values(t, c) = v;
        }
    }
    return table;
}

} // namespace ister::data
