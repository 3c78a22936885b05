#include "ister/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "ister/error.hpp"

namespace ister::bench {

namespace {

ad::DiffArray random_tokens(std::size_t tokens, std::size_t width, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> values(tokens * width);
    for (auto& x : values) x = dist(rng);
    return ad::DiffArray::from({1, tokens, width}, std::move(values));
}

nlohmann::json to_json_value(const BenchResult& r)
{
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
        points.push_back({{"tokens", p.tokens},
                          {"ops", p.ops.total()},
                          {"adds", p.ops.adds},
                          {"mults", p.ops.mults},
                          {"divs", p.ops.divs},
                          {"exps", p.ops.exps},
                          {"median_seconds", p.median_seconds}});
    }
    return {{"mechanism", attention::to_string(r.mechanism)},
            {"width", r.width},
            {"reps", r.reps},
            {"points", points},
            {"slope", r.slope},
            {"time_slope", r.time_slope}};
}

} // namespace

std::string BenchResult::to_json() const { return to_json_value(*this).dump(1); }

void BenchSpec::validate() const
{
    if (mechanisms.empty()) throw ConfigError("bench.mechanisms: at least one mechanism is required");
    if (grid.size() < 3) {
        throw ConfigError("bench.grid: need at least 3 points, got " + std::to_string(grid.size()));
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] == 0) throw ConfigError("bench.grid: token counts must be positive");
        if (i > 0 && grid[i] <= grid[i - 1]) throw ConfigError("bench.grid: points must be strictly increasing");
    }
    if (grid.back() < 8 * grid.front()) {
        throw ConfigError("bench.grid: must span at least 8x, got " + std::to_string(grid.front()) + ".." +
                          std::to_string(grid.back()));
    }
    if (width == 0) throw ConfigError("bench.width: must be positive");
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("bench.heads: width " + std::to_string(width) + " is not divisible by " +
                          std::to_string(heads));
    }
    if (reps < 5) throw ConfigError("bench.reps: need at least 5 repetitions, got " + std::to_string(reps));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("loglog_slope: need two or more paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw NumericError("loglog_slope: values must be positive");
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw NumericError("loglog_slope: x values are all equal");
    return (n * sxy - sx * sy) / denom;
}

std::vector<BenchResult> run(const BenchSpec& spec)
{
    spec.validate();
    std::vector<BenchResult> results;
    for (auto mechanism : spec.mechanisms) {
        BenchResult result;
        result.mechanism = mechanism;
        result.width = spec.width;
        result.reps = spec.reps;
        std::vector<double> xs, ops, secs;
        for (auto tokens : spec.grid) {
            std::mt19937_64 rng(tokens);
            auto q = random_tokens(tokens, spec.width, rng);
            auto k = random_tokens(tokens, spec.width, rng);
            auto v = random_tokens(tokens, spec.width, rng);
            std::vector<double> times;
            std::optional<ad::OpCount> count;
            for (std::size_t rep = 0; rep < spec.reps; ++rep) {
                ad::OpCounter counter;
                const auto start = std::chrono::steady_clock::now();
                if (mechanism == attention::Mechanism::dot) {
                    attention::dot_attention_core(q, k, v);
                } else {
                    attention::scaled_dot_product_core(q, k, v, spec.heads);
                }
                const auto stop = std::chrono::steady_clock::now();
                times.push_back(std::chrono::duration<double>(stop - start).count());
                if (count && !(*count == counter.count())) {
                    throw NumericError("bench: op count changed between repetitions at L=" + std::to_string(tokens));
                }
                count = counter.count();
            }
            std::nth_element(times.begin(), times.begin() + static_cast<long>(times.size() / 2), times.end());
            const double median = times[times.size() / 2];
            result.points.push_back({tokens, *count, median});
            xs.push_back(static_cast<double>(tokens));
            ops.push_back(static_cast<double>(count->total()));
            secs.push_back(std::max(median, 1e-12));
        }
        result.slope = loglog_slope(xs, ops);
        result.time_slope = loglog_slope(xs, secs);
        results.push_back(std::move(result));
    }
    return results;
}

std::string results_json(const std::vector<BenchResult>& results)
{
    nlohmann::json doc = {{"format", "ister-bench"}, {"version", 1}, {"results", nlohmann::json::array()}};
    for (const auto& r : results) doc["results"].push_back(to_json_value(r));
    return doc.dump(1) + "\n";
}

std::string results_csv(const std::vector<BenchResult>& results)
{
    std::ostringstream os;
    os << "mechanism,tokens,ops,median_seconds\n";
    char buf[64];
    for (const auto& r : results) {
        for (const auto& p : r.points) {
            std::snprintf(buf, sizeof buf, "%.9e", p.median_seconds);
            os << attention::to_string(r.mechanism) << ',' << p.tokens << ',' << p.ops.total() << ',' << buf << '\n';
        }
    }
    return os.str();
}

} // namespace ister::bench
