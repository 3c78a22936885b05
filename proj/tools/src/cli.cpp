#include "ister_cli/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ister/bench.hpp"
#include "ister/checkpoint.hpp"
#include "ister/error.hpp"
#include "ister/interpretability.hpp"
#include "ister/io.hpp"
#include "ister/training.hpp"
#include "ister_cli/run_config.hpp"

namespace ister::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct TrainArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> variant;
    std::vector<std::uint64_t> seeds;
};

struct PredictArgs {
    std::string checkpoint;
    std::string input;
    std::string out;
};

struct ExplainArgs {
    std::string checkpoint;
    std::string data;
    std::string out;
    std::string format = "json";
    std::string branch = "both";
    std::optional<std::size_t> layer;
    std::optional<std::size_t> stride;
};

struct SynthArgs {
    std::optional<std::string> config;
    std::string out;
    SynthSpec spec;
    std::string kind = "multiperiodic";
};

struct BenchArgs {
    std::vector<std::string> mechanisms{"dot", "multihead"};
    bench::BenchSpec spec;
    std::optional<std::string> out;
    std::string format = "json";
};

void require_file(const std::string& flag, const fs::path& path)
{
    if (!fs::is_regular_file(path)) throw ConfigError(flag + ": file not found: " + path.string());
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void check_channels(const model::Checkpoint& ck, const data::SeriesTable& table, const std::string& command)
{
    const auto expected = ck.model.config().channels;
    if (table.channels() != expected) {
        throw DimensionError(command + ": checkpoint expects " + std::to_string(expected) + " channels, input has " +
                             std::to_string(table.channels()));
    }
}

Matrix scaled(const model::Checkpoint& ck, const Matrix& values)
{
    return ck.meta.scaler ? ck.meta.scaler->transform(values) : values;
}

Json train_metrics(const RunConfig& cfg, const training::TrainReport& r, std::size_t parameters)
{
    return Json{{"command", "train"},
                {"variant", model::to_string(cfg.variant)},
                {"seed", cfg.seed},
                {"parameters", parameters},
                {"epochs", r.epochs.size()},
                {"best_epoch", r.best_epoch},
                {"best_val_mse", r.best_val_loss},
                {"test_mse", r.test_mse},
                {"test_mae", r.test_mae},
                {"early_stopped", r.early_stopped}};
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err)
{
    auto cfg = load_run_config(args.config);
    if (args.seed) {
        cfg.seed = *args.seed;
        cfg.train.seed = *args.seed;
    }
    if (args.out) cfg.out = *args.out;
    if (args.variant) cfg.variant = model::parse_variant(*args.variant);
    cfg.validate();

    auto table = cfg.load_table();
    const auto mc = cfg.model_for(table.channels());
    mc.validate();
    auto splits = data::chronological_split(table, cfg.data.split, mc.lookback + mc.horizon);
    std::optional<data::StandardScaler> scaler;
    if (cfg.data.scale) {
        scaler = data::StandardScaler::fit(splits.train);
        splits.train = scaler->transform(splits.train);
        splits.val = scaler->transform(splits.val);
        splits.test = scaler->transform(splits.test);
    }
    const auto sets = training::make_windows(splits, mc.lookback, mc.horizon);
    err << "data: " << table.length() << " rows x " << table.channels() << " channels; windows train/val/test "
        << sets.train.size() << '/' << sets.val.size() << '/' << sets.test.size() << '\n';

    if (!args.seeds.empty()) {
        const auto summary = training::run_seeds(mc, sets, cfg.train, args.seeds);
        io::write_text_atomic(cfg.out / "robustness.json", summary.to_json());
        io::write_text_atomic(cfg.out / "config.toml", to_text(cfg));
        Json runs = Json::array();
        for (const auto& r : summary.runs) {
            runs.push_back({{"seed", r.seed}, {"test_mse", r.report.test_mse}, {"test_mae", r.report.test_mae}});
            err << "seed " << r.seed << ": test mse " << fmt(r.report.test_mse) << ", mae "
                << fmt(r.report.test_mae) << '\n';
        }
        out << Json{{"command", "train"},
                    {"variant", model::to_string(cfg.variant)},
                    {"runs", runs},
                    {"mse_mean", summary.mse_mean},
                    {"mse_sd", summary.mse_sd},
                    {"mae_mean", summary.mae_mean},
                    {"mae_sd", summary.mae_sd}}
                   .dump()
            << '\n';
        return kExitOk;
    }

    const auto init = model::IsterModel::init(mc, cfg.seed);
    err << "model: variant " << model::to_string(cfg.variant) << ", " << init.parameter_count() << " parameters\n";
    const auto result = training::train(init, sets, cfg.train);
    for (const auto& e : result.report.epochs) {
        err << "epoch " << e.epoch << ": lr " << fmt(e.learning_rate) << ", train " << fmt(e.train_loss) << ", val "
            << fmt(e.val_loss) << '\n';
    }

    const auto metrics = train_metrics(cfg, result.report, init.parameter_count());
    model::save_checkpoint(cfg.out / "checkpoint.json", result.model,
                           {table.channel_names, scaler, model::to_string(cfg.variant)});
    io::write_text_atomic(cfg.out / "report.json", result.report.to_json());
    io::write_text_atomic(cfg.out / "metrics.json", metrics.dump(1) + "\n");
    io::write_text_atomic(cfg.out / "config.toml", to_text(cfg));
    err << "wrote " << cfg.out.string() << '\n';
    out << metrics.dump() << '\n';
    return kExitOk;
}

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err)
{
    require_file("--checkpoint", args.checkpoint);
    require_file("--input", args.input);
    const auto ck = model::load_checkpoint(args.checkpoint);
    const auto table = data::load_csv(args.input);
    check_channels(ck, table, "predict");
    const auto& mc = ck.model.config();
    if (table.length() < mc.lookback) {
        throw DataError("predict: input has " + std::to_string(table.length()) + " rows, lookback needs " +
                        std::to_string(mc.lookback));
    }
    const auto x = scaled(ck, table.rows(table.length() - mc.lookback, mc.lookback).values);
    auto prediction = ck.model.forward(x).prediction;
    if (ck.meta.scaler) prediction = ck.meta.scaler->inverse(prediction);
    data::write_csv(args.out, prediction, table.channel_names);
    err << "wrote " << prediction.rows << " forecast rows to " << args.out << '\n';
    out << Json{{"command", "predict"}, {"rows", prediction.rows}, {"channels", prediction.cols}, {"out", args.out}}
               .dump()
        << '\n';
    return kExitOk;
}

int cmd_explain(const ExplainArgs& args, std::ostream& out, std::ostream& err)
{
    const auto format = interpret::parse_format(args.format);
    const auto branch = interpret::parse_branch(args.branch);
    if (args.stride && *args.stride == 0) throw ConfigError("--stride: must be positive");
    require_file("--checkpoint", args.checkpoint);
    require_file("--data", args.data);
    const auto ck = model::load_checkpoint(args.checkpoint);
    const auto table = data::load_csv(args.data);
    check_channels(ck, table, "explain");

    const auto t = ck.model.config().lookback;
    const auto stride = args.stride.value_or(ck.model.config().horizon);
    std::vector<data::TimeWindow> windows;
    for (std::size_t start = 0; start + t <= table.length(); start += stride) {
        windows.push_back({scaled(ck, table.rows(start, t).values), Matrix(), start});
    }
    if (windows.empty()) {
        throw DataError("explain: input has " + std::to_string(table.length()) + " rows, lookback needs " +
                        std::to_string(t));
    }
    const auto report = interpret::extract_contributions(ck.model, windows, table.channel_names, args.layer, branch);
    interpret::export_report(report, args.out, format);

    auto top = [](const std::vector<interpret::ScoreEntry>& entries) -> Json {
        if (entries.empty()) return nullptr;
        return std::max_element(entries.begin(), entries.end(),
                                [](const auto& a, const auto& b) { return a.score < b.score; })
            ->label;
    };
    err << "wrote " << interpret::to_string(format) << " report over " << windows.size() << " windows to "
        << args.out << '\n';
    out << Json{{"command", "explain"},
                {"windows", windows.size()},
                {"layer", report.layer},
                {"top_channel", top(report.channels)},
                {"top_period", top(report.periods)},
                {"out", args.out}}
               .dump()
        << '\n';
    return kExitOk;
}

int cmd_synth(SynthArgs args, const CLI::App& sub, std::ostream& out, std::ostream& err)
{
    SynthSpec spec = args.spec;
    if (args.config) {
        const auto cfg = load_run_config(*args.config);
        if (!cfg.data.synth) throw ConfigError("synth: " + *args.config + " has no [synth] section");
        spec = *cfg.data.synth;
        auto given = [&](const char* flag) { return sub.get_option(flag)->count() > 0; };
        if (given("--length")) spec.length = args.spec.length;
        if (given("--channels")) spec.channels = args.spec.channels;
        if (given("--periods")) spec.periods = args.spec.periods;
        if (given("--amplitudes")) spec.amplitudes = args.spec.amplitudes;
        if (given("--noise")) spec.noise_sd = args.spec.noise_sd;
        if (given("--trend")) spec.trend_slope = args.spec.trend_slope;
        if (given("--lag")) spec.lag = args.spec.lag;
        if (given("--noise-channels")) spec.noise_channels = args.spec.noise_channels;
        if (given("--seed")) spec.seed = args.spec.seed;
        if (given("--kind")) spec.kind = parse_synth_kind(args.kind);
    } else {
        spec.kind = parse_synth_kind(args.kind);
    }
    spec.validate();
    const auto table = spec.generate();
    data::write_csv(args.out, table.values, table.channel_names);
    err << "wrote " << table.length() << " rows of " << to_string(spec.kind) << " data to " << args.out << '\n';
    out << Json{{"command", "synth"},
                {"kind", to_string(spec.kind)},
                {"rows", table.length()},
                {"channels", table.channels()},
                {"out", args.out}}
               .dump()
        << '\n';
    return kExitOk;
}

int cmd_bench(BenchArgs args, std::ostream& out, std::ostream& err)
{
    args.spec.mechanisms.clear();
    for (const auto& m : args.mechanisms) args.spec.mechanisms.push_back(attention::parse_mechanism(m));
    if (args.format != "json" && args.format != "csv") {
        throw ConfigError("--format: bench writes json or csv, got '" + args.format + "'");
    }
    args.spec.validate();
    const auto results = bench::run(args.spec);
    Json slopes = Json::object();
    for (const auto& r : results) {
        const auto name = attention::to_string(r.mechanism);
        for (const auto& p : r.points) {
            err << name << " L=" << p.tokens << ": " << p.ops.total() << " ops, median " << fmt(p.median_seconds)
                << " s\n";
        }
        err << name << ": op-count slope " << fmt(r.slope) << ", wall-time slope " << fmt(r.time_slope) << '\n';
        slopes[name] = r.slope;
    }
    if (args.out) {
        io::write_text_atomic(*args.out,
                              args.format == "csv" ? bench::results_csv(results) : bench::results_json(results));
    }
    out << Json{{"command", "bench"}, {"width", args.spec.width}, {"grid", args.spec.grid}, {"slopes", slopes}}.dump()
        << '\n';
    return kExitOk;
}

template <typename F>
int guarded(F&& body, std::ostream& err)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const DimensionError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Ister: periodic-structure forecasting with linear-cost dot attention", "ister"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
    train_cmd->add_option("--config", train.config, "Run config file")->required();
    train_cmd->add_option("--seed", train.seed, "Override the config seed");
    train_cmd->add_option("--out", train.out, "Override the output directory");
    train_cmd->add_option("--variant", train.variant, "full, no-dot, plus-msa, no-channel or no-period");
    train_cmd->add_option("--seeds", train.seeds, "Run one training per seed and report mean and sd")
        ->delimiter(',');

    PredictArgs predict;
    auto* predict_cmd = app.add_subcommand("predict", "Forecast the horizon after the last lookback rows of a CSV");
    predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint written by train")->required();
    predict_cmd->add_option("--input", predict.input, "Input CSV")->required();
    predict_cmd->add_option("--out", predict.out, "Forecast CSV to write")->required();

    ExplainArgs explain;
    auto* explain_cmd = app.add_subcommand("explain", "Export channel and period contribution scores");
    explain_cmd->add_option("--checkpoint", explain.checkpoint, "Checkpoint written by train")->required();
    explain_cmd->add_option("--data", explain.data, "CSV to read lookback windows from")->required();
    explain_cmd->add_option("--out", explain.out, "Report file to write")->required();
    explain_cmd->add_option("--format", explain.format, "json, csv or svg-bar")->capture_default_str();
    explain_cmd->add_option("--branch", explain.branch, "both, channel or period")->capture_default_str();
    explain_cmd->add_option("--layer", explain.layer, "Encoder block to read (default: last)");
    explain_cmd->add_option("--stride", explain.stride, "Step between windows (default: horizon)");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
    synth_cmd->add_option("--config", synth.config, "Take the [synth] section of a run config");
    synth_cmd->add_option("--out", synth.out, "CSV to write")->required();
    synth_cmd->add_option("--kind", synth.kind, "multiperiodic, signal-among-noise or coupled")
        ->capture_default_str();
    synth_cmd->add_option("--length", synth.spec.length, "Rows")->capture_default_str();
    synth_cmd->add_option("--channels", synth.spec.channels, "Channels")->capture_default_str();
    synth_cmd->add_option("--periods", synth.spec.periods, "Comma-separated periods")->delimiter(',');
    synth_cmd->add_option("--amplitudes", synth.spec.amplitudes, "Comma-separated amplitudes")->delimiter(',');
    synth_cmd->add_option("--noise", synth.spec.noise_sd, "Noise standard deviation")->capture_default_str();
    synth_cmd->add_option("--trend", synth.spec.trend_slope, "Linear trend per step")->capture_default_str();
    synth_cmd->add_option("--lag", synth.spec.lag, "Coupling delay (coupled)")->capture_default_str();
    synth_cmd->add_option("--noise-channels", synth.spec.noise_channels, "Noise channels (signal-among-noise)")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.spec.seed, "Generator seed")->capture_default_str();

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Count and time attention cores over a token grid");
    bench_cmd->add_option("--mechanisms", bench_args.mechanisms, "dot, multihead")->delimiter(',');
    bench_cmd->add_option("--grid", bench_args.spec.grid, "Comma-separated token counts")->delimiter(',');
    bench_cmd->add_option("--width", bench_args.spec.width, "Feature width D")->capture_default_str();
    bench_cmd->add_option("--heads", bench_args.spec.heads, "Heads for multihead")->capture_default_str();
    bench_cmd->add_option("--reps", bench_args.spec.reps, "Timed repetitions per point")->capture_default_str();
    bench_cmd->add_option("--out", bench_args.out, "Result file to write");
    bench_cmd->add_option("--format", bench_args.format, "json or csv")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    return guarded(
        [&] {
            if (*train_cmd) return cmd_train(train, out, err);
            if (*predict_cmd) return cmd_predict(predict, out, err);
            if (*explain_cmd) return cmd_explain(explain, out, err);
            if (*synth_cmd) return cmd_synth(synth, *synth_cmd, out, err);
            return cmd_bench(bench_args, out, err);
        },
        err);
}

} // namespace ister::cli
