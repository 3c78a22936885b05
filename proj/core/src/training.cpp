#include "ister/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <tuple>

#include <json.hpp>

#include "ister/autodiff/ops.hpp"
#include "ister/error.hpp"

namespace ister::training {

using nlohmann::json;

namespace {

void require_same_shape(const Matrix& pred, const Matrix& target, const char* what)
{
    if (pred.rows != target.rows || pred.cols != target.cols) {
        throw DimensionError(std::string(what) + ": prediction " + pred.shape_string() + " vs target " +
                             target.shape_string());
    }
    if (pred.data.empty()) {
        throw DimensionError(std::string(what) + ": empty arrays");
    }
}

} // namespace

double mse(const Matrix& pred, const Matrix& target)
{
    require_same_shape(pred, target, "mse");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double e = pred.data[i] - target.data[i];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.data.size());
}

double mae(const Matrix& pred, const Matrix& target)
{
    require_same_shape(pred, target, "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        acc += std::abs(pred.data[i] - target.data[i]);
    }
    return acc / static_cast<double>(pred.data.size());
}

ad::DiffArray mse_loss(const ad::DiffArray& pred, const Matrix& target)
{
    if (pred.rank() != 2 || pred.dim(0) != target.rows || pred.dim(1) != target.cols) {
        throw DimensionError("mse_loss: prediction " + ad::shape_string(pred.shape()) + " vs target " +
                             target.shape_string());
    }
    auto diff = ad::sub(pred, ad::DiffArray::from_matrix(target));
    return ad::mean_all(ad::mul(diff, diff));
}

AdamState AdamState::zeros(const nn::ParameterList& params)
{
    AdamState s;
    for (const auto& p : params) {
        s.m.emplace_back(p.value.size(), 0.0);
        s.v.emplace_back(p.value.size(), 0.0);
    }
    return s;
}

void adam_step(const nn::ParameterList& params, AdamState& state, double learning_rate, const AdamConfig& adam)
{
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adam_step: optimizer state holds " + std::to_string(state.m.size()) +
                             " tensors, parameter list has " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (state.m[i].size() != p.value.size()) {
            throw DimensionError("adam_step: state for '" + p.name + "' does not match its shape");
        }
        for (double g : p.value.grad()) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in '" + p.name + "'");
            }
        }
    }

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(adam.beta1, t);
    const double c2 = 1.0 - std::pow(adam.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        const auto g = p.value.grad(); // empty when nothing reached this parameter
        auto& m = state.m[i];
        auto& v = state.v[i];
        auto w = ad::DiffArray(p.value).mutable_data();
        for (std::size_t j = 0; j < w.size(); ++j) {
            const double gj = g.empty() ? 0.0 : g[j];
            m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * gj;
            v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * gj * gj;
            w[j] -= learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + adam.epsilon);
        }
    }
}

LrSchedule parse_schedule(const std::string& name)
{
    if (name == "constant") return LrSchedule::constant;
    if (name == "halve-per-epoch") return LrSchedule::halve_per_epoch;
    throw ConfigError("unknown lr schedule '" + name + "' (expected constant or halve-per-epoch)");
}

std::string to_string(LrSchedule s)
{
    return s == LrSchedule::constant ? "constant" : "halve-per-epoch";
}

void TrainConfig::validate() const
{
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("train.learning_rate: must be a positive finite number");
    }
    if (batch_size < 1) throw ConfigError("train.batch_size: must be at least 1");
    if (max_epochs < 1) throw ConfigError("train.max_epochs: must be at least 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw ConfigError("train.epsilon: must be positive");
}

std::string TrainReport::to_json() const
{
    json epochs_json = json::array();
    for (const auto& e : epochs) {
        epochs_json.push_back(
            {{"epoch", e.epoch}, {"learning_rate", e.learning_rate}, {"train_loss", e.train_loss},
             {"val_loss", e.val_loss}});
    }
    json j = {{"epochs", epochs_json},   {"best_epoch", best_epoch}, {"best_val_loss", best_val_loss},
              {"test_mse", test_mse},    {"test_mae", test_mae},     {"early_stopped", early_stopped},
              {"wall_seconds", wall_seconds}, {"seed", seed}};
    return j.dump(1);
}

TrainReport TrainReport::from_json(const std::string& text)
{
    try {
        const auto j = json::parse(text);
        TrainReport r;
        for (const auto& e : j.at("epochs")) {
            r.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("learning_rate").get<double>(),
                                e.at("train_loss").get<double>(), e.at("val_loss").get<double>()});
        }
        r.best_epoch = j.at("best_epoch").get<std::size_t>();
        r.best_val_loss = j.at("best_val_loss").get<double>();
        r.test_mse = j.at("test_mse").get<double>();
        r.test_mae = j.at("test_mae").get<double>();
        r.early_stopped = j.at("early_stopped").get<bool>();
        r.wall_seconds = j.at("wall_seconds").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed train report: ") + e.what());
    }
}

bool TrainReport::same_metrics(const TrainReport& o) const
{
    return epochs == o.epochs && best_epoch == o.best_epoch && best_val_loss == o.best_val_loss &&
           test_mse == o.test_mse && test_mae == o.test_mae && early_stopped == o.early_stopped && seed == o.seed;
}

WindowSets make_windows(const data::Splits& splits, std::size_t lookback, std::size_t horizon)
{
    const long t = static_cast<long>(lookback);
    const long s = static_cast<long>(horizon);
    return {data::windows(splits.train, t, s, 1), data::windows(splits.val, t, s, s),
            data::windows(splits.test, t, s, s)};
}

namespace {

struct Prepared {
    model::PreparedInput input;
    const Matrix* target = nullptr;
};

std::vector<Prepared> prepare_all(const model::IsterModel& m, const std::vector<data::TimeWindow>& ws)
{
    std::vector<Prepared> out;
    out.reserve(ws.size());
    for (const auto& w : ws) {
        out.push_back({m.prepare(w.lookback), &w.horizon});
    }
    return out;
}

Metrics evaluate_prepared(const model::IsterModel& m, const std::vector<Prepared>& ws)
{
    Metrics acc;
    for (const auto& w : ws) {
        const auto pred = m.forward_prepared(w.input).to_matrix();
        acc.mse += mse(pred, *w.target);
        acc.mae += mae(pred, *w.target);
    }
    const double n = static_cast<double>(ws.size());
    return {acc.mse / n, acc.mae / n};
}

void require_windows(const std::vector<data::TimeWindow>& ws, const model::ModelConfig& cfg, const char* split)
{
    if (ws.empty()) {
        throw DataError(std::string("train: no ") + split + " windows");
    }
    for (const auto& w : ws) {
        if (w.lookback.rows != cfg.lookback || w.horizon.rows != cfg.horizon || w.lookback.cols != cfg.channels ||
            w.horizon.cols != cfg.channels) {
            throw DimensionError(std::string("train: ") + split + " window " + w.lookback.shape_string() + " -> " +
                                 w.horizon.shape_string() + " does not match the model's T, S, N");
        }
    }
}

} // namespace

Metrics evaluate(const model::IsterModel& model, const std::vector<data::TimeWindow>& windows)
{
    if (windows.empty()) {
        throw DataError("evaluate: no windows");
    }
    return evaluate_prepared(model, prepare_all(model, windows));
}

TrainResult train(const model::IsterModel& initial, const WindowSets& sets, const TrainConfig& config)
{
    config.validate();
    const auto& mc = initial.config();
    require_windows(sets.train, mc, "train");
    require_windows(sets.val, mc, "val");
    require_windows(sets.test, mc, "test");

    const auto started = std::chrono::steady_clock::now();
    auto model = initial.clone();
    auto best = initial.clone();
    const auto params = model.parameters();
    auto state = AdamState::zeros(params);

    const auto train_set = prepare_all(model, sets.train);
    const auto val_set = prepare_all(model, sets.val);

    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    report.seed = config.seed;
    report.best_val_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const double lr = config.schedule == LrSchedule::constant
                              ? config.learning_rate
                              : config.learning_rate * std::pow(0.5, static_cast<double>(epoch - 1));
        std::shuffle(order.begin(), order.end(), rng);
        const model::ForwardMode mode{&rng, mc.dropout};

        double loss_sum = 0.0;
        std::size_t batches = 0;
        double val = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                const std::size_t stop = std::min(order.size(), start + config.batch_size);
                ad::Tape tape;
                ad::DiffArray total;
                for (std::size_t i = start; i < stop; ++i) {
                    const auto& w = train_set[order[i]];
                    auto loss = mse_loss(model.forward_prepared(w.input, mode), *w.target);
                    total = i == start ? loss : ad::add(total, loss);
                }
                total = ad::scale(total, 1.0 / static_cast<double>(stop - start));
                tape.backward(total);
                adam_step(params, state, lr, config.adam);
                for (const auto& p : params) {
                    ad::DiffArray(p.value).zero_grad();
                }
                loss_sum += total.item();
                ++batches;
            }
            val = evaluate_prepared(model, val_set).mse;
        } catch (const NumericError& e) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        if (!std::isfinite(val)) {
            throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": validation loss is " +
                               std::to_string(val));
        }

        report.epochs.push_back({epoch, lr, loss_sum / static_cast<double>(batches), val});
        if (val < report.best_val_loss) {
            report.best_val_loss = val;
            report.best_epoch = epoch;
            best.assign_from(model);
            stale = 0;
        } else {
            ++stale;
            if (stale >= config.patience) {
                report.early_stopped = true;
                break;
            }
        }
    }

    const auto test = evaluate(best, sets.test);
    report.test_mse = test.mse;
    report.test_mae = test.mae;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(best), std::move(report)};
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double>& xs)
{
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    // sample standard deviation, as reported for seed spreads
    const double sd = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    return {mean, sd};
}

} // namespace

std::string RobustnessSummary::to_json() const
{
    json seeds = json::array();
    for (const auto& r : runs) {
        seeds.push_back({{"seed", r.seed},
                         {"test_mse", r.report.test_mse},
                         {"test_mae", r.report.test_mae},
                         {"best_epoch", r.report.best_epoch},
                         {"best_val_loss", r.report.best_val_loss}});
    }
    json j = {{"runs", seeds},
              {"mse", {{"mean", mse_mean}, {"sd", mse_sd}}},
              {"mae", {{"mean", mae_mean}, {"sd", mae_sd}}}};
    return j.dump(1);
}

RobustnessSummary run_seeds(const model::ModelConfig& config, const WindowSets& sets, TrainConfig base,
                            const std::vector<std::uint64_t>& seeds)
{
    if (seeds.empty()) {
        throw ConfigError("run_seeds: at least one seed is required");
    }
    RobustnessSummary summary;
    std::vector<double> mses;
    std::vector<double> maes;
    for (auto seed : seeds) {
        base.seed = seed;
        auto result = train(model::IsterModel::init(config, seed), sets, base);
        mses.push_back(result.report.test_mse);
        maes.push_back(result.report.test_mae);
        summary.runs.push_back({seed, std::move(result.report)});
    }
    std::tie(summary.mse_mean, summary.mse_sd) = mean_sd(mses);
    std::tie(summary.mae_mean, summary.mae_sd) = mean_sd(maes);
    return summary;
}

} // namespace ister::training
