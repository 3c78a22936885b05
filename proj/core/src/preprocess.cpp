#include "ister/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ister/autodiff/ops.hpp"
#include "ister/error.hpp"

namespace ister::preprocess {

std::pair<Matrix, NormStats> instance_normalize(const Matrix& x, double epsilon)
{
    if (x.rows < 2) {
        throw DimensionError("instance_normalize needs at least 2 timesteps, got " + x.shape_string());
    }
    if (!all_finite(x.data)) {
        throw NumericError("instance_normalize: non-finite input");
    }
    NormStats stats;
    stats.epsilon = epsilon;
    stats.mean.assign(x.cols, 0.0);
    stats.sd.assign(x.cols, 0.0);
    Matrix out(x.rows, x.cols);
    const double n = static_cast<double>(x.rows);
    for (std::size_t c = 0; c < x.cols; ++c) {
        double m = 0.0;
        for (std::size_t t = 0; t < x.rows; ++t) m += x(t, c);
        m /= n;
        double var = 0.0;
        for (std::size_t t = 0; t < x.rows; ++t) var += (x(t, c) - m) * (x(t, c) - m);
        const double sd = std::sqrt(var / n);
        stats.mean[c] = m;
        stats.sd[c] = sd;
        for (std::size_t t = 0; t < x.rows; ++t) {
            out(t, c) = (x(t, c) - m) / (sd + epsilon);
        }
    }
    return {std::move(out), std::move(stats)};
}

Matrix denormalize(const Matrix& y, const NormStats& stats)
{
    if (y.cols != stats.channels()) {
        std::ostringstream os;
        os << "denormalize: stats cover " << stats.channels() << " channels, output has " << y.cols;
        throw DimensionError(os.str());
    }
    Matrix out(y.rows, y.cols);
    for (std::size_t t = 0; t < y.rows; ++t) {
        for (std::size_t c = 0; c < y.cols; ++c) {
            out(t, c) = y(t, c) * (stats.sd[c] + stats.epsilon) + stats.mean[c];
        }
    }
    return out;
}

ad::DiffArray denormalize(const ad::DiffArray& y, const NormStats& stats)
{
    if (y.rank() != 2 || y.dim(1) != stats.channels()) {
        std::ostringstream os;
        os << "denormalize: stats cover " << stats.channels() << " channels, output shape is "
           << ad::shape_string(y.shape());
        throw DimensionError(os.str());
    }
    std::vector<double> scale(stats.channels());
    for (std::size_t c = 0; c < scale.size(); ++c) {
        scale[c] = stats.sd[c] + stats.epsilon;
    }
    auto s = ad::DiffArray::from({stats.channels()}, std::move(scale));
    auto m = ad::DiffArray::from({stats.channels()}, stats.mean);
    return ad::add(ad::mul(y, s), m);
}

DecompPair series_decomp(const Matrix& x, long kernel)
{
    if (kernel < 1 || kernel % 2 == 0) {
        throw ConfigError("series_decomp: kernel must be a positive odd integer, got " + std::to_string(kernel));
    }
    const auto t_len = static_cast<long>(x.rows);
    if (kernel > 2 * t_len - 1) {
        std::ostringstream os;
        os << "series_decomp: kernel " << kernel << " exceeds 2T-1 = " << 2 * t_len - 1;
        throw ConfigError(os.str());
    }
    const long half = (kernel - 1) / 2;
    DecompPair out{Matrix(x.rows, x.cols), Matrix(x.rows, x.cols)};
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (long t = 0; t < t_len; ++t) {
            double acc = 0.0;
            for (long j = t - half; j <= t + half; ++j) {
                const long idx = std::clamp(j, 0L, t_len - 1);
                acc += x(static_cast<std::size_t>(idx), c);
            }
            const auto tu = static_cast<std::size_t>(t);
            out.trend(tu, c) = acc / static_cast<double>(kernel);
            out.seasonal(tu, c) = x(tu, c) - out.trend(tu, c);
        }
    }
    return out;
}

} // namespace ister::preprocess
