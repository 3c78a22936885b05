#include "ister/embedding.hpp"

#include <cmath>
#include <sstream>

#include "ister/autodiff/ops.hpp"
#include "ister/error.hpp"

namespace ister::embedding {

EmbedParams EmbedParams::init(std::size_t lookback, std::size_t width, std::mt19937_64& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(lookback));
    return EmbedParams{nn::Linear::uniform(lookback, width, bound, rng),
                       nn::Linear::uniform(lookback, width, bound, rng)};
}

void EmbedParams::collect(const std::string& prefix, nn::ParameterList& out) const
{
    channel.collect(prefix + ".channel", out);
    period.collect(prefix + ".period", out);
}

ad::DiffArray TokenTensor::channel_tokens() const
{
    return ad::reshape(ad::slice(tokens, 1, 0, 1), {channels(), width()});
}

TokenTensor embed(const Matrix& seasonal, const periodicity::PeriodPlan& plan, const EmbedParams& params)
{
    const std::size_t t_len = seasonal.rows;
    const std::size_t n = seasonal.cols;
    if (plan.length != t_len || params.lookback() != t_len) {
        std::ostringstream os;
        os << "embed: input " << seasonal.shape_string() << " does not match plan T=" << plan.length
           << " / embedding T=" << params.lookback();
        throw DimensionError(os.str());
    }
    const std::size_t p_count = plan.components();
    const std::size_t d = params.width();

    // channel-major copies: whole sequences [N x T] and padded components [N x P x T]
    std::vector<double> whole(n * t_len);
    std::vector<double> parts(n * p_count * t_len, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t t = 0; t < t_len; ++t) {
            whole[c * t_len + t] = seasonal(t, c);
        }
        for (std::size_t p = 0; p < p_count; ++p) {
            const auto& seg = plan.layout[p];
            double* dst = parts.data() + (c * p_count + p) * t_len;
            for (std::size_t t = 0; t < seg.length; ++t) {
                dst[t] = seasonal(seg.start + t, c);
            }
        }
    }
    auto channel_tok = params.channel(ad::DiffArray::from({n, t_len}, std::move(whole)));
    auto period_tok = params.period(ad::DiffArray::from({n, p_count, t_len}, std::move(parts)));
    auto tokens = ad::concat({ad::reshape(channel_tok, {n, 1, d}), period_tok}, 1);
    return TokenTensor{std::move(tokens)};
}

} // namespace ister::embedding
