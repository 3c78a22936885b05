#include "ister/backbone.hpp"

#include <algorithm>
#include <sstream>

#include "ister/autodiff/ops.hpp"
#include "ister/error.hpp"

namespace ister::model {

AttentionKind parse_attention_kind(const std::string& name)
{
    if (name == "dot") return AttentionKind::dot;
    if (name == "multihead" || name == "msa") return AttentionKind::multihead;
    if (name == "none") return AttentionKind::none;
    throw ConfigError("unknown attention kind '" + name + "' (expected dot, multihead or none)");
}

std::string to_string(AttentionKind kind)
{
    switch (kind) {
    case AttentionKind::dot: return "dot";
    case AttentionKind::multihead: return "multihead";
    case AttentionKind::none: return "none";
    }
    return "dot";
}

void ModelConfig::validate() const
{
    auto fail = [](const std::string& field, const std::string& why) {
        throw ConfigError("model." + field + ": " + why);
    };
    if (lookback < 4) fail("lookback", "must be at least 4");
    if (horizon < 1) fail("horizon", "must be positive");
    if (channels < 1) fail("channels", "must be positive");
    if (width < 8) fail("width", "must be at least 8");
    if (top_k < 1) fail("top_k", "must be at least 1");
    if (top_k > lookback / 2) fail("top_k", "must not exceed lookback/2 = " + std::to_string(lookback / 2));
    if (blocks < 1) fail("blocks", "must be at least 1");
    if (ffn_multiple < 1) fail("ffn_multiple", "must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout", "must lie in [0, 1)");
    if (decomp_kernel < 1 || decomp_kernel % 2 == 0) fail("decomp_kernel", "must be a positive odd integer");
    if (decomp_kernel > 2 * static_cast<long>(lookback) - 1) fail("decomp_kernel", "must not exceed 2*lookback-1");
    const bool uses_mha =
        period_attention == AttentionKind::multihead || channel_attention == AttentionKind::multihead;
    if (uses_mha && (heads == 0 || width % heads != 0)) {
        fail("heads", "width " + std::to_string(width) + " is not divisible by " + std::to_string(heads));
    }
}

Variant parse_variant(const std::string& name)
{
    if (name == "full") return Variant::full;
    if (name == "no-dot") return Variant::no_dot;
    if (name == "plus-msa") return Variant::plus_msa;
    if (name == "no-channel") return Variant::no_channel;
    if (name == "no-period") return Variant::no_period;
    throw ConfigError("unknown variant '" + name + "' (expected full, no-dot, plus-msa, no-channel or no-period)");
}

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::full: return "full";
    case Variant::no_dot: return "no-dot";
    case Variant::plus_msa: return "plus-msa";
    case Variant::no_channel: return "no-channel";
    case Variant::no_period: return "no-period";
    }
    return "full";
}

ModelConfig ablation_variant(ModelConfig base, Variant variant)
{
    switch (variant) {
    case Variant::full:
        base.period_attention = AttentionKind::dot;
        base.channel_attention = AttentionKind::dot;
        break;
    case Variant::no_dot:
        base.period_attention = AttentionKind::none;
        base.channel_attention = AttentionKind::none;
        break;
    case Variant::plus_msa:
        base.period_attention = AttentionKind::multihead;
        base.channel_attention = AttentionKind::multihead;
        break;
    case Variant::no_channel:
        base.period_attention = AttentionKind::dot;
        base.channel_attention = AttentionKind::none;
        break;
    case Variant::no_period:
        base.period_attention = AttentionKind::none;
        base.channel_attention = AttentionKind::dot;
        break;
    }
    return base;
}

namespace {

LayerNormParams layer_norm_params(std::size_t width)
{
    return {ad::DiffArray::full({width}, 1.0, true), ad::DiffArray::zeros({width}, true)};
}

FeedForward feed_forward(std::size_t width, std::size_t multiple, std::mt19937_64& rng)
{
    return {nn::Linear::standard(width, width * multiple, rng), nn::Linear::standard(width * multiple, width, rng)};
}

void collect_ffn(const FeedForward& f, const std::string& prefix, nn::ParameterList& out)
{
    f.up.collect(prefix + ".up", out);
    f.down.collect(prefix + ".down", out);
}

ad::DiffArray apply_dropout(const ad::DiffArray& x, const ForwardMode& mode)
{
    return mode.training() ? ad::dropout(x, mode.dropout, *mode.rng) : x;
}

ad::DiffArray run_ffn(const FeedForward& f, const ad::DiffArray& x)
{
    return f.down(ad::gelu(f.up(x)));
}

} // namespace

EncoderBlockParams EncoderBlockParams::init(AttentionKind kind, std::size_t width, std::size_t ffn_multiple,
                                            std::size_t heads, std::mt19937_64& rng)
{
    EncoderBlockParams p;
    p.kind = kind;
    p.norm1 = layer_norm_params(width);
    p.norm2 = layer_norm_params(width);
    switch (kind) {
    case AttentionKind::dot: p.dot = attention::QKVParams::init(width, rng); break;
    case AttentionKind::multihead: p.multihead = attention::MultiHeadParams::init(width, heads, rng); break;
    case AttentionKind::none: p.mixer = feed_forward(width, ffn_multiple, rng); break;
    }
    p.ffn = feed_forward(width, ffn_multiple, rng);
    return p;
}

void EncoderBlockParams::collect(const std::string& prefix, nn::ParameterList& out) const
{
    out.push_back({prefix + ".norm1.gain", norm1.gain});
    out.push_back({prefix + ".norm1.bias", norm1.bias});
    switch (kind) {
    case AttentionKind::dot: dot.collect(prefix + ".attn", out); break;
    case AttentionKind::multihead: multihead.collect(prefix + ".attn", out); break;
    case AttentionKind::none: collect_ffn(mixer, prefix + ".mixer", out); break;
    }
    out.push_back({prefix + ".norm2.gain", norm2.gain});
    out.push_back({prefix + ".norm2.bias", norm2.bias});
    collect_ffn(ffn, prefix + ".ffn", out);
}

ad::DiffArray encoder_block(const ad::DiffArray& tokens, const EncoderBlockParams& params, const ForwardMode& mode,
                            std::optional<attention::AttentionWeights>* weights)
{
    if (tokens.rank() != 3 || tokens.dim(2) != params.norm1.gain.size()) {
        throw DimensionError("encoder_block: tokens " + ad::shape_string(tokens.shape()) +
                             " do not match block width " + std::to_string(params.norm1.gain.size()));
    }
    auto normed = ad::layer_norm(tokens, params.norm1.gain, params.norm1.bias);
    ad::DiffArray mixed;
    switch (params.kind) {
    case AttentionKind::dot: {
        auto result = attention::dot_attention(normed, params.dot, weights != nullptr);
        if (weights) {
            *weights = std::move(result.weights);
        }
        mixed = result.output;
        break;
    }
    case AttentionKind::multihead: mixed = attention::multihead_attention(normed, params.multihead); break;
    case AttentionKind::none: mixed = run_ffn(params.mixer, normed); break;
    }
    auto y = ad::add(tokens, apply_dropout(mixed, mode));
    auto f = run_ffn(params.ffn, ad::layer_norm(y, params.norm2.gain, params.norm2.bias));
    return ad::add(y, apply_dropout(f, mode));
}

IsterModel IsterModel::init(const ModelConfig& config, std::uint64_t seed)
{
    config.validate();
    std::mt19937_64 rng(seed);
    IsterModel m;
    m.config_ = config;
    m.embed_ = embedding::EmbedParams::init(config.lookback, config.width, rng);
    for (std::size_t l = 0; l < config.blocks; ++l) {
        m.period_blocks_.push_back(
            EncoderBlockParams::init(config.period_attention, config.width, config.ffn_multiple, config.heads, rng));
        m.channel_blocks_.push_back(
            EncoderBlockParams::init(config.channel_attention, config.width, config.ffn_multiple, config.heads, rng));
    }
    m.seasonal_head_ = nn::Linear::standard(config.width, config.horizon, rng);
    m.trend_head_ = nn::Linear::standard(config.lookback, config.horizon, rng);
    return m;
}

nn::ParameterList IsterModel::parameters() const
{
    nn::ParameterList out;
    embed_.collect("embed", out);
    for (std::size_t l = 0; l < period_blocks_.size(); ++l) {
        period_blocks_[l].collect("blocks." + std::to_string(l) + ".period", out);
        channel_blocks_[l].collect("blocks." + std::to_string(l) + ".channel", out);
    }
    seasonal_head_.collect("head.seasonal", out);
    trend_head_.collect("head.trend", out);
    return out;
}

PreparedInput IsterModel::prepare(const Matrix& x) const
{
    const auto& cfg = config_;
    if (x.rows != cfg.lookback || x.cols != cfg.channels) {
        std::ostringstream os;
        os << "forward: input " << x.shape_string() << " does not match configured [" << cfg.lookback << "x"
           << cfg.channels << "]";
        throw DimensionError(os.str());
    }
    auto [normed, stats] = preprocess::instance_normalize(x);
    auto parts = preprocess::series_decomp(normed, cfg.decomp_kernel);
    auto plan = periodicity::discover_periods(parts.seasonal, cfg.top_k);
    return PreparedInput{std::move(stats), std::move(parts.seasonal), std::move(parts.trend), std::move(plan)};
}

ad::DiffArray IsterModel::forward_prepared(const PreparedInput& input, const ForwardMode& mode,
                                           ForwardCapture* capture) const
{
    const auto& cfg = config_;
    const auto& plan = input.plan;
    const std::size_t n = cfg.channels;
    const std::size_t d = cfg.width;
    const std::size_t p_count = plan.components();

    auto tokens = embedding::embed(input.seasonal, plan, embed_);
    auto h = tokens.tokens;                                   // [N x (P+1) x D]
    auto c = ad::reshape(tokens.channel_tokens(), {1, n, d}); // [1 x N x D]

    if (capture) {
        capture->plan = plan;
        capture->period_weights.assign(cfg.blocks, std::nullopt);
        capture->channel_weights.assign(cfg.blocks, std::nullopt);
    }
    for (std::size_t l = 0; l < cfg.blocks; ++l) {
        h = encoder_block(h, period_blocks_[l], mode, capture ? &capture->period_weights[l] : nullptr);
        c = encoder_block(c, channel_blocks_[l], mode, capture ? &capture->channel_weights[l] : nullptr);
    }
    auto pooled = ad::mean(ad::slice(h, 1, 1, p_count), 1); // [N x D]
    auto fused = ad::add(ad::reshape(c, {n, d}), pooled);

    auto seasonal_out = seasonal_head_(fused); // [N x S]
    auto trend_out = trend_head_(ad::DiffArray::from_matrix(input.trend.transposed())); // [N x S]
    auto y = ad::transpose(ad::add(seasonal_out, trend_out), 0, 1);
    return preprocess::denormalize(y, input.stats);
}

ad::DiffArray IsterModel::forward_diff(const Matrix& x, const ForwardMode& mode, ForwardCapture* capture,
                                       preprocess::NormStats* stats_out) const
{
    auto input = prepare(x);
    auto result = forward_prepared(input, mode, capture);
    if (stats_out) {
        *stats_out = std::move(input.stats);
    }
    return result;
}

Forecast IsterModel::forward(const Matrix& x, bool capture) const
{
    Forecast f;
    ForwardCapture cap;
    auto y = forward_diff(x, ForwardMode{}, capture ? &cap : nullptr, &f.stats);
    f.prediction = y.to_matrix();
    if (capture) {
        f.capture = std::move(cap);
    }
    return f;
}

IsterModel IsterModel::clone() const
{
    IsterModel copy = init(config_, 0);
    copy.assign_from(*this);
    return copy;
}

void IsterModel::assign_from(const IsterModel& other)
{
    if (!(other.config_ == config_)) {
        throw ConfigError("assign_from: model configs differ");
    }
    load_parameters(other.parameters());
}

void IsterModel::load_parameters(const nn::ParameterList& values)
{
    for (auto& own : parameters()) {
        auto it = std::find_if(values.begin(), values.end(),
                               [&](const nn::NamedParameter& p) { return p.name == own.name; });
        if (it == values.end()) {
            throw DataError("missing parameter '" + own.name + "'");
        }
        if (it->value.shape() != own.value.shape()) {
            throw DimensionError("parameter '" + own.name + "' has shape " + ad::shape_string(it->value.shape()) +
                                 ", expected " + ad::shape_string(own.value.shape()));
        }
        auto dst = own.value.mutable_data();
        auto src = it->value.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

} // namespace ister::model
