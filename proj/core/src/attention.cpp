#include "ister/attention.hpp"

#include <cmath>
#include <sstream>

#include "ister/autodiff/ops.hpp"
#include "ister/error.hpp"

namespace ister::attention {

namespace {

// Views [L x D] as [1 x L x D]; returns whether it did.
std::pair<ad::DiffArray, bool> as_batched(const ad::DiffArray& tokens, std::size_t width, const char* op)
{
    if (tokens.rank() == 2 && tokens.dim(1) == width) {
        return {ad::reshape(tokens, {1, tokens.dim(0), width}), true};
    }
    if (tokens.rank() == 3 && tokens.dim(2) == width) {
        return {tokens, false};
    }
    std::ostringstream os;
    os << op << ": tokens of shape " << ad::shape_string(tokens.shape()) << " do not match width " << width;
    throw DimensionError(os.str());
}

} // namespace

QKVParams QKVParams::init(std::size_t width, std::mt19937_64& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    QKVParams p;
    p.wq = nn::uniform_parameter({width, width}, bound, rng);
    p.wk = nn::uniform_parameter({width, width}, bound, rng);
    p.wv = nn::uniform_parameter({width, width}, bound, rng);
    return p;
}

void QKVParams::collect(const std::string& prefix, nn::ParameterList& out) const
{
    out.push_back({prefix + ".wq", wq});
    out.push_back({prefix + ".wk", wk});
    out.push_back({prefix + ".wv", wv});
}

std::vector<double> AttentionWeights::token_scores(std::size_t b) const
{
    std::vector<double> scores(tokens, 0.0);
    for (std::size_t l = 0; l < tokens; ++l) {
        double acc = 0.0;
        for (std::size_t f = 0; f < width; ++f) {
            acc += weight(b, l, f);
        }
        scores[l] = acc / static_cast<double>(width);
    }
    return scores;
}

ad::DiffArray dot_attention_core(const ad::DiffArray& q, const ad::DiffArray& k, const ad::DiffArray& v,
                                 ad::DiffArray* softmax_out)
{
    if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
        throw DimensionError("dot_attention_core: q/k/v must share a [B x L x D] shape, got " +
                             ad::shape_string(q.shape()) + ", " + ad::shape_string(k.shape()) + ", " +
                             ad::shape_string(v.shape()));
    }
    auto g = ad::softmax_along(q, 1);
    auto r = ad::sum(ad::mul(g, k), 1, true); // [B x 1 x D]
    if (softmax_out) {
        *softmax_out = g;
    }
    return ad::mul(r, v);
}

DotResult dot_attention(const ad::DiffArray& tokens, const QKVParams& params, bool capture_weights)
{
    const std::size_t d = params.width();
    auto [x, flattened] = as_batched(tokens, d, "dot_attention");
    if (x.dim(1) == 0) {
        throw DimensionError("dot_attention: needs at least one token");
    }
    auto q = ad::matmul(x, params.wq);
    auto k = ad::matmul(x, params.wk);
    auto v = ad::matmul(x, params.wv);
    ad::DiffArray g;
    auto out = dot_attention_core(q, k, v, &g);
    DotResult result;
    result.output = flattened ? ad::reshape(out, tokens.shape()) : out;
    if (capture_weights) {
        AttentionWeights w;
        w.batch = x.dim(0);
        w.tokens = x.dim(1);
        w.width = d;
        w.weights.assign(g.data().begin(), g.data().end());
        result.weights = std::move(w);
    }
    return result;
}

MultiHeadParams MultiHeadParams::init(std::size_t width, std::size_t heads, std::mt19937_64& rng)
{
    if (heads == 0 || width % heads != 0) {
        throw ConfigError("multihead attention: width " + std::to_string(width) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    MultiHeadParams p;
    p.qkv = QKVParams::init(width, rng);
    p.wo = nn::uniform_parameter({width, width}, 1.0 / std::sqrt(static_cast<double>(width)), rng);
    p.heads = heads;
    return p;
}

void MultiHeadParams::collect(const std::string& prefix, nn::ParameterList& out) const
{
    qkv.collect(prefix, out);
    out.push_back({prefix + ".wo", wo});
}

ad::DiffArray scaled_dot_product_core(const ad::DiffArray& q, const ad::DiffArray& k, const ad::DiffArray& v,
                                      std::size_t heads)
{
    if (q.rank() != 3 || q.shape() != k.shape() || q.shape() != v.shape()) {
        throw DimensionError("scaled_dot_product_core: q/k/v must share a [B x L x D] shape");
    }
    const std::size_t b = q.dim(0);
    const std::size_t l = q.dim(1);
    const std::size_t d = q.dim(2);
    if (heads == 0 || d % heads != 0) {
        throw ConfigError("multihead attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(heads) + " heads");
    }
    const std::size_t dh = d / heads;
    auto split = [&](const ad::DiffArray& x) {
        return ad::reshape(ad::permute(ad::reshape(x, {b, l, heads, dh}), {0, 2, 1, 3}), {b * heads, l, dh});
    };
    auto qh = split(q);
    auto kh = split(k);
    auto vh = split(v);
    auto scores = ad::scale(ad::matmul(qh, ad::transpose(kh, 1, 2)), 1.0 / std::sqrt(static_cast<double>(dh)));
    auto attn = ad::softmax_along(scores, 2);
    auto mixed = ad::matmul(attn, vh); // [(B*h) x L x dh]
    return ad::reshape(ad::permute(ad::reshape(mixed, {b, heads, l, dh}), {0, 2, 1, 3}), {b, l, d});
}

ad::DiffArray multihead_attention(const ad::DiffArray& tokens, const MultiHeadParams& params)
{
    const std::size_t d = params.qkv.width();
    auto [x, flattened] = as_batched(tokens, d, "multihead_attention");
    auto q = ad::matmul(x, params.qkv.wq);
    auto k = ad::matmul(x, params.qkv.wk);
    auto v = ad::matmul(x, params.qkv.wv);
    auto out = ad::matmul(scaled_dot_product_core(q, k, v, params.heads), params.wo);
    return flattened ? ad::reshape(out, tokens.shape()) : out;
}

Mechanism parse_mechanism(const std::string& name)
{
    if (name == "dot") return Mechanism::dot;
    if (name == "multihead" || name == "msa") return Mechanism::multihead;
    throw ConfigError("unknown attention mechanism '" + name + "' (expected dot or multihead)");
}

std::string to_string(Mechanism m) { return m == Mechanism::dot ? "dot" : "multihead"; }

ad::OpCount count_ops(Mechanism mechanism, std::size_t tokens, std::size_t width, std::size_t heads)
{
    // Deterministic inputs; values do not affect the count.
    std::mt19937_64 rng(tokens * 1315423911ULL + width);
    std::normal_distribution<double> dist(0.0, 1.0);
    auto make = [&] {
        std::vector<double> values(tokens * width);
        for (auto& x : values) x = dist(rng);
        return ad::DiffArray::from({1, tokens, width}, std::move(values));
    };
    auto q = make();
    auto k = make();
    auto v = make();
    ad::OpCounter counter;
    if (mechanism == Mechanism::dot) {
        dot_attention_core(q, k, v);
    } else {
        scaled_dot_product_core(q, k, v, heads);
    }
    return counter.count();
}

} // namespace ister::attention
