#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ister/autodiff/diff_array.hpp"
#include "ister/nn.hpp"

namespace ister::attention {

/// Query/key/value projections, each [D x D], no bias.
struct QKVParams {
    ad::DiffArray wq;
    ad::DiffArray wk;
    ad::DiffArray wv;

    static QKVParams init(std::size_t width, std::mt19937_64& rng);
    std::size_t width() const { return wq.dim(0); }
    void collect(const std::string& prefix, nn::ParameterList& out) const;
};

/// Query softmax of one dot-attention call, laid out [batch x tokens x width].
/// Each (batch, feature) column is a distribution over tokens.
struct AttentionWeights {
    std::size_t batch = 0;
    std::size_t tokens = 0;
    std::size_t width = 0;
    std::vector<double> weights;

    double weight(std::size_t b, std::size_t token, std::size_t feature) const
    {
        return weights[(b * tokens + token) * width + feature];
    }
    /// Mean over features of the weights for one batch row; sums to 1.
    std::vector<double> token_scores(std::size_t b = 0) const;
};

struct DotResult {
    ad::DiffArray output;
    std::optional<AttentionWeights> weights;
};

/// Linear-cost attention over tokens [L x D] or [B x L x D]:
///   G = softmax over tokens of Q (per feature), r = sum_i G_i * K_i, out_i = r * V_i.
DotResult dot_attention(const ad::DiffArray& tokens, const QKVParams& params, bool capture_weights = false);

/// The part of dot_attention after the projections; q/k/v are [B x L x D].
/// When `softmax_out` is given it receives G.
ad::DiffArray dot_attention_core(const ad::DiffArray& q, const ad::DiffArray& k, const ad::DiffArray& v,
                                 ad::DiffArray* softmax_out = nullptr);

inline constexpr std::size_t kDefaultHeads = 8;

/// Reference multi-head self-attention (no biases).
struct MultiHeadParams {
    QKVParams qkv;
    ad::DiffArray wo;
    std::size_t heads = kDefaultHeads;

    static MultiHeadParams init(std::size_t width, std::size_t heads, std::mt19937_64& rng);
    void collect(const std::string& prefix, nn::ParameterList& out) const;
};

/// softmax(Q K^T / sqrt(d_head)) V per head, heads concatenated, then W_O.
ad::DiffArray multihead_attention(const ad::DiffArray& tokens, const MultiHeadParams& params);

/// Per-head scaled dot-product attention on projected q/k/v [B x L x D].
ad::DiffArray scaled_dot_product_core(const ad::DiffArray& q, const ad::DiffArray& k, const ad::DiffArray& v,
                                      std::size_t heads);

enum class Mechanism { dot, multihead };

Mechanism parse_mechanism(const std::string& name);
std::string to_string(Mechanism m);

/// Exact arithmetic count of one forward pass through the attention core at
/// the given token count and width. Projections are excluded.
ad::OpCount count_ops(Mechanism mechanism, std::size_t tokens, std::size_t width,
                      std::size_t heads = kDefaultHeads);

} // namespace ister::attention
