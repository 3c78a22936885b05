#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ister/attention.hpp"
#include "ister/autodiff/diff_array.hpp"
#include "ister/embedding.hpp"
#include "ister/matrix.hpp"
#include "ister/nn.hpp"
#include "ister/periodicity.hpp"
#include "ister/preprocess.hpp"

namespace ister::model {

enum class AttentionKind { dot, multihead, none };

AttentionKind parse_attention_kind(const std::string& name);
std::string to_string(AttentionKind kind);

struct ModelConfig {
    std::size_t lookback = 96; // T
    std::size_t horizon = 96;  // S
    std::size_t channels = 1;  // N
    std::size_t width = 128;   // D
    std::size_t top_k = 3;
    std::size_t blocks = 2;
    std::size_t heads = attention::kDefaultHeads; // only used by multihead branches
    std::size_t ffn_multiple = 2;
    AttentionKind period_attention = AttentionKind::dot;  // Encoder_H
    AttentionKind channel_attention = AttentionKind::dot; // Encoder_C
    double dropout = 0.1;
    long decomp_kernel = preprocess::kDefaultDecompKernel;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Variant { full, no_dot, plus_msa, no_channel, no_period };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

/// Base config with the attention branches switched per the ablation.
ModelConfig ablation_variant(ModelConfig base, Variant variant);

struct LayerNormParams {
    ad::DiffArray gain;
    ad::DiffArray bias;
};

struct FeedForward {
    nn::Linear up;   // D -> m*D
    nn::Linear down; // m*D -> D
};

/// Pre-norm residual block: y = x + Mix(LN(x)); out = y + FFN(LN(y)).
/// Mix is dot attention, multi-head attention, or (kind none) a second FFN.
struct EncoderBlockParams {
    AttentionKind kind = AttentionKind::dot;
    LayerNormParams norm1;
    LayerNormParams norm2;
    attention::QKVParams dot;
    attention::MultiHeadParams multihead;
    FeedForward mixer; // stands in for attention when kind == none
    FeedForward ffn;

    static EncoderBlockParams init(AttentionKind kind, std::size_t width, std::size_t ffn_multiple, std::size_t heads,
                                   std::mt19937_64& rng);
    void collect(const std::string& prefix, nn::ParameterList& out) const;
};

/// Dropout source for training-mode forwards; eval when rng is null.
struct ForwardMode {
    std::mt19937_64* rng = nullptr;
    double dropout = 0.0;

    bool training() const { return rng != nullptr && dropout > 0.0; }
};

/// tokens: [B x L x D]. When `weights` is non-null and the block uses dot
/// attention, the query softmax is stored there.
ad::DiffArray encoder_block(const ad::DiffArray& tokens, const EncoderBlockParams& params, const ForwardMode& mode,
                            std::optional<attention::AttentionWeights>* weights = nullptr);

/// Attention readouts recorded during one forward pass.
struct ForwardCapture {
    periodicity::PeriodPlan plan;
    std::vector<std::optional<attention::AttentionWeights>> period_weights;  // per block, [N x (P+1) x D]
    std::vector<std::optional<attention::AttentionWeights>> channel_weights; // per block, [1 x N x D]
};

/// Parameter-free part of the forward pass for one window: instance
/// normalization, decomposition and period discovery.
struct PreparedInput {
    preprocess::NormStats stats;
    Matrix seasonal; // [T x N], normalized
    Matrix trend;    // [T x N], normalized
    periodicity::PeriodPlan plan;
};

struct Forecast {
    Matrix prediction; // [S x N]
    preprocess::NormStats stats;
    std::optional<ForwardCapture> capture;
};

class IsterModel {
public:
    static IsterModel init(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }

    /// Every trainable array with a stable dotted name, in a fixed order.
    nn::ParameterList parameters() const;
    std::size_t parameter_count() const { return nn::parameter_count(parameters()); }

    /// Inference on one lookback window x [T x N].
    Forecast forward(const Matrix& x, bool capture = false) const;

    /// Differentiable prediction [S x N] (denormalized). Records on the active tape.
    ad::DiffArray forward_diff(const Matrix& x, const ForwardMode& mode = {}, ForwardCapture* capture = nullptr,
                               preprocess::NormStats* stats = nullptr) const;

    PreparedInput prepare(const Matrix& x) const;
    ad::DiffArray forward_prepared(const PreparedInput& input, const ForwardMode& mode = {},
                                   ForwardCapture* capture = nullptr) const;

    /// Deep copy: fresh storage with identical values.
    IsterModel clone() const;

    /// Copies parameter values from another model with the same config.
    void assign_from(const IsterModel& other);
    /// Copies values by name; every own parameter must be present with matching shape.
    void load_parameters(const nn::ParameterList& values);

private:
    ModelConfig config_;
    embedding::EmbedParams embed_;
    std::vector<EncoderBlockParams> period_blocks_;
    std::vector<EncoderBlockParams> channel_blocks_;
    nn::Linear seasonal_head_; // D -> S
    nn::Linear trend_head_;    // T -> S
};

} // namespace ister::model
