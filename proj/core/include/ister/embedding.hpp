#pragma once

#include <cstddef>
#include <random>

#include "ister/autodiff/diff_array.hpp"
#include "ister/matrix.hpp"
#include "ister/nn.hpp"
#include "ister/periodicity.hpp"

namespace ister::embedding {

/// Projections from a length-T sequence to a D-dimensional token: one for the
/// whole-sequence channel token, one shared by every periodic component.
struct EmbedParams {
    nn::Linear channel; // [T x D] + [D]
    nn::Linear period;  // [T x D] + [D]

    /// Uniform(-1/sqrt(T), 1/sqrt(T)) init for both projections.
    static EmbedParams init(std::size_t lookback, std::size_t width, std::mt19937_64& rng);

    std::size_t lookback() const { return channel.weight.dim(0); }
    std::size_t width() const { return channel.weight.dim(1); }

    void collect(const std::string& prefix, nn::ParameterList& out) const;
};

/// Embedded tokens, [N x (P+1) x D]. Token 0 of each channel is the channel
/// token; tokens 1..P follow the plan's layout order.
struct TokenTensor {
    ad::DiffArray tokens;

    std::size_t channels() const { return tokens.dim(0); }
    std::size_t token_count() const { return tokens.dim(1); }
    std::size_t width() const { return tokens.dim(2); }

    /// The channel tokens as [N x D].
    ad::DiffArray channel_tokens() const;
};

/// Multi-scale inverted embedding of a seasonal window x [T x N].
TokenTensor embed(const Matrix& seasonal, const periodicity::PeriodPlan& plan, const EmbedParams& params);

} // namespace ister::embedding
