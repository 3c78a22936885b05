#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ister/autodiff/diff_array.hpp"

namespace ister::nn {

/// A named trainable array. The handle shares storage with the owning module.
struct NamedParameter {
    std::string name;
    ad::DiffArray value;
};

using ParameterList = std::vector<NamedParameter>;

/// Leaf array with uniform(-bound, bound) entries, tracked for gradients.
ad::DiffArray uniform_parameter(ad::Shape shape, double bound, std::mt19937_64& rng);

/// y = x * W (+ b), W stored [in x out].
struct Linear {
    ad::DiffArray weight;
    ad::DiffArray bias;
    bool has_bias = true;

    static Linear uniform(std::size_t in, std::size_t out, double bound, std::mt19937_64& rng, bool bias = true);
    /// PyTorch-style default bound 1/sqrt(in).
    static Linear standard(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias = true);

    ad::DiffArray operator()(const ad::DiffArray& x) const;

    void collect(const std::string& prefix, ParameterList& out) const;
};

/// Count of scalar values across a parameter list.
std::size_t parameter_count(const ParameterList& params);

} // namespace ister::nn
