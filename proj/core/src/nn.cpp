#include "ister/nn.hpp"

#include <cmath>

#include "ister/autodiff/ops.hpp"

namespace ister::nn {

ad::DiffArray uniform_parameter(ad::Shape shape, double bound, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> values(ad::shape_size(shape));
    for (auto& v : values) {
        v = dist(rng);
    }
    return ad::DiffArray::from(std::move(shape), std::move(values), true);
}

Linear Linear::uniform(std::size_t in, std::size_t out, double bound, std::mt19937_64& rng, bool bias)
{
    Linear l;
    l.weight = uniform_parameter({in, out}, bound, rng);
    l.has_bias = bias;
    l.bias = bias ? uniform_parameter({out}, bound, rng) : ad::DiffArray::zeros({out});
    return l;
}

Linear Linear::standard(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias)
{
    return uniform(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng, bias);
}

ad::DiffArray Linear::operator()(const ad::DiffArray& x) const
{
    auto y = ad::matmul(x, weight);
    return has_bias ? ad::add(y, bias) : y;
}

void Linear::collect(const std::string& prefix, ParameterList& out) const
{
    out.push_back({prefix + ".weight", weight});
    if (has_bias) {
        out.push_back({prefix + ".bias", bias});
    }
}

std::size_t parameter_count(const ParameterList& params)
{
    std::size_t n = 0;
    for (const auto& p : params) {
        n += p.value.size();
    }
    return n;
}

} // namespace ister::nn
