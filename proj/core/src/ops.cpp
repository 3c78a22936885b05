#include "ister/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ister/error.hpp"

namespace ister::ad {

namespace {

using detail::Node;
using Backward = std::function<void(Node&)>;

DiffArray make_result(Shape shape, std::vector<double> values, std::initializer_list<const DiffArray*> inputs,
                      const char* op, Backward backward)
{
    if (!all_finite(values)) {
        throw NumericError(std::string("non-finite value produced by ") + op);
    }
    auto out = DiffArray::from(std::move(shape), std::move(values));
    auto* tape = Tape::current();
    if (tape == nullptr) {
        return out;
    }
    bool needs = false;
    for (const auto* in : inputs) {
        needs = needs || in->requires_grad();
    }
    if (!needs) {
        return out;
    }
    const auto& node = out.node();
    node->requires_grad = true;
    for (const auto* in : inputs) {
        node->parents.push_back(in->node());
    }
    node->backward = std::move(backward);
    tape->record(node);
    return out;
}

DiffArray make_result(Shape shape, std::vector<double> values, const std::vector<DiffArray>& inputs, const char* op,
                      Backward backward)
{
    if (!all_finite(values)) {
        throw NumericError(std::string("non-finite value produced by ") + op);
    }
    auto out = DiffArray::from(std::move(shape), std::move(values));
    auto* tape = Tape::current();
    if (tape == nullptr ||
        std::none_of(inputs.begin(), inputs.end(), [](const DiffArray& a) { return a.requires_grad(); })) {
        return out;
    }
    const auto& node = out.node();
    node->requires_grad = true;
    for (const auto& in : inputs) {
        node->parents.push_back(in.node());
    }
    node->backward = std::move(backward);
    tape->record(node);
    return out;
}

// Gradient buffer of a parent, or nullptr when it does not need one.
std::vector<double>* parent_grad(Node& self, std::size_t i)
{
    auto& p = *self.parents[i];
    return p.requires_grad ? &p.ensure_grad() : nullptr;
}

const std::vector<double>& parent_value(const Node& self, std::size_t i) { return self.parents[i]->value; }

std::string describe_pair(const char* op, const Shape& a, const Shape& b)
{
    std::ostringstream os;
    os << op << ": incompatible shapes " << shape_string(a) << " and " << shape_string(b);
    return os.str();
}

void check_axis(const DiffArray& x, std::size_t axis, const char* op)
{
    if (axis >= x.rank()) {
        std::ostringstream os;
        os << op << ": axis " << axis << " out of range for shape " << shape_string(x.shape());
        throw DimensionError(os.str());
    }
}

// --- broadcasting ---------------------------------------------------------

struct BroadcastPlan {
    Shape out;
    std::vector<std::size_t> stride_a;
    std::vector<std::size_t> stride_b;
    bool same = false;
};

std::vector<std::size_t> contiguous_strides(const Shape& shape)
{
    std::vector<std::size_t> strides(shape.size(), 1);
    for (std::size_t d = shape.size(); d-- > 1;) {
        strides[d - 1] = strides[d] * shape[d];
    }
    return strides;
}

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op)
{
    BroadcastPlan plan;
    if (a == b) {
        plan.out = a;
        plan.same = true;
        return plan;
    }
    const std::size_t rank = std::max(a.size(), b.size());
    plan.out.assign(rank, 1);
    plan.stride_a.assign(rank, 0);
    plan.stride_b.assign(rank, 0);
    const auto sa = contiguous_strides(a);
    const auto sb = contiguous_strides(b);
    for (std::size_t d = 0; d < rank; ++d) {
        const std::size_t offset_a = rank - a.size();
        const std::size_t offset_b = rank - b.size();
        const std::size_t da = d >= offset_a ? a[d - offset_a] : 1;
        const std::size_t db = d >= offset_b ? b[d - offset_b] : 1;
        if (da != db && da != 1 && db != 1) {
            throw DimensionError(describe_pair(op, a, b));
        }
        plan.out[d] = std::max(da, db);
        if (d >= offset_a && da != 1) {
            plan.stride_a[d] = sa[d - offset_a];
        }
        if (d >= offset_b && db != 1) {
            plan.stride_b[d] = sb[d - offset_b];
        }
    }
    return plan;
}

// Calls f(out_index, a_index, b_index) for every output element.
template <class F>
void for_each_broadcast(const BroadcastPlan& plan, F&& f)
{
    const std::size_t n = shape_size(plan.out);
    if (plan.same) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i, i, i);
        }
        return;
    }
    const std::size_t rank = plan.out.size();
    std::vector<std::size_t> idx(rank, 0);
    std::size_t ia = 0;
    std::size_t ib = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f(i, ia, ib);
        for (std::size_t d = rank; d-- > 0;) {
            ++idx[d];
            ia += plan.stride_a[d];
            ib += plan.stride_b[d];
            if (idx[d] < plan.out[d]) {
                break;
            }
            ia -= plan.stride_a[d] * plan.out[d];
            ib -= plan.stride_b[d] * plan.out[d];
            idx[d] = 0;
        }
    }
}

enum class Arith { add, sub, mul };

DiffArray elementwise(const DiffArray& a, const DiffArray& b, Arith kind, const char* name)
{
    auto plan = plan_broadcast(a.shape(), b.shape(), name);
    std::vector<double> out(shape_size(plan.out));
    const auto av = a.data();
    const auto bv = b.data();
    switch (kind) {
    case Arith::add:
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = av[ia] + bv[ib]; });
        OpCounter::add(out.size(), 0);
        break;
    case Arith::sub:
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = av[ia] - bv[ib]; });
        OpCounter::add(out.size(), 0);
        break;
    case Arith::mul:
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) { out[i] = av[ia] * bv[ib]; });
        OpCounter::add(0, out.size());
        break;
    }
    auto shape = plan.out;
    return make_result(std::move(shape), std::move(out), {&a, &b}, name, [plan = std::move(plan), kind](Node& self) {
        const auto& g = self.grad;
        auto* ga = parent_grad(self, 0);
        auto* gb = parent_grad(self, 1);
        if (kind == Arith::mul) {
            const auto& av = parent_value(self, 0);
            const auto& bv = parent_value(self, 1);
            for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
                if (ga) (*ga)[ia] += g[i] * bv[ib];
                if (gb) (*gb)[ib] += g[i] * av[ia];
            });
            return;
        }
        const double sign_b = kind == Arith::sub ? -1.0 : 1.0;
        for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
            if (ga) (*ga)[ia] += g[i];
            if (gb) (*gb)[ib] += sign_b * g[i];
        });
    });
}

// --- dense kernels --------------------------------------------------------

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b, double* c)
{
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                ci[j] += aip * bp[j];
            }
        }
    }
}

// C[m x k] += G[m x n] * B[k x n]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* g, const double* b, double* c)
{
    for (std::size_t i = 0; i < m; ++i) {
        const double* gi = g + i * n;
        double* ci = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += gi[j] * bp[j];
            }
            ci[p] += acc;
        }
    }
}

// C[k x n] += A[m x k]^T * G[m x n]
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* g, double* c)
{
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        const double* gi = g + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) {
                cp[j] += aip * gi[j];
            }
        }
    }
}

// Outer/axis/inner decomposition used by axis-wise ops.
struct AxisView {
    std::size_t outer = 1;
    std::size_t len = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis)
{
    AxisView v;
    for (std::size_t d = 0; d < axis; ++d) {
        v.outer *= shape[d];
    }
    v.len = shape[axis];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) {
        v.inner *= shape[d];
    }
    return v;
}

} // namespace

DiffArray matmul(const DiffArray& a, const DiffArray& b)
{
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    if (sa.size() < 2 || sb.size() < 2 || sa.back() != sb[sb.size() - 2]) {
        throw DimensionError(describe_pair("matmul", sa, sb));
    }
    const std::size_t k = sa.back();
    const std::size_t n = sb.back();

    if (sb.size() == 2) {
        const std::size_t m = a.size() / k;
        Shape out_shape(sa.begin(), sa.end() - 1);
        out_shape.push_back(n);
        std::vector<double> out(m * n, 0.0);
        gemm_nn(m, k, n, a.data().data(), b.data().data(), out.data());
        OpCounter::add(m * n * (k - 1), m * n * k);
        return make_result(std::move(out_shape), std::move(out), {&a, &b}, "matmul", [m, k, n](Node& self) {
            const double* g = self.grad.data();
            if (auto* ga = parent_grad(self, 0)) {
                gemm_nt(m, n, k, g, parent_value(self, 1).data(), ga->data());
            }
            if (auto* gb = parent_grad(self, 1)) {
                gemm_tn(m, k, n, parent_value(self, 0).data(), g, gb->data());
            }
        });
    }

    if (sa.size() != 3 || sb.size() != 3 || sa[0] != sb[0]) {
        throw DimensionError(describe_pair("matmul", sa, sb));
    }
    const std::size_t batch = sa[0];
    const std::size_t m = sa[1];
    std::vector<double> out(batch * m * n, 0.0);
    for (std::size_t bi = 0; bi < batch; ++bi) {
        gemm_nn(m, k, n, a.data().data() + bi * m * k, b.data().data() + bi * k * n, out.data() + bi * m * n);
    }
    OpCounter::add(batch * m * n * (k - 1), batch * m * n * k);
    return make_result(Shape{batch, m, n}, std::move(out), {&a, &b}, "matmul", [batch, m, k, n](Node& self) {
        const double* g = self.grad.data();
        auto* ga = parent_grad(self, 0);
        auto* gb = parent_grad(self, 1);
        const double* av = parent_value(self, 0).data();
        const double* bv = parent_value(self, 1).data();
        for (std::size_t bi = 0; bi < batch; ++bi) {
            if (ga) gemm_nt(m, n, k, g + bi * m * n, bv + bi * k * n, ga->data() + bi * m * k);
            if (gb) gemm_tn(m, k, n, av + bi * m * k, g + bi * m * n, gb->data() + bi * k * n);
        }
    });
}

DiffArray add(const DiffArray& a, const DiffArray& b) { return elementwise(a, b, Arith::add, "add"); }
DiffArray sub(const DiffArray& a, const DiffArray& b) { return elementwise(a, b, Arith::sub, "sub"); }
DiffArray mul(const DiffArray& a, const DiffArray& b) { return elementwise(a, b, Arith::mul, "mul"); }

DiffArray scale(const DiffArray& x, double factor)
{
    std::vector<double> out(x.data().begin(), x.data().end());
    for (auto& v : out) {
        v *= factor;
    }
    OpCounter::add(0, out.size());
    return make_result(x.shape(), std::move(out), {&x}, "scale", [factor](Node& self) {
        if (auto* gx = parent_grad(self, 0)) {
            for (std::size_t i = 0; i < gx->size(); ++i) {
                (*gx)[i] += factor * self.grad[i];
            }
        }
    });
}

DiffArray sum(const DiffArray& x, std::size_t axis, bool keepdim)
{
    check_axis(x, axis, "sum");
    const auto v = axis_view(x.shape(), axis);
    std::vector<double> out(v.outer * v.inner, 0.0);
    const auto xv = x.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t l = 0; l < v.len; ++l) {
            const double* src = xv.data() + (o * v.len + l) * v.inner;
            double* dst = out.data() + o * v.inner;
            for (std::size_t i = 0; i < v.inner; ++i) {
                dst[i] += src[i];
            }
        }
    }
    OpCounter::add(v.outer * v.inner * (v.len > 0 ? v.len - 1 : 0), 0);
    Shape shape = x.shape();
    if (keepdim) {
        shape[axis] = 1;
    } else {
        shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
    }
    return make_result(std::move(shape), std::move(out), {&x}, "sum", [v](Node& self) {
        auto* gx = parent_grad(self, 0);
        if (!gx) return;
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t l = 0; l < v.len; ++l) {
                double* dst = gx->data() + (o * v.len + l) * v.inner;
                const double* src = self.grad.data() + o * v.inner;
                for (std::size_t i = 0; i < v.inner; ++i) {
                    dst[i] += src[i];
                }
            }
        }
    });
}

DiffArray mean(const DiffArray& x, std::size_t axis, bool keepdim)
{
    check_axis(x, axis, "mean");
    if (x.dim(axis) == 0) {
        throw DimensionError("mean: empty axis in shape " + shape_string(x.shape()));
    }
    return scale(sum(x, axis, keepdim), 1.0 / static_cast<double>(x.dim(axis)));
}

DiffArray sum_all(const DiffArray& x)
{
    const auto xv = x.data();
    const double total = std::accumulate(xv.begin(), xv.end(), 0.0);
    OpCounter::add(x.size() > 0 ? x.size() - 1 : 0, 0);
    return make_result(Shape{}, {total}, {&x}, "sum_all", [](Node& self) {
        if (auto* gx = parent_grad(self, 0)) {
            for (auto& g : *gx) {
                g += self.grad[0];
            }
        }
    });
}

DiffArray mean_all(const DiffArray& x)
{
    if (x.size() == 0) {
        throw DimensionError("mean_all: empty array");
    }
    return scale(sum_all(x), 1.0 / static_cast<double>(x.size()));
}

DiffArray softmax_along(const DiffArray& x, std::size_t axis)
{
    check_axis(x, axis, "softmax_along");
    const auto v = axis_view(x.shape(), axis);
    if (v.len == 0) {
        throw DimensionError("softmax_along: empty axis in shape " + shape_string(x.shape()));
    }
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t i = 0; i < v.inner; ++i) {
            const std::size_t base = o * v.len * v.inner + i;
            double mx = xv[base];
            for (std::size_t l = 1; l < v.len; ++l) {
                mx = std::max(mx, xv[base + l * v.inner]);
            }
            double total = 0.0;
            for (std::size_t l = 0; l < v.len; ++l) {
                const double e = std::exp(xv[base + l * v.inner] - mx);
                out[base + l * v.inner] = e;
                total += e;
            }
            for (std::size_t l = 0; l < v.len; ++l) {
                out[base + l * v.inner] /= total;
            }
        }
    }
    const std::size_t slices = v.outer * v.inner;
    OpCounter::add(slices * (2 * v.len - 1), 0, slices * v.len, slices * v.len);
    return make_result(x.shape(), std::move(out), {&x}, "softmax_along", [v](Node& self) {
        auto* gx = parent_grad(self, 0);
        if (!gx) return;
        const auto& y = self.value;
        const auto& g = self.grad;
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t i = 0; i < v.inner; ++i) {
                const std::size_t base = o * v.len * v.inner + i;
                double dot = 0.0;
                for (std::size_t l = 0; l < v.len; ++l) {
                    dot += g[base + l * v.inner] * y[base + l * v.inner];
                }
                for (std::size_t l = 0; l < v.len; ++l) {
                    const std::size_t at = base + l * v.inner;
                    (*gx)[at] += y[at] * (g[at] - dot);
                }
            }
        }
    });
}

DiffArray reshape(const DiffArray& x, Shape shape)
{
    if (shape_size(shape) != x.size()) {
        throw DimensionError(describe_pair("reshape", x.shape(), shape));
    }
    std::vector<double> out(x.data().begin(), x.data().end());
    return make_result(std::move(shape), std::move(out), {&x}, "reshape", [](Node& self) {
        if (auto* gx = parent_grad(self, 0)) {
            for (std::size_t i = 0; i < gx->size(); ++i) {
                (*gx)[i] += self.grad[i];
            }
        }
    });
}

DiffArray permute(const DiffArray& x, const std::vector<std::size_t>& axes)
{
    const auto& in_shape = x.shape();
    const std::size_t rank = in_shape.size();
    std::vector<bool> seen(rank, false);
    if (axes.size() != rank) {
        throw DimensionError("permute: axis list does not match shape " + shape_string(in_shape));
    }
    for (auto a : axes) {
        if (a >= rank || seen[a]) {
            throw DimensionError("permute: invalid axis list for shape " + shape_string(in_shape));
        }
        seen[a] = true;
    }
    Shape out_shape(rank);
    const auto in_strides = contiguous_strides(in_shape);
    std::vector<std::size_t> gather_strides(rank);
    for (std::size_t d = 0; d < rank; ++d) {
        out_shape[d] = in_shape[axes[d]];
        gather_strides[d] = in_strides[axes[d]];
    }
    // source offset for every output element
    const std::size_t n = x.size();
    std::vector<std::size_t> source(n);
    {
        std::vector<std::size_t> idx(rank, 0);
        std::size_t offset = 0;
        for (std::size_t i = 0; i < n; ++i) {
            source[i] = offset;
            for (std::size_t d = rank; d-- > 0;) {
                ++idx[d];
                offset += gather_strides[d];
                if (idx[d] < out_shape[d]) {
                    break;
                }
                offset -= gather_strides[d] * out_shape[d];
                idx[d] = 0;
            }
        }
    }
    std::vector<double> out(n);
    const auto xv = x.data();
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = xv[source[i]];
    }
    return make_result(std::move(out_shape), std::move(out), {&x}, "permute",
                       [source = std::move(source)](Node& self) {
                           if (auto* gx = parent_grad(self, 0)) {
                               for (std::size_t i = 0; i < source.size(); ++i) {
                                   (*gx)[source[i]] += self.grad[i];
                               }
                           }
                       });
}

DiffArray transpose(const DiffArray& x, std::size_t axis_a, std::size_t axis_b)
{
    check_axis(x, axis_a, "transpose");
    check_axis(x, axis_b, "transpose");
    std::vector<std::size_t> axes(x.rank());
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    std::swap(axes[axis_a], axes[axis_b]);
    return permute(x, axes);
}

DiffArray concat(const std::vector<DiffArray>& parts, std::size_t axis)
{
    if (parts.empty()) {
        throw DimensionError("concat: no inputs");
    }
    const auto& first = parts.front().shape();
    if (axis >= first.size()) {
        throw DimensionError("concat: axis out of range for shape " + shape_string(first));
    }
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> lens;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t d = 0; ok && d < s.size(); ++d) {
            ok = d == axis || s[d] == first[d];
        }
        if (!ok) {
            throw DimensionError(describe_pair("concat", first, s));
        }
        lens.push_back(s[axis]);
        out_shape[axis] += s[axis];
    }
    const auto v = axis_view(out_shape, axis);
    std::vector<double> out(shape_size(out_shape));
    std::size_t at_axis = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
        const auto pv = parts[pi].data();
        const std::size_t block = lens[pi] * v.inner;
        for (std::size_t o = 0; o < v.outer; ++o) {
            std::copy(pv.begin() + static_cast<std::ptrdiff_t>(o * block),
                      pv.begin() + static_cast<std::ptrdiff_t>((o + 1) * block),
                      out.begin() + static_cast<std::ptrdiff_t>((o * v.len + at_axis) * v.inner));
        }
        at_axis += lens[pi];
    }
    return make_result(std::move(out_shape), std::move(out), parts, "concat", [v, lens](Node& self) {
        std::size_t at = 0;
        for (std::size_t pi = 0; pi < lens.size(); ++pi) {
            const std::size_t block = lens[pi] * v.inner;
            if (auto* gp = parent_grad(self, pi)) {
                for (std::size_t o = 0; o < v.outer; ++o) {
                    const double* src = self.grad.data() + (o * v.len + at) * v.inner;
                    double* dst = gp->data() + o * block;
                    for (std::size_t i = 0; i < block; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
            at += lens[pi];
        }
    });
}

DiffArray slice(const DiffArray& x, std::size_t axis, std::size_t start, std::size_t length)
{
    check_axis(x, axis, "slice");
    if (start + length > x.dim(axis)) {
        std::ostringstream os;
        os << "slice: range [" << start << ", " << start + length << ") exceeds axis " << axis << " of shape "
           << shape_string(x.shape());
        throw DimensionError(os.str());
    }
    const auto v = axis_view(x.shape(), axis);
    Shape out_shape = x.shape();
    out_shape[axis] = length;
    std::vector<double> out(shape_size(out_shape));
    const auto xv = x.data();
    const std::size_t block = length * v.inner;
    for (std::size_t o = 0; o < v.outer; ++o) {
        const auto from = static_cast<std::ptrdiff_t>((o * v.len + start) * v.inner);
        std::copy(xv.begin() + from, xv.begin() + from + static_cast<std::ptrdiff_t>(block),
                  out.begin() + static_cast<std::ptrdiff_t>(o * block));
    }
    return make_result(std::move(out_shape), std::move(out), {&x}, "slice", [v, start, block](Node& self) {
        auto* gx = parent_grad(self, 0);
        if (!gx) return;
        for (std::size_t o = 0; o < v.outer; ++o) {
            double* dst = gx->data() + (o * v.len + start) * v.inner;
            const double* src = self.grad.data() + o * block;
            for (std::size_t i = 0; i < block; ++i) {
                dst[i] += src[i];
            }
        }
    });
}

DiffArray gelu(const DiffArray& x)
{
    const auto xv = x.data();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * xv[i] * (1.0 + std::erf(xv[i] / std::numbers::sqrt2));
    }
    OpCounter::add(out.size(), 3 * out.size(), out.size());
    return make_result(x.shape(), std::move(out), {&x}, "gelu", [](Node& self) {
        auto* gx = parent_grad(self, 0);
        if (!gx) return;
        const auto& xv = parent_value(self, 0);
        const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double cdf = 0.5 * (1.0 + std::erf(xv[i] / std::numbers::sqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * xv[i] * xv[i]);
            (*gx)[i] += self.grad[i] * (cdf + xv[i] * pdf);
        }
    });
}

DiffArray layer_norm(const DiffArray& x, const DiffArray& gain, const DiffArray& bias, double eps)
{
    if (x.rank() < 1) {
        throw DimensionError("layer_norm: needs rank >= 1");
    }
    const std::size_t d = x.shape().back();
    if (gain.size() != d || bias.size() != d) {
        throw DimensionError(describe_pair("layer_norm", x.shape(), gain.shape()));
    }
    const std::size_t rows = x.size() / d;
    const auto xv = x.data();
    const auto gv = gain.data();
    const auto bv = bias.data();
    std::vector<double> out(x.size());
    std::vector<double> xhat(x.size());
    std::vector<double> inv_sd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(d);
        inv_sd[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            xhat[r * d + j] = (xr[j] - mu) * inv_sd[r];
            out[r * d + j] = xhat[r * d + j] * gv[j] + bv[j];
        }
    }
    OpCounter::add(rows * 4 * d, rows * 3 * d, rows * 3, 0);
    return make_result(x.shape(), std::move(out), {&x, &gain, &bias}, "layer_norm",
                       [d, rows, xhat = std::move(xhat), inv_sd = std::move(inv_sd)](Node& self) {
                           const auto& g = self.grad;
                           const auto& gv = parent_value(self, 1);
                           auto* gx = parent_grad(self, 0);
                           auto* gg = parent_grad(self, 1);
                           auto* gb = parent_grad(self, 2);
                           const double dd = static_cast<double>(d);
                           for (std::size_t r = 0; r < rows; ++r) {
                               const double* gr = g.data() + r * d;
                               const double* hr = xhat.data() + r * d;
                               if (gg || gb) {
                                   for (std::size_t j = 0; j < d; ++j) {
                                       if (gg) (*gg)[j] += gr[j] * hr[j];
                                       if (gb) (*gb)[j] += gr[j];
                                   }
                               }
                               if (!gx) continue;
                               double sum_dh = 0.0;
                               double sum_dh_h = 0.0;
                               for (std::size_t j = 0; j < d; ++j) {
                                   const double dh = gr[j] * gv[j];
                                   sum_dh += dh;
                                   sum_dh_h += dh * hr[j];
                               }
                               for (std::size_t j = 0; j < d; ++j) {
                                   const double dh = gr[j] * gv[j];
                                   (*gx)[r * d + j] += inv_sd[r] / dd * (dd * dh - sum_dh - hr[j] * sum_dh_h);
                               }
                           }
                       });
}

DiffArray dropout(const DiffArray& x, double rate, std::mt19937_64& rng)
{
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout: rate must lie in [0, 1)");
    }
    if (rate == 0.0) {
        return x;
    }
    std::bernoulli_distribution keep(1.0 - rate);
    const double factor = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.size());
    std::vector<double> out(x.size());
    const auto xv = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        mask[i] = keep(rng) ? factor : 0.0;
        out[i] = xv[i] * mask[i];
    }
    OpCounter::add(0, out.size());
    return make_result(x.shape(), std::move(out), {&x}, "dropout", [mask = std::move(mask)](Node& self) {
        if (auto* gx = parent_grad(self, 0)) {
            for (std::size_t i = 0; i < mask.size(); ++i) {
                (*gx)[i] += self.grad[i] * mask[i];
            }
        }
    });
}

} // namespace ister::ad
