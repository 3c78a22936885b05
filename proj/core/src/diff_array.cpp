#include "ister/autodiff/diff_array.hpp"

#include <algorithm>
#include <sstream>

#include "ister/error.hpp"

namespace ister::ad {

namespace {
thread_local Tape* current_tape = nullptr;
thread_local OpCounter* current_counter = nullptr;
thread_local std::uint64_t node_counter = 0;
} // namespace

std::size_t shape_size(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << "]";
    return os.str();
}

namespace detail {

std::vector<double>& Node::ensure_grad()
{
    if (grad.empty()) {
        grad.assign(value.size(), 0.0);
    }
    return grad;
}

std::uint64_t next_node_id() { return ++node_counter; }

} // namespace detail

DiffArray::DiffArray() : node_(from(Shape{}, {0.0}).node_) {}

DiffArray DiffArray::from(Shape shape, std::vector<double> values, bool requires_grad)
{
    if (shape_size(shape) != values.size()) {
        std::ostringstream os;
        os << "shape " << shape_string(shape) << " needs " << shape_size(shape) << " values, got " << values.size();
        throw DimensionError(os.str());
    }
    if (!all_finite(values)) {
        throw NumericError("non-finite value in array of shape " + shape_string(shape));
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    node->id = detail::next_node_id();
    return DiffArray(std::move(node));
}

DiffArray DiffArray::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

DiffArray DiffArray::full(Shape shape, double value, bool requires_grad)
{
    auto n = shape_size(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

DiffArray DiffArray::scalar(double value) { return from(Shape{}, {value}); }

DiffArray DiffArray::from_matrix(const Matrix& m, bool requires_grad)
{
    return from(Shape{m.rows, m.cols}, m.data, requires_grad);
}

std::size_t DiffArray::dim(std::size_t axis) const
{
    if (axis >= rank()) {
        std::ostringstream os;
        os << "axis " << axis << " out of range for shape " << shape_string(shape());
        throw DimensionError(os.str());
    }
    return node_->shape[axis];
}

std::span<double> DiffArray::mutable_data()
{
    if (node_->backward) {
        throw TapeError("mutable_data() is only available on leaf arrays");
    }
    return node_->value;
}

void DiffArray::zero_grad() { node_->grad.clear(); }

double DiffArray::item() const
{
    if (size() != 1) {
        throw DimensionError("item() on array of shape " + shape_string(shape()));
    }
    return node_->value[0];
}

double DiffArray::at(std::initializer_list<std::size_t> index) const
{
    if (index.size() != rank()) {
        throw DimensionError("index rank does not match shape " + shape_string(shape()));
    }
    std::size_t offset = 0;
    std::size_t axis = 0;
    for (auto i : index) {
        if (i >= node_->shape[axis]) {
            throw DimensionError("index out of range for shape " + shape_string(shape()));
        }
        offset = offset * node_->shape[axis] + i;
        ++axis;
    }
    return node_->value[offset];
}

DiffArray DiffArray::detach() const { return from(shape(), node_->value); }

Matrix DiffArray::to_matrix() const
{
    if (rank() != 2) {
        throw DimensionError("to_matrix() needs a rank-2 array, got " + shape_string(shape()));
    }
    return Matrix(dim(0), dim(1), node_->value);
}

Tape::Tape() : previous_(current_tape) { current_tape = this; }

Tape::~Tape() { current_tape = previous_; }

Tape* Tape::current() { return current_tape; }

void Tape::record(std::shared_ptr<detail::Node> node)
{
    if (consumed_) {
        throw TapeError("cannot record on a tape that has already been traversed; call reset()");
    }
    nodes_.push_back(std::move(node));
}

void Tape::backward(const DiffArray& loss)
{
    if (consumed_) {
        throw TapeError("backward() already called on this tape; call reset() first");
    }
    if (loss.size() != 1) {
        throw TapeError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
    }
    if (nodes_.empty()) {
        throw TapeError("backward() on an empty tape");
    }
    const auto& root = loss.node();
    if (!root->requires_grad || !root->backward) {
        throw TapeError("loss was not recorded on the tape");
    }
    root->ensure_grad()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        auto& node = **it;
        if (!node.grad.empty() && node.backward) {
            node.backward(node);
        }
    }
    consumed_ = true;
}

void Tape::reset()
{
    nodes_.clear();
    consumed_ = false;
}

OpCounter::OpCounter() : previous_(current_counter) { current_counter = this; }

OpCounter::~OpCounter() { current_counter = previous_; }

void OpCounter::add(std::uint64_t adds, std::uint64_t mults, std::uint64_t divs, std::uint64_t exps)
{
    for (auto* c = current_counter; c != nullptr; c = c->previous_) {
        c->count_.adds += adds;
        c->count_.mults += mults;
        c->count_.divs += divs;
        c->count_.exps += exps;
    }
}

} // namespace ister::ad
