#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ister/matrix.hpp"

namespace ister::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // empty until first accumulation
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad();
};

std::uint64_t next_node_id();

} // namespace detail

/// Dense 64-bit array that can take part in reverse-mode differentiation.
///
/// A DiffArray is a cheap handle: copies share the same underlying storage.
/// Values are immutable once an operation has produced them; only leaves
/// (parameters) may be updated in place, and only between tapes.
class DiffArray {
public:
    DiffArray();

    static DiffArray from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static DiffArray zeros(Shape shape, bool requires_grad = false);
    static DiffArray full(Shape shape, double value, bool requires_grad = false);
    static DiffArray scalar(double value);
    static DiffArray from_matrix(const Matrix& m, bool requires_grad = false);

    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return node_->value.size(); }

    std::span<const double> data() const { return node_->value; }
    /// Writable values; only valid on leaves (no backward rule attached).
    std::span<double> mutable_data();

    bool requires_grad() const { return node_->requires_grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    /// Gradient buffer; empty span when none has been accumulated.
    std::span<const double> grad() const { return node_->grad; }
    void zero_grad();

    std::uint64_t id() const { return node_->id; }

    double item() const;
    double at(std::initializer_list<std::size_t> index) const;

    /// Value copy with no graph history.
    DiffArray detach() const;
    Matrix to_matrix() const;

    const std::shared_ptr<detail::Node>& node() const { return node_; }
    explicit DiffArray(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::Node> node_;
};

/// Define-by-run record of differentiable operations.
///
/// Constructing a Tape makes it the recording target for the current thread
/// until it is destroyed; tapes nest. Operations executed while no tape is
/// active, or whose inputs do not require gradients, record nothing.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Propagates d(loss)/d(node) to every reachable node, accumulating into
    /// leaf gradients. The loss must be a single-element array recorded on
    /// this tape. A tape may be traversed once; call reset() to reuse it.
    void backward(const DiffArray& loss);

    void reset();

    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    void record(std::shared_ptr<detail::Node> node);

    static Tape* current();

private:
    std::vector<std::shared_ptr<detail::Node>> nodes_;
    bool consumed_ = false;
    Tape* previous_ = nullptr;
};

/// Add/multiply/other tallies for one counted region.
struct OpCount {
    std::uint64_t adds = 0;
    std::uint64_t mults = 0;
    std::uint64_t divs = 0;
    std::uint64_t exps = 0;

    std::uint64_t total() const { return adds + mults + divs + exps; }
    friend bool operator==(const OpCount&, const OpCount&) = default;
};

/// Enables arithmetic counting in every array operation on this thread for
/// the lifetime of the object.
class OpCounter {
public:
    OpCounter();
    ~OpCounter();
    OpCounter(const OpCounter&) = delete;
    OpCounter& operator=(const OpCounter&) = delete;

    const OpCount& count() const { return count_; }

    static void add(std::uint64_t adds, std::uint64_t mults, std::uint64_t divs = 0, std::uint64_t exps = 0);

private:
    OpCount count_;
    OpCounter* previous_ = nullptr;
};

} // namespace ister::ad
