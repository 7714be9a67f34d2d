#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gatlab/matrix.hpp"

namespace gatlab {

class Tape;

namespace detail {

struct TensorNode {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    int tape_id = -1;

    // Lazily sized gradient accumulator, zero-initialized to value's shape.
    Matrix& ensure_grad() {
        if (!has_grad) {
            grad = Matrix(value.rows(), value.cols());
            has_grad = true;
        }
        return grad;
    }
};

}  // namespace detail

// Handle to one node of the active tape. Copies alias the same node.
class Tensor {
public:
    Tensor() = default;

    int rows() const { return node_->value.rows(); }
    int cols() const { return node_->value.cols(); }
    const Matrix& value() const { return node_->value; }
    bool requires_grad() const { return node_->requires_grad; }
    int tape_id() const { return node_->tape_id; }

    // Gradient accumulated by the last backward pass.
    const Matrix& grad() const {
        if (!node_->has_grad) {
            throw ContractError("Tensor::grad: no gradient present (id " +
                                std::to_string(node_->tape_id) + ")");
        }
        return node_->grad;
    }

    double item() const {
        if (rows() != 1 || cols() != 1) {
            throw ContractError("Tensor::item on non-scalar " + value().shape_str());
        }
        return value()(0, 0);
    }

    Tape* tape() const { return tape_; }
    const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

private:
    friend class Tape;
    Tensor(std::shared_ptr<detail::TensorNode> n, Tape* t) : node_(std::move(n)), tape_(t) {}

    std::shared_ptr<detail::TensorNode> node_;
    Tape* tape_ = nullptr;
};

// Define-by-run record of forward operations. Rebuilt per forward pass;
// backward replays the recorded steps exactly once in reverse order.
class Tape {
public:
    Tensor leaf(Matrix value, bool requires_grad = false);
    Tensor leaf(int rows, int cols, std::initializer_list<double> init,
                bool requires_grad = false) {
        return leaf(Matrix(rows, cols, init), requires_grad);
    }

    // Seeds d(loss)/d(loss) = 1 and propagates to every leaf that requires grad.
    void backward(const Tensor& loss);

    std::size_t num_ops() const { return steps_.size(); }

    // Used by op implementations.
    Tensor make(Matrix value, bool requires_grad);
    void record(std::function<void()> step) { steps_.push_back(std::move(step)); }

private:
    std::vector<std::function<void()>> steps_;
    int next_id_ = 0;
};

// --- forward ops -----------------------------------------------------------
// Binary elementwise ops broadcast along either axis (dim must match or be 1).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor elu(const Tensor& x);
Tensor transpose(const Tensor& x);
Tensor reshape(const Tensor& x, int rows, int cols);
Tensor sum(const Tensor& x);

// Columnwise concatenation: [m x p] || [m x q] -> [m x (p+q)].
Tensor concat_rows(const Tensor& a, const Tensor& b);
// Vertical stack: [p x d] over [q x d] -> [(p+q) x d].
Tensor stack_rows(const Tensor& a, const Tensor& b);

Tensor gather_rows(const Tensor& x, std::span<const int> ids);
// Sums row i of x into row dst[i] of an [num_rows x d] output.
Tensor scatter_add_rows(const Tensor& x, std::span<const int> dst, int num_rows);

// Softmax within each segment of an [E x 1] score vector. Every segment id
// in [0, num_segments) must be hit by at least one row.
Tensor segment_softmax(const Tensor& scores, std::span<const int> segments,
                       int num_segments);

// Mean negative log-likelihood of softmax(logits) rows at the given labels.
Tensor softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// --- gradient checking ------------------------------------------------------

using TensorFn = std::function<Tensor(Tape&, const Tensor&)>;

// Max over entries of |analytic - central difference| / max(1, |analytic|).
double grad_check(const TensorFn& f, const Matrix& x, double eps = 1e-5);

}  // namespace gatlab
