#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "dckd/matrix.hpp"

namespace dckd {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Gradient in flight during one backward pass, keyed by graph node.
using GradFlows = std::unordered_map<Node*, Matrix>;

// One vertex of the computation graph: a value, the accumulated gradient and
// the recipe for pushing incoming gradient flow to the node's parents.
struct Node {
    Matrix value;
    Matrix grad;  // empty until a backward pass materialises it
    bool requires_grad = false;
    bool leaf = true;
    const char* op = "leaf";
    std::vector<NodePtr> parents;
    std::function<void(const Matrix& flow, GradFlows& flows)> backprop;
};

// Value-semantics handle to a graph node; copies alias the same node.
class Tensor {
public:
    Tensor() = default;

    static Tensor leaf(Matrix value, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const noexcept { return node_ != nullptr; }
    const Matrix& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const;

    bool requires_grad() const { return node()->requires_grad; }
    bool has_grad() const { return !node()->grad.empty(); }
    // Accumulated gradient; throws StateError when none has been materialised.
    const Matrix& grad() const;
    // Drops the accumulated gradient so the next backward starts fresh.
    void zero_grad();

    // Constant copy of the value, cut loose from the graph.
    Tensor detached() const;

    // Mutable value access for leaves (optimizer updates, finite differences).
    Matrix& mutable_value();
    void set_requires_grad(bool requires_grad);

    const char* op_name() const { return node()->op; }
    Node* node() const;
    const NodePtr& handle() const;

private:
    explicit Tensor(NodePtr node) : node_(std::move(node)) {}
    NodePtr node_;

    friend Tensor make_op(const char* op, Matrix value, std::vector<NodePtr> parents,
                          std::function<void(const Matrix&, GradFlows&)> backprop);
};

// ---- graph ops ----

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add_bias_row(const Tensor& x, const Tensor& bias);
Tensor relu(const Tensor& x);
// Elementwise log(x + 1e-12); the offset keeps zero probabilities finite.
Tensor log_eps(const Tensor& x);
// Rows divided by their sums.
Tensor normalize_rows(const Tensor& x);
Tensor sum_all(const Tensor& x);
Tensor softmax_rows(const Tensor& logits, double temperature);
Tensor log_softmax_rows(const Tensor& logits, double temperature);
// Cellwise maximum over a non-empty set of same-shape tensors. Gradient routes
// to the first member attaining each maximum (ties break to the lowest index).
Tensor elementwise_max_set(const std::vector<Tensor>& members);

// Reverse-mode sweep from a 1x1 root. Gradients accumulate additively into
// every reachable requires_grad node; repeated calls keep accumulating until
// zero_grad is invoked.
void backward(const Tensor& root);

void zero_grads(const std::vector<Tensor>& params);

// Central-difference check of autodiff gradients. loss_fn must rebuild its
// graph from the current parameter values on every call and be deterministic.
// Returns the worst relative error |a - n| / max(1e-8, |a| + |n|).
double grad_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& params,
                  double eps);

// SGD with classic momentum and L2 weight decay folded into the gradient:
//   v <- momentum * v + (grad + weight_decay * theta);  theta <- theta - lr * v
// Velocity persists across steps, keyed by parameter node.
class SgdOptimizer {
public:
    SgdOptimizer(double lr, double momentum, double weight_decay);

    void set_lr(double lr);
    double lr() const noexcept { return lr_; }

    void step(const std::vector<Tensor>& params);

private:
    double lr_;
    double momentum_;
    double weight_decay_;
    std::unordered_map<Node*, Matrix> velocity_;
};

}  // namespace dckd
