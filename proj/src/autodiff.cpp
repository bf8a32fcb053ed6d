#include "dckd/autodiff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "dckd/errors.hpp"

namespace dckd {

namespace {

constexpr double kLogEps = 1e-12;

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) {
        throw std::invalid_argument(std::string(op) + ": tensor is not defined");
    }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (!a.value().same_shape(b.value())) {
        throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    }
}

void require_finite(const char* op, const Tensor& t) {
    if (!t.value().all_finite()) {
        throw InvalidInput(std::string(op) + ": input contains NaN or Inf");
    }
}

void add_flow(GradFlows& flows, const NodePtr& parent, const Matrix& contribution) {
    if (!parent->requires_grad) return;
    auto it = flows.find(parent.get());
    if (it == flows.end()) {
        flows.emplace(parent.get(), contribution);
    } else {
        it->second += contribution;
    }
}

// flow * b^T without forming the transpose.
Matrix matmul_nt(const Matrix& flow, const Matrix& b) {
    Matrix out(flow.rows(), b.rows());
    for (std::size_t i = 0; i < flow.rows(); ++i) {
        for (std::size_t k = 0; k < b.rows(); ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < flow.cols(); ++j) acc += flow(i, j) * b(k, j);
            out(i, k) = acc;
        }
    }
    return out;
}

// a^T * flow without forming the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& flow) {
    Matrix out(a.cols(), flow.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < flow.cols(); ++j) out(k, j) += aik * flow(i, j);
        }
    }
    return out;
}

}  // namespace

// ---- Tensor ----

Tensor Tensor::leaf(Matrix value, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return leaf(Matrix(1, 1, value)); }

Node* Tensor::node() const {
    if (!node_) throw StateError("tensor is not defined");
    return node_.get();
}

const NodePtr& Tensor::handle() const {
    if (!node_) throw StateError("tensor is not defined");
    return node_;
}

const Matrix& Tensor::value() const { return node()->value; }

double Tensor::item() const {
    const Matrix& v = value();
    if (v.rows() != 1 || v.cols() != 1) {
        throw ShapeError("item: tensor is " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()) + ", expected 1x1");
    }
    return v(0, 0);
}

const Matrix& Tensor::grad() const {
    Node* n = node();
    if (n->grad.empty()) throw StateError("gradient has not been materialised");
    return n->grad;
}

void Tensor::zero_grad() { node()->grad = Matrix(); }

Tensor Tensor::detached() const { return leaf(value(), false); }

Matrix& Tensor::mutable_value() {
    Node* n = node();
    if (!n->leaf) throw StateError("only leaf values may be mutated");
    return n->value;
}

void Tensor::set_requires_grad(bool requires_grad) {
    Node* n = node();
    if (!n->leaf) throw StateError("requires_grad is only adjustable on leaves");
    n->requires_grad = requires_grad;
}

// ---- op construction ----

// Builds a graph node when any parent tracks gradients, otherwise a plain
// constant, which prunes frozen subgraphs (e.g. the teacher forward) for free.
Tensor make_op(const char* op, Matrix value, std::vector<NodePtr> parents,
               std::function<void(const Matrix&, GradFlows&)> backprop) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->op = op;
    bool needs_grad = false;
    for (const NodePtr& p : parents) {
        if (p->requires_grad) {
            needs_grad = true;
            break;
        }
    }
    if (needs_grad) {
        node->requires_grad = true;
        node->leaf = false;
        node->parents = std::move(parents);
        node->backprop = std::move(backprop);
    }
    return Tensor(std::move(node));
}

// ---- elementwise and linear ops ----

Tensor add(const Tensor& a, const Tensor& b) {
    require_defined(a, "add");
    require_defined(b, "add");
    require_same_shape("add", a, b);
    Matrix out = a.value();
    out += b.value();
    NodePtr pa = a.handle(), pb = b.handle();
    return make_op("add", std::move(out), {pa, pb}, [pa, pb](const Matrix& flow, GradFlows& flows) {
        add_flow(flows, pa, flow);
        add_flow(flows, pb, flow);
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_defined(a, "sub");
    require_defined(b, "sub");
    require_same_shape("sub", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.value().data()[i];
    NodePtr pa = a.handle(), pb = b.handle();
    return make_op("sub", std::move(out), {pa, pb}, [pa, pb](const Matrix& flow, GradFlows& flows) {
        add_flow(flows, pa, flow);
        Matrix neg = flow;
        for (std::size_t i = 0; i < neg.size(); ++i) neg.data()[i] = -neg.data()[i];
        add_flow(flows, pb, neg);
    });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_defined(a, "hadamard");
    require_defined(b, "hadamard");
    require_same_shape("hadamard", a, b);
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
    NodePtr pa = a.handle(), pb = b.handle();
    return make_op("hadamard", std::move(out), {pa, pb},
                   [pa, pb](const Matrix& flow, GradFlows& flows) {
                       Matrix ga = flow;
                       for (std::size_t i = 0; i < ga.size(); ++i) {
                           ga.data()[i] *= pb->value.data()[i];
                       }
                       add_flow(flows, pa, ga);
                       Matrix gb = flow;
                       for (std::size_t i = 0; i < gb.size(); ++i) {
                           gb.data()[i] *= pa->value.data()[i];
                       }
                       add_flow(flows, pb, gb);
                   });
}

Tensor scale(const Tensor& a, double factor) {
    require_defined(a, "scale");
    if (!std::isfinite(factor)) throw std::invalid_argument("scale: factor must be finite");
    Matrix out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= factor;
    NodePtr pa = a.handle();
    return make_op("scale", std::move(out), {pa},
                   [pa, factor](const Matrix& flow, GradFlows& flows) {
                       Matrix g = flow;
                       for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= factor;
                       add_flow(flows, pa, g);
                   });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    Matrix out = matmul(a.value(), b.value());
    NodePtr pa = a.handle(), pb = b.handle();
    return make_op("matmul", std::move(out), {pa, pb},
                   [pa, pb](const Matrix& flow, GradFlows& flows) {
                       add_flow(flows, pa, matmul_nt(flow, pb->value));
                       add_flow(flows, pb, matmul_tn(pa->value, flow));
                   });
}

Tensor add_bias_row(const Tensor& x, const Tensor& bias) {
    require_defined(x, "add_bias_row");
    require_defined(bias, "add_bias_row");
    Matrix out = add_bias_row(x.value(), bias.value());
    NodePtr px = x.handle(), pb = bias.handle();
    return make_op("add_bias_row", std::move(out), {px, pb},
                   [px, pb](const Matrix& flow, GradFlows& flows) {
                       add_flow(flows, px, flow);
                       Matrix gb(1, flow.cols());
                       for (std::size_t r = 0; r < flow.rows(); ++r) {
                           for (std::size_t c = 0; c < flow.cols(); ++c) gb(0, c) += flow(r, c);
                       }
                       add_flow(flows, pb, gb);
                   });
}

Tensor relu(const Tensor& x) {
    require_defined(x, "relu");
    Matrix out = relu(x.value());
    NodePtr px = x.handle();
    return make_op("relu", std::move(out), {px}, [px](const Matrix& flow, GradFlows& flows) {
        Matrix g = flow;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (px->value.data()[i] <= 0.0) g.data()[i] = 0.0;
        }
        add_flow(flows, px, g);
    });
}

Tensor log_eps(const Tensor& x) {
    require_defined(x, "log_eps");
    Matrix out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::log(out.data()[i] + kLogEps);
    NodePtr px = x.handle();
    return make_op("log_eps", std::move(out), {px}, [px](const Matrix& flow, GradFlows& flows) {
        Matrix g = flow;
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.data()[i] /= px->value.data()[i] + kLogEps;
        }
        add_flow(flows, px, g);
    });
}

Tensor normalize_rows(const Tensor& x) {
    require_defined(x, "normalize_rows");
    const Matrix& v = x.value();
    Matrix out(v.rows(), v.cols());
    for (std::size_t r = 0; r < v.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < v.cols(); ++c) sum += v(r, c);
        if (!(sum > 0.0)) {
            throw InvalidInput("normalize_rows: row " + std::to_string(r) +
                               " has non-positive sum");
        }
        for (std::size_t c = 0; c < v.cols(); ++c) out(r, c) = v(r, c) / sum;
    }
    NodePtr px = x.handle();
    Matrix normalized = out;
    return make_op("normalize_rows", std::move(out), {px},
                   [px, normalized](const Matrix& flow, GradFlows& flows) {
                       Matrix g(flow.rows(), flow.cols());
                       for (std::size_t r = 0; r < flow.rows(); ++r) {
                           double sum = 0.0, dot = 0.0;
                           for (std::size_t c = 0; c < flow.cols(); ++c) {
                               sum += px->value(r, c);
                               dot += flow(r, c) * normalized(r, c);
                           }
                           for (std::size_t c = 0; c < flow.cols(); ++c) {
                               g(r, c) = (flow(r, c) - dot) / sum;
                           }
                       }
                       add_flow(flows, px, g);
                   });
}

Tensor sum_all(const Tensor& x) {
    require_defined(x, "sum_all");
    double total = 0.0;
    for (std::size_t i = 0; i < x.value().size(); ++i) total += x.value().data()[i];
    NodePtr px = x.handle();
    const std::size_t rows = x.rows(), cols = x.cols();
    return make_op("sum_all", Matrix(1, 1, total), {px},
                   [px, rows, cols](const Matrix& flow, GradFlows& flows) {
                       add_flow(flows, px, Matrix(rows, cols, flow(0, 0)));
                   });
}

Tensor softmax_rows(const Tensor& logits, double temperature) {
    require_defined(logits, "softmax_rows");
    require_finite("softmax_rows", logits);
    Matrix out = softmax_rows(logits.value(), temperature);
    NodePtr px = logits.handle();
    Matrix probs = out;
    return make_op("softmax_rows", std::move(out), {px},
                   [px, probs, temperature](const Matrix& flow, GradFlows& flows) {
                       Matrix g(flow.rows(), flow.cols());
                       for (std::size_t r = 0; r < flow.rows(); ++r) {
                           double dot = 0.0;
                           for (std::size_t c = 0; c < flow.cols(); ++c) {
                               dot += flow(r, c) * probs(r, c);
                           }
                           for (std::size_t c = 0; c < flow.cols(); ++c) {
                               g(r, c) = probs(r, c) * (flow(r, c) - dot) / temperature;
                           }
                       }
                       add_flow(flows, px, g);
                   });
}

Tensor log_softmax_rows(const Tensor& logits, double temperature) {
    require_defined(logits, "log_softmax_rows");
    require_finite("log_softmax_rows", logits);
    Matrix out = log_softmax_rows(logits.value(), temperature);
    NodePtr px = logits.handle();
    Matrix probs(out.rows(), out.cols());
    for (std::size_t i = 0; i < out.size(); ++i) probs.data()[i] = std::exp(out.data()[i]);
    return make_op("log_softmax_rows", std::move(out), {px},
                   [px, probs, temperature](const Matrix& flow, GradFlows& flows) {
                       Matrix g(flow.rows(), flow.cols());
                       for (std::size_t r = 0; r < flow.rows(); ++r) {
                           double row_sum = 0.0;
                           for (std::size_t c = 0; c < flow.cols(); ++c) row_sum += flow(r, c);
                           for (std::size_t c = 0; c < flow.cols(); ++c) {
                               g(r, c) = (flow(r, c) - probs(r, c) * row_sum) / temperature;
                           }
                       }
                       add_flow(flows, px, g);
                   });
}

Tensor elementwise_max_set(const std::vector<Tensor>& members) {
    if (members.empty()) {
        throw std::invalid_argument("elementwise_max_set: member set is empty");
    }
    for (const Tensor& m : members) require_defined(m, "elementwise_max_set");
    for (const Tensor& m : members) require_same_shape("elementwise_max_set", members.front(), m);

    const std::size_t rows = members.front().rows(), cols = members.front().cols();
    Matrix out = members.front().value();
    std::vector<std::size_t> winner(rows * cols, 0);
    for (std::size_t i = 1; i < members.size(); ++i) {
        const Matrix& v = members[i].value();
        for (std::size_t j = 0; j < out.size(); ++j) {
            if (v.data()[j] > out.data()[j]) {
                out.data()[j] = v.data()[j];
                winner[j] = i;
            }
        }
    }
    std::vector<NodePtr> parents;
    parents.reserve(members.size());
    for (const Tensor& m : members) parents.push_back(m.handle());
    auto backprop = [parents, winner, rows, cols](const Matrix& flow, GradFlows& flows) {
        for (std::size_t i = 0; i < parents.size(); ++i) {
            if (!parents[i]->requires_grad) continue;
            Matrix g(rows, cols);
            for (std::size_t j = 0; j < flow.size(); ++j) {
                if (winner[j] == i) g.data()[j] = flow.data()[j];
            }
            add_flow(flows, parents[i], g);
        }
    };
    return make_op("elementwise_max_set", std::move(out), std::move(parents), std::move(backprop));
}

// ---- backward ----

void backward(const Tensor& root) {
    require_defined(root, "backward");
    if (root.rows() != 1 || root.cols() != 1) {
        throw std::invalid_argument("backward: root must be a 1x1 scalar, got " +
                                    std::to_string(root.rows()) + "x" +
                                    std::to_string(root.cols()));
    }
    Node* root_node = root.node();
    if (!root_node->requires_grad) return;

    // Depth-first postorder over the requires_grad subgraph. The visit-state
    // map doubles as the acyclicity check.
    enum : int { kOpen = 1, kDone = 2 };
    std::unordered_map<Node*, int> state;
    std::vector<Node*> postorder;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack{{root_node, 0}};
    state[root_node] = kOpen;
    while (!stack.empty()) {
        Frame& frame = stack.back();
        if (frame.next_parent < frame.node->parents.size()) {
            Node* parent = frame.node->parents[frame.next_parent++].get();
            if (!parent->requires_grad) continue;
            auto it = state.find(parent);
            if (it == state.end()) {
                state[parent] = kOpen;
                stack.push_back({parent, 0});
            } else if (it->second == kOpen) {
                throw CheckFailed("backward: computation graph contains a cycle");
            }
        } else {
            state[frame.node] = kDone;
            postorder.push_back(frame.node);
            stack.pop_back();
        }
    }

    GradFlows flows;
    flows.emplace(root_node, Matrix(1, 1, 1.0));
    // Reverse postorder puts every consumer before the nodes it feeds from, so
    // each node's flow is complete by the time it is propagated and banked.
    for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
        Node* node = *it;
        auto flow_it = flows.find(node);
        if (flow_it == flows.end()) continue;
        Matrix flow = std::move(flow_it->second);
        flows.erase(flow_it);
        if (node->backprop) node->backprop(flow, flows);
        if (node->grad.empty()) {
            node->grad = std::move(flow);
        } else {
            node->grad += flow;
        }
    }
}

void zero_grads(const std::vector<Tensor>& params) {
    for (const Tensor& p : params) {
        Node* n = p.node();
        n->grad = Matrix();
    }
}

// ---- gradient checking ----

double grad_check(const std::function<Tensor()>& loss_fn, const std::vector<Tensor>& params,
                  double eps) {
    if (!(eps > 0.0) || eps > 1e-2) {
        throw std::invalid_argument("grad_check: eps must be in (0, 1e-2], got " +
                                    std::to_string(eps));
    }
    if (!loss_fn) throw std::invalid_argument("grad_check: loss_fn is empty");
    for (const Tensor& p : params) {
        if (!p.defined() || !p.node()->leaf) {
            throw std::invalid_argument("grad_check: params must be defined leaves");
        }
    }

    const double probe_a = loss_fn().item();
    const double probe_b = loss_fn().item();
    if (probe_a != probe_b) {
        throw CheckFailed("grad_check: loss_fn is not deterministic (" +
                          std::to_string(probe_a) + " vs " + std::to_string(probe_b) + ")");
    }

    zero_grads(params);
    backward(loss_fn());
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) {
        analytic.push_back(p.has_grad() ? p.grad() : Matrix(p.rows(), p.cols()));
    }

    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor param = params[i];
        Matrix& values = param.mutable_value();
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double original = values.data()[j];
            values.data()[j] = original + eps;
            const double plus = loss_fn().item();
            values.data()[j] = original - eps;
            const double minus = loss_fn().item();
            values.data()[j] = original;
            const double numeric = (plus - minus) / (2.0 * eps);
            const double exact = analytic[i].data()[j];
            const double rel =
                std::abs(exact - numeric) / std::max(1e-8, std::abs(exact) + std::abs(numeric));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

// ---- optimizer ----

SgdOptimizer::SgdOptimizer(double lr, double momentum, double weight_decay)
    : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
    if (!(lr >= 0.0)) throw std::invalid_argument("SgdOptimizer: lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw std::invalid_argument("SgdOptimizer: momentum must be in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) {
        throw std::invalid_argument("SgdOptimizer: weight_decay must be >= 0");
    }
}

void SgdOptimizer::set_lr(double lr) {
    if (!(lr >= 0.0)) throw std::invalid_argument("SgdOptimizer: lr must be >= 0");
    lr_ = lr;
}

void SgdOptimizer::step(const std::vector<Tensor>& params) {
    for (const Tensor& p : params) {
        Node* n = p.node();
        if (!n->leaf) throw std::invalid_argument("SgdOptimizer: params must be leaves");
        if (n->grad.empty()) {
            throw StateError("SgdOptimizer: parameter has no gradient; run backward first");
        }
        auto [it, inserted] = velocity_.try_emplace(n, Matrix(n->value.rows(), n->value.cols()));
        Matrix& v = it->second;
        for (std::size_t j = 0; j < n->value.size(); ++j) {
            const double g = n->grad.data()[j] + weight_decay_ * n->value.data()[j];
            v.data()[j] = momentum_ * v.data()[j] + g;
            n->value.data()[j] -= lr_ * v.data()[j];
        }
    }
}

}  // namespace dckd
