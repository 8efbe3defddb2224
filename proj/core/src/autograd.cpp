#include "mcg/autograd.hpp"

#include <unordered_set>

#include "mcg/error.hpp"

namespace mcg::ad {

Tensor& Node::grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor(value.shape());
    return grad;
}

void Node::accumulate(const Tensor& g) {
    Tensor& buf = grad_buffer();
    require_same_shape(buf, g, "gradient accumulation");
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

Tensor Var::grad() const {
    if (node_->grad.shape() == node_->value.shape()) return node_->grad;
    return Tensor(node_->value.shape());
}

Var constant(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    return Var(std::move(node));
}

Var leaf(Tensor value) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    node->requires_grad = true;
    return Var(std::move(node));
}

Var make_op(Tensor value, std::vector<Var> parents, BackwardFn backward) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    bool any = false;
    for (const Var& p : parents) any = any || p.requires_grad();
    if (any) {
        node->requires_grad = true;
        node->backward = std::move(backward);
        node->parents.reserve(parents.size());
        for (Var& p : parents) node->parents.push_back(p.node());
    }
    return Var(std::move(node));
}

void backward(const Var& root, double seed) {
    if (!root.defined() || root.value().size() != 1) {
        throw ValidationError("backward() needs a scalar root");
    }
    if (!root.requires_grad()) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
    visited.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node()->grad_buffer()[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && node->grad.shape() == node->value.shape()) node->backward(node->grad);
    }
}

}  // namespace mcg::ad
