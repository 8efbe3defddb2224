#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mcg/tensor.hpp"

namespace mcg::ad {

struct Node;

/// Receives the gradient flowing into a node and pushes it into the parents.
using BackwardFn = std::function<void(const Tensor& grad_out)>;

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    BackwardFn backward;

    /// Lazily allocates the gradient buffer (zeros, same shape as value).
    Tensor& grad_buffer();
    void accumulate(const Tensor& g);
};

/// Handle to a node in a dynamically recorded computation graph.
///
/// Graph memory lives as long as some Var refers to the output node.
/// Operations only record a backward closure when at least one input
/// requires a gradient, so inference through the same code path builds no tape.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    [[nodiscard]] const Tensor& value() const { return node_->value; }
    [[nodiscard]] const Shape& shape() const { return node_->value.shape(); }
    [[nodiscard]] bool requires_grad() const { return node_ && node_->requires_grad; }
    [[nodiscard]] bool defined() const noexcept { return static_cast<bool>(node_); }

    /// Gradient accumulated by backward(); zeros if nothing flowed here.
    [[nodiscard]] Tensor grad() const;

    [[nodiscard]] const std::shared_ptr<Node>& node() const noexcept { return node_; }

private:
    std::shared_ptr<Node> node_;
};

Var constant(Tensor value);
Var leaf(Tensor value);

/// Builds an op node. `backward` is dropped when no parent requires a gradient.
Var make_op(Tensor value, std::vector<Var> parents, BackwardFn backward);

/// Reverse sweep from a scalar (single-element) root.
void backward(const Var& root, double seed = 1.0);

}  // namespace mcg::ad
