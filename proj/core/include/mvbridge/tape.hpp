#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvbridge/tensor.hpp"

namespace mvbridge {

// Reverse-mode autodiff over an append-only tape. Nodes are recorded in
// topological order by construction (an op can only reference ids that
// already exist), so the backward pass is a single reverse sweep that
// touches each node once.
//
// Primitive set: matmul (incl. leading-batch), add, mul (elementwise with
// trailing-shape broadcast on the rhs), scale, sum, mean, relu, gelu,
// softmax over the last axis, layer-normalize over the last axis, reshape,
// concat along an axis, strided slice, transpose. Everything the velocity
// network and the image losses need composes from these.
class Tape {
 public:
  using Id = std::int32_t;

  // Leaves. Parameters are leaves with requires_grad=true; inputs and
  // constants are leaves with requires_grad=false.
  Id leaf(Tensor value, bool requires_grad = false);
  Id constant(Tensor value) { return leaf(std::move(value), false); }

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double factor);
  Id sum(Id a);
  Id mean(Id a);
  Id relu(Id a);
  Id gelu(Id a);
  Id softmax(Id a);
  Id layer_norm(Id a);
  Id reshape(Id a, std::vector<std::int64_t> shape);
  Id concat(const std::vector<Id>& parts, int axis);
  Id slice(Id a, int axis, std::int64_t start, std::int64_t stop, std::int64_t step = 1);
  Id transpose(Id a, std::vector<int> perm);

  // Composites (expand to primitive nodes).
  Id sub(Id a, Id b) { return add(a, scale(b, -1.0)); }
  Id abs(Id a) { return add(relu(a), relu(scale(a, -1.0))); }
  Id square(Id a) { return mul(a, a); }
  Id mse(Id pred, Id target) { return mean(square(sub(pred, target))); }

  const Tensor& value(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t node_count() const { return nodes_.size(); }

  // Gradients of a scalar loss w.r.t. the given leaves. A leaf the loss
  // does not depend on gets a zero gradient of matching shape.
  std::vector<Tensor> backward(Id loss, std::span<const Id> wrt);

 private:
  enum class Op {
    kLeaf,
    kMatMul,
    kAdd,
    kMul,
    kScale,
    kSum,
    kMean,
    kRelu,
    kGelu,
    kSoftmax,
    kLayerNorm,
    kReshape,
    kConcat,
    kSlice,
    kTranspose,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::vector<Id> inputs;
    Tensor value;
    bool needs_grad = false;
    // Saved activations / op parameters for backward.
    std::vector<std::int64_t> aux;   // axis, perm, slice params, ...
    double scalar = 0.0;             // scale factor, ln epsilon
    Tensor saved;                    // softmax output copy-free ref not possible; inv_std etc.
  };

  Id push(Node node);
  const Tensor& val(Id id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool needs(Id id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }

  void backward_node(std::size_t idx, const Tensor& grad_out, std::vector<Tensor>& grads,
                     std::vector<bool>& grad_set);

  std::vector<Node> nodes_;
};

}  // namespace mvbridge
