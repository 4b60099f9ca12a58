#pragma once

#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "segtrans/rng.hpp"
#include "segtrans/tensor.hpp"

namespace segtrans {

using NodeId = int;

// Reverse-mode autodiff tape. Primitives record their backward as a closure;
// backward(loss) walks the recorded nodes once in reverse order and
// accumulates parameter gradients into Parameter::grad.
//
// Node storage is a deque: references returned by value() stay valid while
// further nodes are recorded.
//
// A Graph is built for one forward pass (one sentence, or one decoding
// session) and is single-threaded. Parameter tensors are read-shared:
// independent graphs over the same parameters may run in parallel as long as
// nobody is updating them.
class Graph {
 public:
  enum class Mode { eval, train };
  // f32 rounds every primitive's result to single precision (storage stays
  // 64-bit); f64 is the default so finite-difference checks are meaningful.
  enum class Precision { f64, f32 };

  explicit Graph(Mode mode = Mode::eval, Rng* rng = nullptr,
                 Precision precision = Precision::f64)
      : mode_(mode), rng_(rng), precision_(precision) {}

  bool training() const { return mode_ == Mode::train; }
  size_t size() const { return nodes_.size(); }

  // Leaves.
  NodeId param(Parameter& p);    // view over the parameter's storage
  NodeId constant(Tensor t);

  // Primitives. Shapes are validated; mismatches throw with the primitive
  // name and the offending shapes.
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId add_rowwise(NodeId m, NodeId v);
  NodeId scale(NodeId a, double c);
  NodeId mul(NodeId a, NodeId b);
  NodeId one_minus(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId concat(const std::vector<NodeId>& xs);
  NodeId slice(NodeId a, int begin, int end);
  NodeId reshape(NodeId a, std::vector<int> shape);
  NodeId embedding_lookup(NodeId table, int row);
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias, double eps = 1e-6);
  // Bernoulli(1-p) mask scaled by 1/(1-p) at train time; identity at eval.
  NodeId dropout(NodeId x, double p);
  // Zeroes the whole tensor with probability p at train time (entire-token
  // source dropout, no rescaling); identity at eval or when kept.
  NodeId token_dropout(NodeId x, double p);
  NodeId softmax(NodeId x);
  NodeId log_softmax(NodeId x);
  // -weight * ((1-eps) * logp[target] + eps/V * sum(logp)); scalar.
  NodeId weighted_nll(NodeId logp, int target, double weight, double label_smoothing = 0.0);
  NodeId dot(NodeId a, NodeId b);

  const Tensor& value(NodeId id) const;

  // Reverse sweep from a scalar loss. Accumulates into Parameter::grad;
  // parameters not reachable from the loss are left untouched.
  void backward(NodeId loss);

 private:
  struct Node {
    Tensor value;                    // owned unless view != nullptr
    const Tensor* view = nullptr;    // parameter-backed leaves
    Tensor grad;                     // allocated on first touch in backward
    Parameter* parameter = nullptr;  // set for param leaves
    // Receives this node's output gradient; adds into the inputs' grads.
    std::function<void(Graph&, const Tensor&)> backward_fn;

    const Tensor& val() const { return view ? *view : value; }
  };

  NodeId push(Node n);
  Tensor& grad_buf(NodeId id);  // lazily allocated, zero-filled
  bool grad_touched(NodeId id) const { return !nodes_[static_cast<size_t>(id)].grad.data.empty(); }
  void round_precision(Tensor& t) const;

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, NodeId> param_nodes_;
  Mode mode_;
  Rng* rng_;
  Precision precision_;
};

}  // namespace segtrans
