#ifndef CLARITY_AUTODIFF_HPP
#define CLARITY_AUTODIFF_HPP

#include <functional>
#include <memory>
#include <vector>

#include "clarity/tensor.hpp"

namespace clarity {

// Reverse-mode automatic differentiation over a define-by-run graph.
// Nodes whose inputs all have requires_grad == false carry no closure, so
// frozen networks (teachers, the perceptual extractor) evaluate without
// building backward state.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor val;
  Tensor grad;  // allocated on demand during backward()
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> back;  // reads this->grad, accumulates into parents

  Tensor& ensure_grad();
};

Var make_leaf(Tensor value, bool requires_grad);
Var make_const(Tensor value);

// Backpropagates from a scalar root; accumulates into leaf grads.
void backward(const Var& root);
void zero_grad(const std::vector<Var>& vars);

enum class PadMode { Zero, Reflect };

namespace ops {

// elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var sadd(const Var& a, double c);
Var smul(const Var& a, double c);
Var silu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var clamp(const Var& x, double lo, double hi);
Var vsqrt(const Var& x);

// reductions
Var mean_all(const Var& x);
Var mean_abs_diff(const Var& a, const Var& b);
Var mean_sq_gap(const Var& x, double target);  // mean((x - target)^2)

// shape / gather
Var gap2d(const Var& x);              // (N,C,H,W) -> (N,C) global average pool
Var row(const Var& x, int i);         // (N,C) -> (C)
Var dot(const Var& u, const Var& v);  // (C),(C) -> {1}
Var stack_scalars(const std::vector<Var>& xs);  // M scalars -> (M)
Var logsumexp(const Var& x);          // (M) -> {1}

// network layers
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad,
           PadMode mode);
Var upsample2x(const Var& x);
Var instance_norm(const Var& x, const Var& gamma, const Var& beta,
                  double eps = 1e-5);

}  // namespace ops

}  // namespace clarity

#endif
