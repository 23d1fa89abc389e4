#ifndef UNIREG_AUTODIFF_HPP_
#define UNIREG_AUTODIFF_HPP_

// Define-by-run reverse-mode differentiation. A Tape is rebuilt for every
// training step; ops append nodes in evaluation order so that reverse index
// order is a valid reverse topological order.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unireg/tensor.hpp"

namespace unireg::ad {

// Persistent trainable value that outlives tapes. Gradients from backward
// passes accumulate into `grad` until the owner resets it.
struct Parameter {
  Tensor value;
  Tensor grad;

  void zero_grad() { grad = Tensor(); }
  bool has_grad() const { return !grad.is_null(); }
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  double item() const { return value().item(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Local backward rule: receives the gradient flowing into the node's
  // output and pushes contributions into inputs via accumulate().
  using BackwardFn = std::function<void(Tape&, const Tensor&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var leaf(Tensor value, bool requires_grad = true);
  // Binds a persistent parameter. When trainable, backward adds into
  // param.grad; otherwise the parameter acts as a constant.
  Var param(Parameter& param, bool trainable = true);

  // Records an op output. `backward` is kept only if some input requires
  // a gradient. `op` names the op in error messages.
  Var record(const char* op, Tensor value, std::vector<std::size_t> inputs,
             BackwardFn backward);

  // Propagates d(loss)/d(node) from a single-element loss to every
  // gradient-requiring leaf. Leaf gradients accumulate across calls.
  void backward(Var loss);

  // Accumulated gradient of a leaf created by leaf(); zeros when none.
  Tensor grad(Var leaf) const;
  void zero_grad();

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Adds `g` to the pending gradient of node `id` during backward.
  void accumulate(std::size_t id, const Tensor& g);
  void accumulate(std::size_t id, Tensor&& g);

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    Tensor leaf_grad;
  };

  std::vector<Node> nodes_;
  std::vector<Tensor> pending_;
  bool in_backward_ = false;
};

// Matrix product of [m x k] and [k x n].
Var matmul(Var a, Var b);
Var transpose(Var a);

// Elementwise binary ops: equal shapes, or one side a single-element tensor.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var neg(Var a);
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
// Raises DomainError for non-positive inputs.
Var log(Var a);
Var exp(Var a);
Var square(Var a);
Var sqrt(Var a);
// max(a, floor); gradient passes only where a > floor.
Var clamp_min(Var a, double floor);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

// Reductions. Without an axis the result is a rank-0 scalar; with an axis
// the reduced dimension is kept with size 1. max routes the gradient to the
// first maximal element.
Var sum(Var a);
Var mean(Var a);
Var max(Var a);
Var sum(Var a, std::size_t axis);
Var mean(Var a, std::size_t axis);
Var max(Var a, std::size_t axis);

// x[b x n] + bias broadcast over rows; bias is [1 x n] or [n].
Var add_bias(Var x, Var bias);
// Row-wise log-softmax with max subtraction.
Var log_softmax(Var logits);
// out[i][j] = |a_i - b_j|^2 for a[m x d], b[n x d].
Var pairwise_sq_dist(Var a, Var b);
// Rows [begin, end) of a rank-2 tensor.
Var rows(Var a, std::size_t begin, std::size_t end);
Var concat_rows(const std::vector<Var>& parts);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator*(Var a, double s) { return scale(a, s); }
inline Var operator+(Var a, double s) { return add_scalar(a, s); }
inline Var operator-(double s, Var a) { return add_scalar(neg(a), s); }

}  // namespace unireg::ad

#endif  // UNIREG_AUTODIFF_HPP_
