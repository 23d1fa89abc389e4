#include "unireg/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "unireg/error.hpp"

namespace unireg::ad {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t) {
  return MutMap(t.values().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " needs a rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

void add_into(Tensor& dst, const Tensor& src) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// Shape of a binary elementwise result, or DimensionError.
Shape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.numel() == 1) return a.shape();
  if (a.numel() == 1) return b.shape();
  throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()) +
                       " are not equal and neither is a scalar");
}

// Reduces a gradient back to the shape of a (possibly scalar-broadcast)
// operand.
Tensor unbroadcast(const Tensor& g, const Tensor& operand) {
  if (operand.shape() == g.shape()) return g;
  double total = 0.0;
  for (double v : g.values()) total += v;
  return Tensor(operand.shape(), total);
}

template <typename F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out(a.shape());
  auto src = a.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

template <typename F>
Tensor zip_values(const Tensor& a, const Tensor& b, const Shape& shape, F f) {
  Tensor out(shape);
  auto dst = out.values();
  const bool a_scalar = a.numel() == 1 && a.numel() != dst.size();
  const bool b_scalar = b.numel() == 1 && b.numel() != dst.size();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = f(a[a_scalar ? 0 : i], b[b_scalar ? 0 : i]);
  }
  return out;
}

// Unary op whose local derivative depends on the input x and output y.
template <typename Forward, typename Derivative>
Var unary(const char* op, Var a, Forward f, Derivative df) {
  Tensor out = map_values(a.value(), f);
  const std::size_t in = a.id();
  Tape& tape = a.tape();
  std::size_t out_id = tape.size();
  return tape.record(
      op, std::move(out), {in},
      [in, out_id, df](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(in);
        const Tensor& y = t.value(out_id);
        Tensor dx(x.shape());
        auto d = dx.values();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * df(x[i], y[i]);
        t.accumulate(in, std::move(dx));
      });
}

struct AxisLayout {
  std::size_t outer = 1;
  std::size_t length = 1;
  std::size_t inner = 1;
  Shape out_shape;
};

AxisLayout axis_layout(const Tensor& t, std::size_t axis, const char* op) {
  if (t.is_null()) throw DomainError(std::string(op) + " of an empty tensor");
  if (axis >= t.rank()) {
    throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_string(t.shape()));
  }
  AxisLayout l;
  for (std::size_t i = 0; i < axis; ++i) l.outer *= t.shape()[i];
  l.length = t.shape()[axis];
  for (std::size_t i = axis + 1; i < t.rank(); ++i) l.inner *= t.shape()[i];
  l.out_shape = t.shape();
  l.out_shape[axis] = 1;
  return l;
}

}  // namespace

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) { return leaf(std::move(value), false); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (value.is_null()) throw ContractError("tape leaf must hold a value");
  if (!value.all_finite()) {
    throw NumericError("non-finite value in tape leaf");
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p, bool trainable) {
  Var v = leaf(p.value, trainable);
  if (trainable) nodes_.back().param = &p;
  return v;
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> inputs,
                 BackwardFn backward) {
  if (in_backward_) throw ContractError("cannot record ops during backward");
  if (!value.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
  Node node;
  node.value = std::move(value);
  for (std::size_t id : inputs) {
    if (nodes_[id].requires_grad) node.requires_grad = true;
  }
  node.inputs = std::move(inputs);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& slot = pending_[id];
  if (slot.is_null()) {
    slot = g;
  } else {
    add_into(slot, g);
  }
}

void Tape::accumulate(std::size_t id, Tensor&& g) {
  if (!nodes_[id].requires_grad) return;
  Tensor& slot = pending_[id];
  if (slot.is_null()) {
    slot = std::move(g);
  } else {
    add_into(slot, g);
  }
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("loss belongs to another tape");
  const Tensor& lv = value(loss.id());
  if (lv.numel() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_string(lv.shape()));
  }
  if (!nodes_[loss.id()].requires_grad) return;

  pending_.assign(loss.id() + 1, Tensor());
  in_backward_ = true;
  pending_[loss.id()] = Tensor(lv.shape(), 1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    if (pending_[i].is_null()) continue;
    Node& node = nodes_[i];
    Tensor g = std::move(pending_[i]);
    if (node.backward) {
      node.backward(*this, g);
    } else if (node.param != nullptr) {
      if (node.param->grad.is_null()) {
        node.param->grad = std::move(g);
      } else {
        add_into(node.param->grad, g);
      }
    } else if (node.leaf_grad.is_null()) {
      node.leaf_grad = std::move(g);
    } else {
      add_into(node.leaf_grad, g);
    }
  }
  in_backward_ = false;
  pending_.clear();
}

Tensor Tape::grad(Var leaf) const {
  const Node& node = nodes_[leaf.id()];
  if (node.leaf_grad.is_null()) return Tensor::zeros_like(node.value);
  return node.leaf_grad;
}

void Tape::zero_grad() {
  for (Node& node : nodes_) node.leaf_grad = Tensor();
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ: " +
                         shape_string(av.shape()) + " x " +
                         shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("matmul", std::move(out), {ia, ib},
                         [ia, ib](Tape& t, const Tensor& g) {
                           const Tensor& x = t.value(ia);
                           const Tensor& y = t.value(ib);
                           if (t.requires_grad(ia)) {
                             Tensor ga(x.shape());
                             as_matrix(ga).noalias() =
                                 as_matrix(g) * as_matrix(y).transpose();
                             t.accumulate(ia, std::move(ga));
                           }
                           if (t.requires_grad(ib)) {
                             Tensor gb(y.shape());
                             as_matrix(gb).noalias() =
                                 as_matrix(x).transpose() * as_matrix(g);
                             t.accumulate(ib, std::move(gb));
                           }
                         });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  require_rank2(av, "transpose");
  Tensor out({av.cols(), av.rows()});
  as_matrix(out) = as_matrix(av).transpose();
  const std::size_t ia = a.id();
  return a.tape().record("transpose", std::move(out), {ia},
                         [ia](Tape& t, const Tensor& g) {
                           Tensor ga(t.value(ia).shape());
                           as_matrix(ga) = as_matrix(g).transpose();
                           t.accumulate(ia, std::move(ga));
                         });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  Shape shape = broadcast_shape(a.value(), b.value(), "add");
  Tensor out = zip_values(a.value(), b.value(), shape,
                          [](double x, double y) { return x + y; });
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("add", std::move(out), {ia, ib},
                         [ia, ib](Tape& t, const Tensor& g) {
                           t.accumulate(ia, unbroadcast(g, t.value(ia)));
                           t.accumulate(ib, unbroadcast(g, t.value(ib)));
                         });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b, "sub");
  Shape shape = broadcast_shape(a.value(), b.value(), "sub");
  Tensor out = zip_values(a.value(), b.value(), shape,
                          [](double x, double y) { return x - y; });
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record("sub", std::move(out), {ia, ib},
                         [ia, ib](Tape& t, const Tensor& g) {
                           t.accumulate(ia, unbroadcast(g, t.value(ia)));
                           if (t.requires_grad(ib)) {
                             Tensor ng = map_values(g, [](double v) { return -v; });
                             t.accumulate(ib, unbroadcast(ng, t.value(ib)));
                           }
                         });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  Shape shape = broadcast_shape(a.value(), b.value(), "mul");
  Tensor out = zip_values(a.value(), b.value(), shape,
                          [](double x, double y) { return x * y; });
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record(
      "mul", std::move(out), {ia, ib}, [ia, ib, shape](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        auto times = [](double u, double v) { return u * v; };
        if (t.requires_grad(ia)) {
          t.accumulate(ia, unbroadcast(zip_values(g, y, shape, times), x));
        }
        if (t.requires_grad(ib)) {
          t.accumulate(ib, unbroadcast(zip_values(g, x, shape, times), y));
        }
      });
}

Var neg(Var a) {
  return unary(
      "neg", a, [](double x) { return -x; },
      [](double, double) { return -1.0; });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        // Saturates at the nearest doubles inside (0, 1).
        constexpr double kTop = 1.0 - 0x1.0p-53;
        constexpr double kBottom = std::numeric_limits<double>::denorm_min();
        if (x >= 0.0) return std::min(1.0 / (1.0 + std::exp(-x)), kTop);
        const double e = std::exp(x);
        return std::max(e / (1.0 + e), kBottom);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) {
      throw DomainError("log of non-positive value " + std::to_string(v));
    }
  }
  return unary(
      "log", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var exp(Var a) {
  return unary(
      "exp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var square(Var a) {
  return unary(
      "square", a, [](double x) { return x * x; },
      [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  for (double v : a.value().values()) {
    if (v < 0.0) {
      throw DomainError("sqrt of negative value " + std::to_string(v));
    }
  }
  return unary(
      "sqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var clamp_min(Var a, double floor) {
  return unary(
      "clamp_min", a, [floor](double x) { return x > floor ? x : floor; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      "add_scalar", a, [offset](double x) { return x + offset; },
      [](double, double) { return 1.0; });
}

Var sum(Var a) {
  const Tensor& av = a.value();
  if (av.is_null()) throw DomainError("sum of an empty tensor");
  double total = 0.0;
  for (double v : av.values()) total += v;
  const std::size_t ia = a.id();
  return a.tape().record("sum", Tensor::scalar(total), {ia},
                         [ia](Tape& t, const Tensor& g) {
                           t.accumulate(ia, Tensor(t.value(ia).shape(), g[0]));
                         });
}

Var mean(Var a) {
  const Tensor& av = a.value();
  if (av.is_null()) throw DomainError("mean of an empty tensor");
  double total = 0.0;
  for (double v : av.values()) total += v;
  const double n = static_cast<double>(av.numel());
  const std::size_t ia = a.id();
  return a.tape().record("mean", Tensor::scalar(total / n), {ia},
                         [ia, n](Tape& t, const Tensor& g) {
                           t.accumulate(ia,
                                        Tensor(t.value(ia).shape(), g[0] / n));
                         });
}

Var max(Var a) {
  const Tensor& av = a.value();
  if (av.is_null()) throw DomainError("max of an empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < av.numel(); ++i) {
    if (av[i] > av[best]) best = i;
  }
  const std::size_t ia = a.id();
  return a.tape().record("max", Tensor::scalar(av[best]), {ia},
                         [ia, best](Tape& t, const Tensor& g) {
                           Tensor ga(t.value(ia).shape());
                           ga[best] = g[0];
                           t.accumulate(ia, std::move(ga));
                         });
}

namespace {

Var reduce_axis(Var a, std::size_t axis, const char* op, bool average) {
  const Tensor& av = a.value();
  AxisLayout l = axis_layout(av, axis, op);
  Tensor out(l.out_shape);
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      double total = 0.0;
      for (std::size_t k = 0; k < l.length; ++k) {
        total += av[(o * l.length + k) * l.inner + i];
      }
      out[o * l.inner + i] = average ? total / static_cast<double>(l.length) : total;
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record(op, std::move(out), {ia},
                         [ia, l, average](Tape& t, const Tensor& g) {
                           Tensor ga(t.value(ia).shape());
                           const double w =
                               average ? 1.0 / static_cast<double>(l.length) : 1.0;
                           for (std::size_t o = 0; o < l.outer; ++o) {
                             for (std::size_t k = 0; k < l.length; ++k) {
                               for (std::size_t i = 0; i < l.inner; ++i) {
                                 ga[(o * l.length + k) * l.inner + i] =
                                     w * g[o * l.inner + i];
                               }
                             }
                           }
                           t.accumulate(ia, std::move(ga));
                         });
}

}  // namespace

Var sum(Var a, std::size_t axis) { return reduce_axis(a, axis, "sum", false); }

Var mean(Var a, std::size_t axis) { return reduce_axis(a, axis, "mean", true); }

Var max(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  AxisLayout l = axis_layout(av, axis, "max");
  Tensor out(l.out_shape);
  std::vector<std::size_t> argmax(l.outer * l.inner);
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      std::size_t best = (o * l.length) * l.inner + i;
      for (std::size_t k = 1; k < l.length; ++k) {
        const std::size_t idx = (o * l.length + k) * l.inner + i;
        if (av[idx] > av[best]) best = idx;
      }
      out[o * l.inner + i] = av[best];
      argmax[o * l.inner + i] = best;
    }
  }
  const std::size_t ia = a.id();
  return a.tape().record("max", std::move(out), {ia},
                         [ia, argmax = std::move(argmax)](Tape& t, const Tensor& g) {
                           Tensor ga(t.value(ia).shape());
                           for (std::size_t j = 0; j < argmax.size(); ++j) {
                             ga[argmax[j]] += g[j];
                           }
                           t.accumulate(ia, std::move(ga));
                         });
}

Var add_bias(Var x, Var bias) {
  require_same_tape(x, bias, "add_bias");
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank2(xv, "add_bias");
  const std::size_t n = xv.cols();
  if (bv.numel() != n || (bv.rank() == 2 && bv.rows() != 1) || bv.rank() > 2) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) +
                         " does not match row width of " +
                         shape_string(xv.shape()));
  }
  Tensor out = xv;
  as_matrix(out).rowwise() +=
      Eigen::Map<const Eigen::RowVectorXd>(bv.values().data(),
                                           static_cast<Eigen::Index>(n));
  const std::size_t ix = x.id();
  const std::size_t ib = bias.id();
  return x.tape().record("add_bias", std::move(out), {ix, ib},
                         [ix, ib](Tape& t, const Tensor& g) {
                           if (t.requires_grad(ib)) {
                             Tensor gb(t.value(ib).shape());
                             Eigen::Map<Eigen::RowVectorXd>(
                                 gb.values().data(),
                                 static_cast<Eigen::Index>(gb.numel())) =
                                 as_matrix(g).colwise().sum();
                             t.accumulate(ib, std::move(gb));
                           }
                           t.accumulate(ix, g);
                         });
}

Var log_softmax(Var logits) {
  const Tensor& lv = logits.value();
  require_rank2(lv, "log_softmax");
  const std::size_t b = lv.rows();
  const std::size_t c = lv.cols();
  Tensor out(lv.shape());
  for (std::size_t r = 0; r < b; ++r) {
    double m = lv.at(r, 0);
    for (std::size_t j = 1; j < c; ++j) m = std::max(m, lv.at(r, j));
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(lv.at(r, j) - m);
    const double lse = m + std::log(total);
    for (std::size_t j = 0; j < c; ++j) out.at(r, j) = lv.at(r, j) - lse;
  }
  const std::size_t il = logits.id();
  const std::size_t io = logits.tape().size();
  return logits.tape().record(
      "log_softmax", std::move(out), {il}, [il, io](Tape& t, const Tensor& g) {
        const Tensor& y = t.value(io);
        const std::size_t rows = y.rows();
        const std::size_t cols = y.cols();
        Tensor gl(y.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          double gsum = 0.0;
          for (std::size_t j = 0; j < cols; ++j) gsum += g.at(r, j);
          for (std::size_t j = 0; j < cols; ++j) {
            gl.at(r, j) = g.at(r, j) - std::exp(y.at(r, j)) * gsum;
          }
        }
        t.accumulate(il, std::move(gl));
      });
}

Var pairwise_sq_dist(Var a, Var b) {
  require_same_tape(a, b, "pairwise_sq_dist");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "pairwise_sq_dist");
  require_rank2(bv, "pairwise_sq_dist");
  if (av.cols() != bv.cols()) {
    throw DimensionError("pairwise_sq_dist: widths differ: " +
                         shape_string(av.shape()) + " vs " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.rows();
  const std::size_t n = bv.rows();
  const std::size_t d = av.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = av.at(i, k) - bv.at(j, k);
        s += diff * diff;
      }
      out.at(i, j) = s;
    }
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape().record(
      "pairwise_sq_dist", std::move(out), {ia, ib},
      [ia, ib](Tape& t, const Tensor& g) {
        const Tensor& x = t.value(ia);
        const Tensor& y = t.value(ib);
        auto gm = as_matrix(g);
        if (t.requires_grad(ia)) {
          Tensor ga(x.shape());
          const Eigen::VectorXd row_sums = gm.rowwise().sum();
          as_matrix(ga).noalias() =
              2.0 * (row_sums.asDiagonal() * as_matrix(x) - gm * as_matrix(y));
          t.accumulate(ia, std::move(ga));
        }
        if (t.requires_grad(ib)) {
          Tensor gb(y.shape());
          const Eigen::VectorXd col_sums = gm.colwise().sum().transpose();
          as_matrix(gb).noalias() = 2.0 * (col_sums.asDiagonal() * as_matrix(y) -
                                           gm.transpose() * as_matrix(x));
          t.accumulate(ib, std::move(gb));
        }
      });
}

Var rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  require_rank2(av, "rows");
  if (begin >= end || end > av.rows()) {
    throw DimensionError("rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " +
                         shape_string(av.shape()));
  }
  const std::size_t cols = av.cols();
  std::vector<double> values(av.values().begin() + begin * cols,
                             av.values().begin() + end * cols);
  const std::size_t ia = a.id();
  return a.tape().record("rows", Tensor({end - begin, cols}, std::move(values)),
                         {ia}, [ia, begin, cols](Tape& t, const Tensor& g) {
                           Tensor ga(t.value(ia).shape());
                           std::copy(g.values().begin(), g.values().end(),
                                     ga.values().begin() + begin * cols);
                           t.accumulate(ia, std::move(ga));
                         });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_rows needs at least one part");
  Tape& tape = parts.front().tape();
  const std::size_t cols = parts.front().value().cols();
  std::size_t total_rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) {
      throw ContractError("concat_rows: parts live on different tapes");
    }
    require_rank2(p.value(), "concat_rows");
    if (p.value().cols() != cols) {
      throw DimensionError("concat_rows: widths differ");
    }
    total_rows += p.value().rows();
    ids.push_back(p.id());
  }
  std::vector<double> values;
  values.reserve(total_rows * cols);
  for (const Var& p : parts) {
    values.insert(values.end(), p.value().values().begin(),
                  p.value().values().end());
  }
  return tape.record("concat_rows", Tensor({total_rows, cols}, std::move(values)),
                     ids, [ids](Tape& t, const Tensor& g) {
                       std::size_t offset = 0;
                       for (std::size_t id : ids) {
                         const Tensor& part = t.value(id);
                         if (t.requires_grad(id)) {
                           std::vector<double> slice(
                               g.values().begin() + offset,
                               g.values().begin() + offset + part.numel());
                           t.accumulate(id, Tensor(part.shape(), std::move(slice)));
                         }
                         offset += part.numel();
                       }
                     });
}

}  // namespace unireg::ad
