#pragma once

// Minimal reverse-mode automatic differentiation over dense Eigen matrices.
//
// Every value on a Tape is a dense matrix. Spatial tensors (feature maps)
// are stored channel-major as C x (H*W) with the spatial index y*W + x and
// carry their (H, W) extent on the node.

#include <Eigen/Core>

#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace strokenet::ad {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<Scalar> v)
      : name(std::move(n)), value(std::move(v)),
        grad(Matrix<Scalar>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
class Tape;

template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape<Scalar>* tape() const { return tape_; }
  int id() const { return id_; }

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  int height() const { return tape_->height(id_); }
  int width() const { return tape_->width(id_); }
  Scalar scalar() const { return value()(0, 0); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Mat value, int h = 0, int w = 0) {
    return push(std::move(value), false, {}, h, w);
  }

  // A free input whose gradient is retained after backward().
  Var<Scalar> variable(Mat value, int h = 0, int w = 0) {
    return push(std::move(value), true, {}, h, w);
  }

  // Binds a parameter; repeated binds on one tape share a node.
  Var<Scalar> parameter(Parameter<Scalar>& p, int h = 0, int w = 0) {
    auto it = bound_.find(&p);
    if (it != bound_.end()) return Var<Scalar>(this, it->second);
    Var<Scalar> v = push(p.value, true, {}, h, w);
    nodes_[v.id()].param = &p;
    bound_.emplace(&p, v.id());
    return v;
  }

  // Records an op result. The node requires grad iff any input does.
  Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> inputs,
                     BackwardFn fn, int h = 0, int w = 0) {
    bool rg = false;
    for (const auto& in : inputs) rg = rg || requires_grad(in.id());
    return push(std::move(value), rg, rg ? std::move(fn) : BackwardFn{}, h, w);
  }

  Var<Scalar> record(Mat value, const std::vector<Var<Scalar>>& inputs,
                     BackwardFn fn, int h = 0, int w = 0) {
    bool rg = false;
    for (const auto& in : inputs) rg = rg || requires_grad(in.id());
    return push(std::move(value), rg, rg ? std::move(fn) : BackwardFn{}, h, w);
  }

  const Mat& value(int id) const { return nodes_.at(id).value; }
  int height(int id) const { return nodes_.at(id).h; }
  int width(int id) const { return nodes_.at(id).w; }
  bool requires_grad(int id) const { return nodes_.at(id).requires_grad; }
  bool has_grad(int id) const { return nodes_.at(id).grad.size() > 0; }
  std::size_t size() const { return nodes_.size(); }

  Mat& grad(int id) {
    Node& n = nodes_.at(id);
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  template <typename Derived>
  void accumulate(const Var<Scalar>& v, const Eigen::MatrixBase<Derived>& g) {
    if (!requires_grad(v.id())) return;
    grad(v.id()) += g;
  }

  // Reverse sweep from a scalar root; parameter gradients are added into
  // Parameter::grad.
  void backward(const Var<Scalar>& root, Scalar seed = Scalar(1)) {
    if (root.rows() != 1 || root.cols() != 1)
      throw std::invalid_argument("backward: root must be a scalar");
    if (!requires_grad(root.id())) return;
    grad(root.id())(0, 0) += seed;
    for (int id = root.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, id);
      if (n.param != nullptr) {
        if (n.param->grad.rows() != n.value.rows() || n.param->grad.cols() != n.value.cols())
          n.param->zero_grad();
        n.param->grad += n.grad;
      }
    }
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter<Scalar>* param = nullptr;
    int h = 0;
    int w = 0;
  };

  Var<Scalar> push(Mat value, bool rg, BackwardFn fn, int h, int w) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = rg;
    n.backward = std::move(fn);
    n.h = h;
    n.w = w;
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter<Scalar>*, int> bound_;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument("operands live on different tapes");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "add");
  auto* t = a.tape();
  return t->record(a.value() + b.value(), {a, b},
                   [a, b](Tape<Scalar>& tp, int self) {
                     const auto& g = tp.grad(self);
                     tp.accumulate(a, g);
                     tp.accumulate(b, g);
                   },
                   a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "sub");
  auto* t = a.tape();
  return t->record(a.value() - b.value(), {a, b},
                   [a, b](Tape<Scalar>& tp, int self) {
                     const auto& g = tp.grad(self);
                     tp.accumulate(a, g);
                     tp.accumulate(b, -g);
                   },
                   a.height(), a.width());
}

// Hadamard product.
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "mul");
  auto* t = a.tape();
  return t->record(a.value().cwiseProduct(b.value()), {a, b},
                   [a, b](Tape<Scalar>& tp, int self) {
                     const auto& g = tp.grad(self);
                     tp.accumulate(a, g.cwiseProduct(b.value()));
                     tp.accumulate(b, g.cwiseProduct(a.value()));
                   },
                   a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> divide(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  detail::require_same_shape(a, b, "divide");
  auto* t = a.tape();
  Matrix<Scalar> out = a.value().cwiseQuotient(b.value());
  return t->record(std::move(out), {a, b},
                   [a, b](Tape<Scalar>& tp, int self) {
                     const auto& g = tp.grad(self);
                     tp.accumulate(a, g.cwiseQuotient(b.value()));
                     tp.accumulate(b, -(g.cwiseProduct(a.value())
                                            .cwiseQuotient(b.value().cwiseAbs2())));
                   },
                   a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  return a.tape()->record(a.value() * s, {a},
                          [a, s](Tape<Scalar>& tp, int self) { tp.accumulate(a, tp.grad(self) * s); },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> add_scalar(const Var<Scalar>& a, Scalar s) {
  Matrix<Scalar> out = a.value().array() + s;
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) { tp.accumulate(a, tp.grad(self)); },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& a) {
  return scale(a, s);
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a) {
  return scale(a, Scalar(-1));
}

// ---------------------------------------------------------------------------
// Linear algebra and broadcasting

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape()->record(std::move(out), {a, b},
                          [a, b](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            if (tp.requires_grad(a.id())) tp.grad(a.id()).noalias() += g * b.value().transpose();
                            if (tp.requires_grad(b.id())) tp.grad(b.id()).noalias() += a.value().transpose() * g;
                          },
                          b.height(), b.width());
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().transpose();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) { tp.accumulate(a, tp.grad(self).transpose()); });
}

// a (r x c) + v (r x 1) broadcast over columns.
template <typename Scalar>
Var<Scalar> add_col_broadcast(const Var<Scalar>& a, const Var<Scalar>& v) {
  detail::require_same_tape(a, v);
  if (v.cols() != 1 || v.rows() != a.rows()) throw std::invalid_argument("add_col_broadcast: shape");
  Matrix<Scalar> out = a.value().colwise() + v.value().col(0);
  return a.tape()->record(std::move(out), {a, v},
                          [a, v](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            tp.accumulate(a, g);
                            tp.accumulate(v, g.rowwise().sum());
                          },
                          a.height(), a.width());
}

// a (r x c) + v (1 x c) broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row_broadcast(const Var<Scalar>& a, const Var<Scalar>& v) {
  detail::require_same_tape(a, v);
  if (v.rows() != 1 || v.cols() != a.cols()) throw std::invalid_argument("add_row_broadcast: shape");
  Matrix<Scalar> out = a.value().rowwise() + v.value().row(0);
  return a.tape()->record(std::move(out), {a, v},
                          [a, v](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            tp.accumulate(a, g);
                            tp.accumulate(v, g.colwise().sum());
                          },
                          a.height(), a.width());
}

// Scales row i of a by v(i); v is r x 1.
template <typename Scalar>
Var<Scalar> mul_col_broadcast(const Var<Scalar>& a, const Var<Scalar>& v) {
  detail::require_same_tape(a, v);
  if (v.cols() != 1 || v.rows() != a.rows()) throw std::invalid_argument("mul_col_broadcast: shape");
  Matrix<Scalar> out = v.value().col(0).asDiagonal() * a.value();
  return a.tape()->record(std::move(out), {a, v},
                          [a, v](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            tp.accumulate(a, v.value().col(0).asDiagonal() * g);
                            tp.accumulate(v, g.cwiseProduct(a.value()).rowwise().sum());
                          },
                          a.height(), a.width());
}

// Scales column j of a by v(j); v is 1 x c.
template <typename Scalar>
Var<Scalar> mul_row_broadcast(const Var<Scalar>& a, const Var<Scalar>& v) {
  detail::require_same_tape(a, v);
  if (v.rows() != 1 || v.cols() != a.cols()) throw std::invalid_argument("mul_row_broadcast: shape");
  Matrix<Scalar> out = a.value() * v.value().row(0).asDiagonal();
  return a.tape()->record(std::move(out), {a, v},
                          [a, v](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            tp.accumulate(a, g * v.value().row(0).asDiagonal());
                            tp.accumulate(v, g.cwiseProduct(a.value()).colwise().sum());
                          },
                          a.height(), a.width());
}

// ---------------------------------------------------------------------------
// Reductions

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape<Scalar>& tp, int self) {
    const Scalar g = tp.grad(self)(0, 0);
    if (tp.requires_grad(a.id())) tp.grad(a.id()).array() += g;
  });
}

template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a) {
  const auto n = static_cast<Scalar>(a.value().size());
  return scale(sum(a), Scalar(1) / n);
}

// Sum over columns: r x c -> r x 1.
template <typename Scalar>
Var<Scalar> row_sum(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().rowwise().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(a.id())) tp.grad(a.id()).colwise() += g.col(0);
  });
}

// Sum over rows: r x c -> 1 x c.
template <typename Scalar>
Var<Scalar> col_sum(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().colwise().sum();
  return a.tape()->record(std::move(out), {a}, [a](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    if (tp.requires_grad(a.id())) tp.grad(a.id()).rowwise() += g.row(0);
  });
}

template <typename Scalar>
Var<Scalar> row_mean(const Var<Scalar>& a) {
  return scale(row_sum(a), Scalar(1) / static_cast<Scalar>(a.cols()));
}

// Max over columns: r x c -> r x 1 (first maximum wins ties).
template <typename Scalar>
Var<Scalar> row_max(const Var<Scalar>& a) {
  const auto& v = a.value();
  Matrix<Scalar> out(v.rows(), 1);
  std::vector<Index> arg(static_cast<std::size_t>(v.rows()));
  for (Index r = 0; r < v.rows(); ++r) {
    Index c = 0;
    out(r, 0) = v.row(r).maxCoeff(&c);
    arg[static_cast<std::size_t>(r)] = c;
  }
  return a.tape()->record(std::move(out), {a}, [a, arg](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    if (!tp.requires_grad(a.id())) return;
    auto& ga = tp.grad(a.id());
    for (Index r = 0; r < g.rows(); ++r) ga(r, arg[static_cast<std::size_t>(r)]) += g(r, 0);
  });
}

// ---------------------------------------------------------------------------
// Pointwise nonlinearities

template <typename Scalar>
Var<Scalar> sigmoid(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().unaryExpr([](Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  });
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            const auto& y = tp.value(self);
                            tp.accumulate(a, tp.grad(self).cwiseProduct(
                                                 (y.array() * (Scalar(1) - y.array())).matrix()));
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> exp(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().array().exp().matrix();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            tp.accumulate(a, tp.grad(self).cwiseProduct(tp.value(self)));
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> log(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().array().log().matrix();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            tp.accumulate(a, tp.grad(self).cwiseQuotient(a.value()));
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> sqrt(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().array().sqrt().matrix();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            tp.accumulate(a, (tp.grad(self).array() /
                                              (Scalar(2) * tp.value(self).array()))
                                                 .matrix());
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> square(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().cwiseAbs2();
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            tp.accumulate(a, Scalar(2) * tp.grad(self).cwiseProduct(a.value()));
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            Matrix<Scalar> g = tp.grad(self);
                            g = (a.value().array() > Scalar(0)).select(g, Scalar(0));
                            tp.accumulate(a, g);
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> leaky_relu(const Var<Scalar>& a, Scalar slope) {
  Matrix<Scalar> out = (a.value().array() > Scalar(0)).select(a.value(), a.value() * slope);
  return a.tape()->record(std::move(out), {a},
                          [a, slope](Tape<Scalar>& tp, int self) {
                            const auto& g = tp.grad(self);
                            Matrix<Scalar> ga = (a.value().array() > Scalar(0)).select(g, g * slope);
                            tp.accumulate(a, ga);
                          },
                          a.height(), a.width());
}

// smooth_L1 with transition at 1: 0.5 x^2 if |x| < 1 else |x| - 0.5.
template <typename Scalar>
Var<Scalar> smooth_l1(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().unaryExpr([](Scalar x) {
    const Scalar ax = std::abs(x);
    return ax < Scalar(1) ? Scalar(0.5) * x * x : ax - Scalar(0.5);
  });
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            Matrix<Scalar> d = a.value().unaryExpr([](Scalar x) {
                              if (std::abs(x) < Scalar(1)) return x;
                              return x > 0 ? Scalar(1) : Scalar(-1);
                            });
                            tp.accumulate(a, tp.grad(self).cwiseProduct(d));
                          },
                          a.height(), a.width());
}

// Softmax across rows independently for every column (e.g. class logits C x N).
template <typename Scalar>
Var<Scalar> softmax_cols(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value();
  for (Index c = 0; c < out.cols(); ++c) {
    const Scalar m = out.col(c).maxCoeff();
    out.col(c) = (out.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            const auto& y = tp.value(self);
                            const auto& g = tp.grad(self);
                            Matrix<Scalar> dot = g.cwiseProduct(y).colwise().sum();
                            Matrix<Scalar> ga = y.cwiseProduct((g.rowwise() - dot.row(0)));
                            tp.accumulate(a, ga);
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> log_softmax_cols(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value();
  for (Index c = 0; c < out.cols(); ++c) {
    const Scalar m = out.col(c).maxCoeff();
    const Scalar lse = m + std::log((out.col(c).array() - m).exp().sum());
    out.col(c).array() -= lse;
  }
  return a.tape()->record(std::move(out), {a},
                          [a](Tape<Scalar>& tp, int self) {
                            const auto& y = tp.value(self);
                            const auto& g = tp.grad(self);
                            Matrix<Scalar> gs = g.colwise().sum();
                            Matrix<Scalar> ga = g - (y.array().exp().matrix() * gs.row(0).asDiagonal());
                            tp.accumulate(a, ga);
                          },
                          a.height(), a.width());
}

// Softmax across columns for every row (e.g. node x class).
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  return transpose(softmax_cols(transpose(a)));
}

// Softmax of an n x 1 column within segments; segment[i] names the group of
// entry i. Groups need not be contiguous.
template <typename Scalar>
Var<Scalar> segment_softmax(const Var<Scalar>& a, const std::vector<int>& segment,
                            int num_segments, Scalar shift = Scalar(0)) {
  const auto& v = a.value();
  if (v.cols() != 1 || static_cast<std::size_t>(v.rows()) != segment.size())
    throw std::invalid_argument("segment_softmax: expects a column matching segment ids");
  std::vector<Scalar> mx(static_cast<std::size_t>(num_segments),
                         -std::numeric_limits<Scalar>::infinity());
  for (Index i = 0; i < v.rows(); ++i) {
    auto& m = mx[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])];
    m = std::max(m, v(i, 0) + shift);
  }
  Matrix<Scalar> out(v.rows(), 1);
  std::vector<Scalar> z(static_cast<std::size_t>(num_segments), Scalar(0));
  for (Index i = 0; i < v.rows(); ++i) {
    const auto s = static_cast<std::size_t>(segment[static_cast<std::size_t>(i)]);
    out(i, 0) = std::exp(v(i, 0) + shift - mx[s]);
    z[s] += out(i, 0);
  }
  for (Index i = 0; i < v.rows(); ++i)
    out(i, 0) /= z[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])];
  return a.tape()->record(std::move(out), {a},
                          [a, segment, num_segments](Tape<Scalar>& tp, int self) {
                            const auto& y = tp.value(self);
                            const auto& g = tp.grad(self);
                            std::vector<Scalar> dot(static_cast<std::size_t>(num_segments), Scalar(0));
                            for (Index i = 0; i < y.rows(); ++i)
                              dot[static_cast<std::size_t>(segment[static_cast<std::size_t>(i)])] +=
                                  g(i, 0) * y(i, 0);
                            Matrix<Scalar> ga(y.rows(), 1);
                            for (Index i = 0; i < y.rows(); ++i)
                              ga(i, 0) = y(i, 0) *
                                         (g(i, 0) - dot[static_cast<std::size_t>(
                                                        segment[static_cast<std::size_t>(i)])]);
                            tp.accumulate(a, ga);
                          });
}

// ---------------------------------------------------------------------------
// Structural ops

template <typename Scalar>
Var<Scalar> concat_rows(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix<Scalar> out(rows, cols);
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  auto* t = parts.front().tape();
  return t->record(std::move(out), parts,
                   [parts](Tape<Scalar>& tp, int self) {
                     const auto& g = tp.grad(self);
                     Index off = 0;
                     for (const auto& p : parts) {
                       tp.accumulate(p, g.middleRows(off, p.rows()));
                       off += p.rows();
                     }
                   },
                   parts.front().height(), parts.front().width());
}

template <typename Scalar>
Var<Scalar> concat_cols(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  auto* t = parts.front().tape();
  return t->record(std::move(out), parts, [parts](Tape<Scalar>& tp, int self) {
    const auto& g = tp.grad(self);
    Index off = 0;
    for (const auto& p : parts) {
      tp.accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

template <typename Scalar>
Var<Scalar> slice_rows(const Var<Scalar>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw std::out_of_range("slice_rows: range");
  Matrix<Scalar> out = a.value().middleRows(start, count);
  return a.tape()->record(std::move(out), {a},
                          [a, start, count](Tape<Scalar>& tp, int self) {
                            if (tp.requires_grad(a.id()))
                              tp.grad(a.id()).middleRows(start, count) += tp.grad(self);
                          },
                          a.height(), a.width());
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw std::out_of_range("slice_cols: range");
  Matrix<Scalar> out = a.value().middleCols(start, count);
  return a.tape()->record(std::move(out), {a}, [a, start, count](Tape<Scalar>& tp, int self) {
    if (tp.requires_grad(a.id())) tp.grad(a.id()).middleCols(start, count) += tp.grad(self);
  });
}

template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& a, const std::vector<int>& idx) {
  const auto& v = a.value();
  Matrix<Scalar> out(static_cast<Index>(idx.size()), v.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = v.row(idx[i]);
  return a.tape()->record(std::move(out), {a}, [a, idx](Tape<Scalar>& tp, int self) {
    if (!tp.requires_grad(a.id())) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad(a.id());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Index>(i));
  });
}

template <typename Scalar>
Var<Scalar> gather_cols(const Var<Scalar>& a, const std::vector<int>& idx) {
  const auto& v = a.value();
  Matrix<Scalar> out(v.rows(), static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Index>(i)) = v.col(idx[i]);
  return a.tape()->record(std::move(out), {a}, [a, idx](Tape<Scalar>& tp, int self) {
    if (!tp.requires_grad(a.id())) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad(a.id());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.col(idx[i]) += g.col(static_cast<Index>(i));
  });
}

// out.row(idx[i]) += a.row(i); out has n rows.
template <typename Scalar>
Var<Scalar> scatter_add_rows(const Var<Scalar>& a, const std::vector<int>& idx, Index n) {
  const auto& v = a.value();
  if (static_cast<std::size_t>(v.rows()) != idx.size())
    throw std::invalid_argument("scatter_add_rows: index count");
  Matrix<Scalar> out = Matrix<Scalar>::Zero(n, v.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(idx[i]) += v.row(static_cast<Index>(i));
  return a.tape()->record(std::move(out), {a}, [a, idx](Tape<Scalar>& tp, int self) {
    if (!tp.requires_grad(a.id())) return;
    const auto& g = tp.grad(self);
    auto& ga = tp.grad(a.id());
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(static_cast<Index>(i)) += g.row(idx[i]);
  });
}

// Reinterprets the spatial extent of a C x (H*W) value.
template <typename Scalar>
Var<Scalar> with_spatial(const Var<Scalar>& a, int h, int w) {
  if (static_cast<Index>(h) * w != a.cols()) throw std::invalid_argument("with_spatial: extent");
  return a.tape()->record(a.value(), {a},
                          [a](Tape<Scalar>& tp, int self) { tp.accumulate(a, tp.grad(self)); }, h, w);
}

// Column-major reinterpretation as rows x cols.
template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) throw std::invalid_argument("reshape: element count");
  Matrix<Scalar> out = a.value().reshaped(rows, cols);
  const Index r0 = a.rows();
  const Index c0 = a.cols();
  return a.tape()->record(std::move(out), {a}, [a, r0, c0](Tape<Scalar>& tp, int self) {
    tp.accumulate(a, tp.grad(self).reshaped(r0, c0).eval());
  });
}

}  // namespace strokenet::ad
