#pragma once

#include "strokenet/ad.hpp"
#include "strokenet/ad_spatial.hpp"
#include "strokenet/raster.hpp"

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace strokenet {

using Real = double;
using Tape = ad::Tape<Real>;
using Var = ad::Var<Real>;
using Param = ad::Parameter<Real>;
using Mat = ad::Matrix<Real>;

// Named learnable tensors with stable addresses, iterated in insertion order.
class ParamStore {
 public:
  Param& add(const std::string& name, Mat init) {
    if (index_.count(name) != 0) throw std::invalid_argument("duplicate parameter " + name);
    params_.push_back(std::make_unique<Param>(name, std::move(init)));
    index_[name] = params_.size() - 1;
    return *params_.back();
  }

  Param& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return *params_[it->second];
  }
  const Param& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter " + name);
    return *params_[it->second];
  }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::vector<Param*> all() {
    std::vector<Param*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const Param*> all() const {
    std::vector<const Param*> out;
    for (const auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& p : params_) out.push_back(p->name);
    return out;
  }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& p : params_) p->zero_grad();
  }

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, std::size_t> index_;
};

inline Mat he_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = sd * rng.normal();
  return m;
}

inline Mat xavier_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-a, a);
  return m;
}

// Convolution weight + bias pair registered under "<name>.weight" / ".bias".
struct ConvLayer {
  Param* weight = nullptr;
  Param* bias = nullptr;
  ad::ConvSpec spec;

  static ConvLayer make(ParamStore& store, const std::string& name, int cin, int cout, const ad::ConvSpec& spec,
                        Rng& rng) {
    ConvLayer l;
    const int fan_in = cin * spec.kernel_h * spec.kernel_w;
    l.weight = &store.add(name + ".weight", he_normal(rng, cout, fan_in, fan_in));
    l.bias = &store.add(name + ".bias", Mat::Zero(cout, 1));
    l.spec = spec;
    return l;
  }

  Var operator()(Tape& t, const Var& x) const {
    return ad::conv2d(x, t.parameter(*weight), t.parameter(*bias), spec);
  }
};

// Dense layer y = W x + b acting on column vectors (or column batches).
struct LinearLayer {
  Param* weight = nullptr;
  Param* bias = nullptr;

  static LinearLayer make(ParamStore& store, const std::string& name, int in, int out, Rng& rng) {
    LinearLayer l;
    l.weight = &store.add(name + ".weight", xavier_uniform(rng, out, in));
    l.bias = &store.add(name + ".bias", Mat::Zero(out, 1));
    return l;
  }

  Var operator()(Tape& t, const Var& x) const {
    return ad::add_col_broadcast(ad::matmul(t.parameter(*weight), x), t.parameter(*bias));
  }
};

// Broadcasts a 1 x 1 value to rows x cols.
inline Var expand(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  if (s.rows() != 1 || s.cols() != 1) throw std::invalid_argument("expand: expects a scalar");
  Mat out = Mat::Constant(rows, cols, s.scalar());
  return s.tape()->record(std::move(out), {s}, [s](Tape& tp, int self) {
    Mat g(1, 1);
    g(0, 0) = tp.grad(self).sum();
    tp.accumulate(s, g);
  });
}

inline Var scalar_constant(Tape& t, double v) { return t.constant(Mat::Constant(1, 1, v)); }

}  // namespace strokenet
