#pragma once

// Central finite-difference gradient checks against the tape.

#include "strokenet/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace strokenet::testing {

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst;  // "param[index]"
  int checked = 0;
};

// |analytic - numeric| / max(|analytic|, |numeric|, floor). The floor keeps
// entries whose true gradient is ~0 from turning rounding noise into a ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Sum of v weighted by fixed random coefficients: a scalar probe that
// exercises every output entry.
inline Var random_probe(Tape& t, const Var& v, Rng& rng) {
  Mat w(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c)
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-1.0, 1.0);
  return ad::sum(v * t.constant(std::move(w), v.height(), v.width()));
}

using LossFn = std::function<Var(Tape&)>;

// Compares Param::grad after one backward pass with central differences of
// `loss` for up to `max_entries` randomly chosen entries of every parameter.
inline GradCheck gradcheck(const std::vector<Param*>& params, const LossFn& loss, Rng& rng, int max_entries = 24,
                           double step = 1e-5) {
  for (Param* p : params) p->zero_grad();
  {
    Tape t;
    t.backward(loss(t));
  }
  GradCheck out;
  for (Param* p : params) {
    const Mat analytic = p->grad;
    const Eigen::Index n = p->value.size();
    std::vector<Eigen::Index> entries;
    if (n <= max_entries) {
      for (Eigen::Index i = 0; i < n; ++i) entries.push_back(i);
    } else {
      for (int k = 0; k < max_entries; ++k)
        entries.push_back(static_cast<Eigen::Index>(rng.uniform_int(0, static_cast<int>(n) - 1)));
    }
    for (Eigen::Index i : entries) {
      double& x = p->value.data()[i];
      const double x0 = x;
      x = x0 + step;
      double up;
      {
        Tape t;
        up = loss(t).scalar();
      }
      x = x0 - step;
      double down;
      {
        Tape t;
        down = loss(t).scalar();
      }
      x = x0;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic.data()[i], numeric);
      ++out.checked;
      if (err > out.max_rel_err || out.worst.empty()) {
        if (err >= out.max_rel_err) {
          out.max_rel_err = err;
          out.worst = p->name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic.data()[i]) +
                      " numeric " + std::to_string(numeric);
        }
      }
    }
  }
  return out;
}

inline Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  return m;
}

}  // namespace strokenet::testing
