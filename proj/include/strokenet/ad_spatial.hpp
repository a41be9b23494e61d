#pragma once

// Spatial ops over C x (H*W) feature maps: convolution, bilinear resize,
// cropping and point sampling.

#include "strokenet/ad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace strokenet::ad {

struct ConvSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int pad_h = 1;
  int pad_w = 1;
  int dilation = 1;
  bool replicate = false;  // replicate border instead of zero padding

  static ConvSpec same(int k, int dilation = 1) {
    ConvSpec s;
    s.kernel_h = s.kernel_w = k;
    s.pad_h = s.pad_w = dilation * (k / 2);
    s.dilation = dilation;
    return s;
  }
};

inline int conv_out_extent(int in, int kernel, int pad, int dilation, int stride) {
  return (in + 2 * pad - dilation * (kernel - 1) - 1) / stride + 1;
}

namespace detail {

// For every kernel tap and output position, the flat input index or -1.
inline std::vector<int> conv_taps(int h, int w, const ConvSpec& s, int oh, int ow) {
  const int kk = s.kernel_h * s.kernel_w;
  std::vector<int> taps(static_cast<std::size_t>(kk) * oh * ow);
  for (int ky = 0; ky < s.kernel_h; ++ky) {
    for (int kx = 0; kx < s.kernel_w; ++kx) {
      const int k = ky * s.kernel_w + kx;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          int iy = oy * s.stride - s.pad_h + ky * s.dilation;
          int ix = ox * s.stride - s.pad_w + kx * s.dilation;
          int src = -1;
          if (s.replicate) {
            iy = std::clamp(iy, 0, h - 1);
            ix = std::clamp(ix, 0, w - 1);
            src = iy * w + ix;
          } else if (iy >= 0 && iy < h && ix >= 0 && ix < w) {
            src = iy * w + ix;
          }
          taps[(static_cast<std::size_t>(k) * oh + oy) * ow + ox] = src;
        }
      }
    }
  }
  return taps;
}

struct BilinearTap {
  std::array<int, 4> src{-1, -1, -1, -1};
  std::array<double, 4> weight{0, 0, 0, 0};
};

// Bilinear taps at continuous location (u, v) in pixel units with pixel
// (i, j) centred at (j + 0.5, i + 0.5). Locations more than one pixel outside
// the grid contribute nothing.
inline BilinearTap bilinear_tap(double u, double v, int h, int w) {
  BilinearTap t;
  double x = u - 0.5;
  double y = v - 0.5;
  if (y < -1.0 || y > h || x < -1.0 || x > w) return t;
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double lx = x - x0;
  const double ly = y - y0;
  t.src = {y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1};
  t.weight = {(1 - ly) * (1 - lx), (1 - ly) * lx, ly * (1 - lx), ly * lx};
  return t;
}

template <typename Scalar>
Var<Scalar> apply_taps(const Var<Scalar>& x, std::vector<BilinearTap> taps, int oh, int ow) {
  const auto& v = x.value();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(v.rows(), static_cast<Index>(taps.size()));
  for (std::size_t o = 0; o < taps.size(); ++o) {
    for (int k = 0; k < 4; ++k) {
      if (taps[o].src[k] < 0 || taps[o].weight[k] == 0.0) continue;
      out.col(static_cast<Index>(o)) += static_cast<Scalar>(taps[o].weight[k]) * v.col(taps[o].src[k]);
    }
  }
  return x.tape()->record(std::move(out), {x},
                          [x, taps = std::move(taps)](Tape<Scalar>& tp, int self) {
                            if (!tp.requires_grad(x.id())) return;
                            const auto& g = tp.grad(self);
                            auto& gx = tp.grad(x.id());
                            for (std::size_t o = 0; o < taps.size(); ++o) {
                              for (int k = 0; k < 4; ++k) {
                                if (taps[o].src[k] < 0 || taps[o].weight[k] == 0.0) continue;
                                gx.col(taps[o].src[k]) +=
                                    static_cast<Scalar>(taps[o].weight[k]) * g.col(static_cast<Index>(o));
                              }
                            }
                          },
                          oh, ow);
}

}  // namespace detail

// 2-D convolution. weight is Cout x (Kh*Kw*Cin) ordered (ky, kx, cin);
// bias is Cout x 1.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                   const ConvSpec& s) {
  const int h = x.height();
  const int w = x.width();
  if (h <= 0 || w <= 0) throw std::invalid_argument("conv2d: input carries no spatial extent");
  const Index cin = x.rows();
  const int kk = s.kernel_h * s.kernel_w;
  if (weight.cols() != kk * cin)
    throw std::invalid_argument("conv2d: weight expects " + std::to_string(weight.cols()) +
                                " inputs, got " + std::to_string(kk * cin));
  if (bias.rows() != weight.rows() || bias.cols() != 1) throw std::invalid_argument("conv2d: bias shape");
  const int oh = conv_out_extent(h, s.kernel_h, s.pad_h, s.dilation, s.stride);
  const int ow = conv_out_extent(w, s.kernel_w, s.pad_w, s.dilation, s.stride);
  if (oh <= 0 || ow <= 0) throw std::invalid_argument("conv2d: input smaller than kernel");
  const Index n_out = static_cast<Index>(oh) * ow;

  std::vector<int> taps = detail::conv_taps(h, w, s, oh, ow);
  const auto& xv = x.value();
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(kk * cin, n_out);
  for (int k = 0; k < kk; ++k) {
    const int* row = taps.data() + static_cast<std::size_t>(k) * n_out;
    for (Index o = 0; o < n_out; ++o) {
      if (row[o] >= 0) cols.col(o).segment(k * cin, cin) = xv.col(row[o]);
    }
  }
  Matrix<Scalar> out = weight.value() * cols;
  out.colwise() += bias.value().col(0);

  auto* t = x.tape();
  return t->record(
      std::move(out), {x, weight, bias},
      [x, weight, bias, cols = std::move(cols), taps = std::move(taps), kk, cin, n_out](
          Tape<Scalar>& tp, int self) {
        const auto& g = tp.grad(self);
        if (tp.requires_grad(weight.id())) tp.grad(weight.id()).noalias() += g * cols.transpose();
        if (tp.requires_grad(bias.id())) tp.grad(bias.id()) += g.rowwise().sum();
        if (tp.requires_grad(x.id())) {
          Matrix<Scalar> dcols = weight.value().transpose() * g;
          auto& gx = tp.grad(x.id());
          for (int k = 0; k < kk; ++k) {
            const int* row = taps.data() + static_cast<std::size_t>(k) * n_out;
            for (Index o = 0; o < n_out; ++o) {
              if (row[o] >= 0) gx.col(row[o]) += dcols.col(o).segment(k * cin, cin);
            }
          }
        }
      },
      oh, ow);
}

// Bilinear resize (half-pixel centres, no corner alignment).
template <typename Scalar>
Var<Scalar> resize_bilinear(const Var<Scalar>& x, int out_h, int out_w) {
  const int h = x.height();
  const int w = x.width();
  if (h <= 0 || w <= 0 || out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("resize_bilinear: empty extent");
  std::vector<detail::BilinearTap> taps(static_cast<std::size_t>(out_h) * out_w);
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox)
      taps[static_cast<std::size_t>(oy) * out_w + ox] =
          detail::bilinear_tap((ox + 0.5) * sx, (oy + 0.5) * sy, h, w);
  return detail::apply_taps(x, std::move(taps), out_h, out_w);
}

// Samples every channel at continuous pixel locations; result is C x N.
template <typename Scalar>
Var<Scalar> sample_bilinear(const Var<Scalar>& x, const std::vector<std::array<double, 2>>& points) {
  const int h = x.height();
  const int w = x.width();
  if (h <= 0 || w <= 0) throw std::invalid_argument("sample_bilinear: empty extent");
  std::vector<detail::BilinearTap> taps(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    taps[i] = detail::bilinear_tap(points[i][0], points[i][1], h, w);
  return detail::apply_taps(x, std::move(taps), 1, static_cast<int>(points.size()));
}

// Spatial crop [y0, y0+h) x [x0, x0+w).
template <typename Scalar>
Var<Scalar> crop(const Var<Scalar>& x, int y0, int x0, int h, int w) {
  const int H = x.height();
  const int W = x.width();
  if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > H || x0 + w > W)
    throw std::out_of_range("crop: window outside feature map");
  const auto& v = x.value();
  Matrix<Scalar> out(v.rows(), static_cast<Index>(h) * w);
  for (int y = 0; y < h; ++y)
    out.middleCols(static_cast<Index>(y) * w, w) = v.middleCols(static_cast<Index>(y0 + y) * W + x0, w);
  return x.tape()->record(std::move(out), {x},
                          [x, y0, x0, h, w, W](Tape<Scalar>& tp, int self) {
                            if (!tp.requires_grad(x.id())) return;
                            const auto& g = tp.grad(self);
                            auto& gx = tp.grad(x.id());
                            for (int y = 0; y < h; ++y)
                              gx.middleCols(static_cast<Index>(y0 + y) * W + x0, w) +=
                                  g.middleCols(static_cast<Index>(y) * w, w);
                          },
                          h, w);
}

// Repeats a C x 1 vector over an h x w grid.
template <typename Scalar>
Var<Scalar> broadcast_spatial(const Var<Scalar>& v, int h, int w) {
  if (v.cols() != 1) throw std::invalid_argument("broadcast_spatial: expects a column");
  Matrix<Scalar> out = v.value().col(0).replicate(1, static_cast<Index>(h) * w);
  return v.tape()->record(std::move(out), {v},
                          [v](Tape<Scalar>& tp, int self) { tp.accumulate(v, tp.grad(self).rowwise().sum()); },
                          h, w);
}

}  // namespace strokenet::ad
