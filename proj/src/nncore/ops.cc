// Copyright 2026 The SSV Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssv/nncore/ops.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ssv/error.h"

namespace ssv::nn {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatrixMap as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return ConstMatrixMap(t.data().data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(cols));
}
MatrixMap as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return MatrixMap(t.data().data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(cols));
}
ConstVectorMap as_vector(const Tensor& t) {
  return ConstVectorMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}
VectorMap as_vector(Tensor& t) {
  return VectorMap(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

// Upper bound on the doubles held by one im2col block.
constexpr std::size_t kIm2ColBlockDoubles = std::size_t{1} << 21;

struct ConvGeometry {
  std::size_t in_channels, height, width;
  std::size_t out_channels, kernel_h, kernel_w, padding;
  std::size_t out_h, out_w;
  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weights,
                           std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(weights, 4, "conv2d weights");
  ConvGeometry g{};
  g.in_channels = input.dim(0);
  g.height = input.dim(1);
  g.width = input.dim(2);
  g.out_channels = weights.dim(0);
  g.kernel_h = weights.dim(2);
  g.kernel_w = weights.dim(3);
  g.padding = padding;
  if (weights.dim(1) != g.in_channels) {
    throw ShapeError("conv2d: input has " + std::to_string(g.in_channels) +
                     " channels but weights expect " +
                     std::to_string(weights.dim(1)));
  }
  if (g.height + 2 * padding < g.kernel_h || g.width + 2 * padding < g.kernel_w) {
    throw ShapeError("conv2d: kernel larger than padded input " +
                     shape_string(input.shape()));
  }
  g.out_h = g.height + 2 * padding - g.kernel_h + 1;
  g.out_w = g.width + 2 * padding - g.kernel_w + 1;
  return g;
}

std::size_t rows_per_block(const ConvGeometry& g) {
  return std::max<std::size_t>(1, kIm2ColBlockDoubles / (g.patch() * g.out_w));
}

// Fills `cols` (patch x (row_end - row_begin) * out_w) with the receptive
// fields of output rows [row_begin, row_end).
void im2col(const Tensor& input, const ConvGeometry& g, std::size_t row_begin,
            std::size_t row_end, RowMatrix& cols) {
  const std::size_t n_rows = row_end - row_begin;
  cols.setZero(static_cast<Eigen::Index>(g.patch()),
               static_cast<Eigen::Index>(n_rows * g.out_w));
  const double* in = input.data().data();
  const auto pad = static_cast<long>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        double* dst =
            cols.row(static_cast<Eigen::Index>((c * g.kernel_h + ky) * g.kernel_w + kx))
                .data();
        const long x_lo = std::max<long>(0, pad - static_cast<long>(kx));
        const long x_hi = std::min<long>(
            static_cast<long>(g.out_w),
            static_cast<long>(g.width) + pad - static_cast<long>(kx));
        for (std::size_t oy = row_begin; oy < row_end; ++oy) {
          const long iy = static_cast<long>(oy + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          const double* src =
              in + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          double* row_dst = dst + (oy - row_begin) * g.out_w;
          for (long ox = x_lo; ox < x_hi; ++ox) {
            row_dst[ox] = src[ox + static_cast<long>(kx) - pad];
          }
        }
      }
    }
  }
}

// Scatter-adds a column block back onto the input-gradient image.
void col2im_add(const RowMatrix& cols, const ConvGeometry& g,
                std::size_t row_begin, std::size_t row_end, Tensor& grad_input) {
  double* out = grad_input.data().data();
  const auto pad = static_cast<long>(g.padding);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const double* src =
            cols.row(static_cast<Eigen::Index>((c * g.kernel_h + ky) * g.kernel_w + kx))
                .data();
        const long x_lo = std::max<long>(0, pad - static_cast<long>(kx));
        const long x_hi = std::min<long>(
            static_cast<long>(g.out_w),
            static_cast<long>(g.width) + pad - static_cast<long>(kx));
        for (std::size_t oy = row_begin; oy < row_end; ++oy) {
          const long iy = static_cast<long>(oy + ky) - pad;
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          double* dst =
              out + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          const double* row_src = src + (oy - row_begin) * g.out_w;
          for (long ox = x_lo; ox < x_hi; ++ox) {
            dst[ox + static_cast<long>(kx) - pad] += row_src[ox];
          }
        }
      }
    }
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shapes " + shape_string(a.shape()) +
                     " and " + shape_string(b.shape()) + " differ");
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              std::size_t padding) {
  const ConvGeometry g = conv_geometry(input, weights, padding);
  require_shape(bias, {g.out_channels}, "conv2d bias");

  Tensor output({g.out_channels, g.out_h, g.out_w});
  auto out = as_matrix(output, g.out_channels, g.out_h * g.out_w);
  const auto w = as_matrix(weights, g.out_channels, g.patch());
  const auto b = as_vector(bias);

  RowMatrix cols;
  const std::size_t step = rows_per_block(g);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += step) {
    const std::size_t r1 = std::min(g.out_h, r0 + step);
    im2col(input, g, r0, r1, cols);
    out.middleCols(static_cast<Eigen::Index>(r0 * g.out_w), cols.cols())
        .noalias() = w * cols;
  }
  out.colwise() += b;
  return output;
}

Tensor conv2d_backward(const Tensor& input, const Tensor& weights,
                       const Tensor& grad_output, std::size_t padding,
                       Tensor& grad_weights, Tensor& grad_bias) {
  const ConvGeometry g = conv_geometry(input, weights, padding);
  require_shape(grad_output, {g.out_channels, g.out_h, g.out_w},
                "conv2d grad_output");
  require_same_shape(grad_weights, weights, "conv2d grad_weights");
  require_shape(grad_bias, {g.out_channels}, "conv2d grad_bias");

  const auto gout = as_matrix(grad_output, g.out_channels, g.out_h * g.out_w);
  const auto w = as_matrix(weights, g.out_channels, g.patch());
  auto gw = as_matrix(grad_weights, g.out_channels, g.patch());
  as_vector(grad_bias) += gout.rowwise().sum();

  Tensor grad_input(input.shape());
  RowMatrix cols;
  RowMatrix grad_cols;
  const std::size_t step = rows_per_block(g);
  for (std::size_t r0 = 0; r0 < g.out_h; r0 += step) {
    const std::size_t r1 = std::min(g.out_h, r0 + step);
    im2col(input, g, r0, r1, cols);
    const auto block =
        gout.middleCols(static_cast<Eigen::Index>(r0 * g.out_w), cols.cols());
    gw.noalias() += block * cols.transpose();
    grad_cols.noalias() = w.transpose() * block;
    col2im_add(grad_cols, g, r0, r1, grad_input);
  }
  return grad_input;
}

Tensor maxpool2d(const Tensor& input) {
  require_rank(input, 3, "maxpool2d input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2) {
    throw ShapeError("maxpool2d needs at least 2x2 spatial extent, got " +
                     shape_string(input.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor output({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double m = input.at(ch, 2 * y, 2 * x);
        m = std::max(m, input.at(ch, 2 * y, 2 * x + 1));
        m = std::max(m, input.at(ch, 2 * y + 1, 2 * x));
        m = std::max(m, input.at(ch, 2 * y + 1, 2 * x + 1));
        output.at(ch, y, x) = m;
      }
    }
  }
  return output;
}

Tensor maxpool2d_backward(const Tensor& input, const Tensor& grad_output) {
  require_rank(input, 3, "maxpool2d input");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2) {
    throw ShapeError("maxpool2d needs at least 2x2 spatial extent, got " +
                     shape_string(input.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  require_shape(grad_output, {c, oh, ow}, "maxpool2d grad_output");
  Tensor grad_input(input.shape());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        std::size_t by = 2 * y, bx = 2 * x;
        double best = input.at(ch, by, bx);
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const double v = input.at(ch, 2 * y + dy, 2 * x + dx);
            if (v > best) {
              best = v;
              by = 2 * y + dy;
              bx = 2 * x + dx;
            }
          }
        }
        grad_input.at(ch, by, bx) += grad_output.at(ch, y, x);
      }
    }
  }
  return grad_input;
}

namespace {

struct LinearDims {
  std::size_t batch, in, out;
};

LinearDims linear_dims(const Tensor& input, const Tensor& weights) {
  require_rank(weights, 2, "linear weights");
  LinearDims d{};
  d.out = weights.dim(0);
  d.in = weights.dim(1);
  if (input.rank() == 1) {
    d.batch = 1;
  } else if (input.rank() == 2) {
    d.batch = input.dim(0);
  } else {
    throw ShapeError("linear input must be rank 1 or 2, got " +
                     shape_string(input.shape()));
  }
  if (input.shape().back() != d.in) {
    throw ShapeError("linear: input width " +
                     std::to_string(input.shape().back()) +
                     " does not match weights " +
                     shape_string(weights.shape()));
  }
  return d;
}

}  // namespace

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const LinearDims d = linear_dims(input, weights);
  require_shape(bias, {d.out}, "linear bias");
  Tensor output(input.rank() == 1 ? Shape{d.out} : Shape{d.batch, d.out});
  auto y = as_matrix(output, d.batch, d.out);
  y.noalias() = as_matrix(input, d.batch, d.in) *
                as_matrix(weights, d.out, d.in).transpose();
  y.rowwise() += as_vector(bias).transpose();
  return output;
}

Tensor linear_backward(const Tensor& input, const Tensor& weights,
                       const Tensor& grad_output, Tensor& grad_weights,
                       Tensor& grad_bias) {
  const LinearDims d = linear_dims(input, weights);
  if (grad_output.size() != d.batch * d.out) {
    throw ShapeError("linear grad_output has shape " +
                     shape_string(grad_output.shape()));
  }
  require_same_shape(grad_weights, weights, "linear grad_weights");
  require_shape(grad_bias, {d.out}, "linear grad_bias");
  const auto g = as_matrix(grad_output, d.batch, d.out);
  const auto x = as_matrix(input, d.batch, d.in);
  as_matrix(grad_weights, d.out, d.in).noalias() += g.transpose() * x;
  as_vector(grad_bias) += g.colwise().sum().transpose();
  Tensor grad_input(input.shape());
  as_matrix(grad_input, d.batch, d.in).noalias() =
      g * as_matrix(weights, d.out, d.in);
  return grad_input;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_output) {
  require_same_shape(x, grad_output, "relu_backward");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = sigmoid(v);
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_output) {
  require_same_shape(y, grad_output, "sigmoid_backward");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= y[i] * (1.0 - y[i]);
  return g;
}

Tensor tanh(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data()) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& grad_output) {
  require_same_shape(y, grad_output, "tanh_backward");
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= 1.0 - y[i] * y[i];
  return g;
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 1, "softmax input");
  Tensor y = x;
  const double m = *std::max_element(y.data().begin(), y.data().end());
  double sum = 0.0;
  for (double& v : y.data()) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : y.data()) v /= sum;
  return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& grad_output) {
  require_same_shape(y, grad_output, "softmax_backward");
  const double dot = as_vector(y).dot(as_vector(grad_output));
  Tensor g = grad_output;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = y[i] * (g[i] - dot);
  return g;
}

Tensor l2_normalize(const Tensor& x) {
  require_rank(x, 1, "l2_normalize input");
  const double norm = as_vector(x).norm();
  if (!(norm >= kMinNormForNormalize)) {
    throw DegenerateInputError("l2_normalize: vector norm " +
                               std::to_string(norm) + " is below 1e-12");
  }
  Tensor y = x;
  as_vector(y) /= norm;
  return y;
}

Tensor l2_normalize_backward(const Tensor& x, const Tensor& y,
                             const Tensor& grad_output) {
  require_same_shape(x, grad_output, "l2_normalize_backward");
  require_same_shape(y, grad_output, "l2_normalize_backward");
  const double norm = as_vector(x).norm();
  const double dot = as_vector(y).dot(as_vector(grad_output));
  Tensor g(x.shape());
  as_vector(g) = (as_vector(grad_output) - dot * as_vector(y)) / norm;
  return g;
}

SapForward sap_pool(const Tensor& h, const SapParams& params) {
  require_rank(h, 2, "sap_pool input");
  const std::size_t d = h.dim(0), t = h.dim(1);
  if (t == 0) throw DegenerateInputError("sap_pool: no frames");
  require_rank(params.w, 2, "sap_pool W");
  const std::size_t da = params.w.dim(0);
  if (params.w.dim(1) != d) {
    throw ShapeError("sap_pool: frames have dimension " + std::to_string(d) +
                     " but W is " + shape_string(params.w.shape()));
  }
  require_shape(params.b, {da}, "sap_pool b");
  require_shape(params.v, {da}, "sap_pool v");

  const auto hm = as_matrix(h, d, t);
  SapForward f{Tensor({d}), Tensor({t}), Tensor({da, t})};
  auto u = as_matrix(f.hidden, da, t);
  u.noalias() = as_matrix(params.w, da, d) * hm;
  u.colwise() += as_vector(params.b);
  u = u.array().tanh().matrix();
  Tensor scores({t});
  as_vector(scores).noalias() = u.transpose() * as_vector(params.v);
  f.weights = softmax(scores);
  as_vector(f.output).noalias() = hm * as_vector(f.weights);
  return f;
}

Tensor sap_pool_backward(const Tensor& h, const SapParams& params,
                         const SapForward& forward, const Tensor& grad_output,
                         const SapGrads& grads) {
  const std::size_t d = h.dim(0), t = h.dim(1), da = params.w.dim(0);
  require_shape(grad_output, {d}, "sap_pool grad_output");
  require_same_shape(grads.w, params.w, "sap_pool grad W");
  require_same_shape(grads.b, params.b, "sap_pool grad b");
  require_same_shape(grads.v, params.v, "sap_pool grad v");

  const auto hm = as_matrix(h, d, t);
  const auto g = as_vector(grad_output);
  const auto alpha = as_vector(forward.weights);
  const auto u = as_matrix(forward.hidden, da, t);

  const Eigen::VectorXd d_alpha = hm.transpose() * g;
  const Eigen::VectorXd d_scores =
      alpha.array() * (d_alpha.array() - alpha.dot(d_alpha));

  Tensor grad_h({d, t});
  auto gh = as_matrix(grad_h, d, t);
  gh.noalias() = g * alpha.transpose();

  const RowMatrix d_pre =
      ((as_vector(params.v) * d_scores.transpose()).array() *
       (1.0 - u.array().square()))
          .matrix();
  as_matrix(grads.w, da, d).noalias() += d_pre * hm.transpose();
  as_vector(grads.b) += d_pre.rowwise().sum();
  as_vector(grads.v).noalias() += u * d_scores;
  gh.noalias() += as_matrix(params.w, da, d).transpose() * d_pre;
  return grad_h;
}

}  // namespace ssv::nn
