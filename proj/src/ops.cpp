// Copyright 2026 The CSRN Authors
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

#include "csrn/ops.hpp"

#include <algorithm>

namespace csrn {

namespace {

template <typename Scalar>
using ColMajor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct ConvGeometry {
  Index channels, height, width, kernel, stride, padding, out_h, out_w;

  Index patch() const { return channels * kernel * kernel; }
  Index pixels() const { return out_h * out_w; }
  bool pointwise() const { return kernel == 1 && stride == 1 && padding == 0; }
};

ConvGeometry geometry(const Shape& in, const Shape& weight, const ConvSpec& spec) {
  if (weight.n != spec.out_channels) {
    throw DimensionError("conv2d: weight has " + std::to_string(weight.n) +
                         " output channels, spec expects " + std::to_string(spec.out_channels));
  }
  if (weight.c != in.c) {
    throw DimensionError("conv2d: channels axis mismatch, input has " + std::to_string(in.c) +
                         " channels, weight expects " + std::to_string(weight.c));
  }
  if (weight.h != spec.kernel || weight.w != spec.kernel) {
    throw DimensionError("conv2d: weight kernel " + std::to_string(weight.h) + "x" +
                         std::to_string(weight.w) + " does not match ConvSpec kernel " +
                         std::to_string(spec.kernel));
  }
  return {in.c,
          in.h,
          in.w,
          spec.kernel,
          spec.stride,
          spec.padding,
          spec.output_extent(in.h, "rows"),
          spec.output_extent(in.w, "cols")};
}

// Column j = (c, ky, kx) holds the input value under that kernel tap for every output pixel.
template <typename Scalar>
void im2col(const Scalar* image, const ConvGeometry& g, ColMajor<Scalar>& col) {
  col.resize(g.pixels(), g.patch());
  for (Index c = 0; c < g.channels; ++c) {
    const Scalar* src = image + c * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx) {
        Scalar* dst = col.col((c * g.kernel + ky) * g.kernel + kx).data();
        for (Index oy = 0; oy < g.out_h; ++oy) {
          const Index iy = oy * g.stride - g.padding + ky;
          Scalar* row = dst + oy * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(row, row + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* srow = src + iy * g.width;
          for (Index ox = 0; ox < g.out_w; ++ox) {
            const Index ix = ox * g.stride - g.padding + kx;
            row[ox] = (ix >= 0 && ix < g.width) ? srow[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const ColMajor<Scalar>& col, const ConvGeometry& g, Scalar* image) {
  for (Index c = 0; c < g.channels; ++c) {
    Scalar* dst = image + c * g.height * g.width;
    for (Index ky = 0; ky < g.kernel; ++ky) {
      for (Index kx = 0; kx < g.kernel; ++kx) {
        const Scalar* src = col.col((c * g.kernel + ky) * g.kernel + kx).data();
        for (Index oy = 0; oy < g.out_h; ++oy) {
          const Index iy = oy * g.stride - g.padding + ky;
          if (iy < 0 || iy >= g.height) continue;
          Scalar* drow = dst + iy * g.width;
          const Scalar* row = src + oy * g.out_w;
          for (Index ox = 0; ox < g.out_w; ++ox) {
            const Index ix = ox * g.stride - g.padding + kx;
            if (ix >= 0 && ix < g.width) drow[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Index ConvSpec::output_extent(Index in, const char* axis) const {
  if (kernel < 1 || stride < 1 || padding < 0) {
    throw GeometryError("conv2d: invalid kernel/stride/padding");
  }
  const Index span = in + 2 * padding - kernel;
  if (span < 0 || span % stride != 0) {
    throw GeometryError(std::string("conv2d: ") + axis + " extent " + std::to_string(in) +
                        " with kernel " + std::to_string(kernel) + ", stride " +
                        std::to_string(stride) + ", padding " + std::to_string(padding) +
                        " does not tile exactly");
  }
  return span / stride + 1;
}

template <typename Scalar>
Tensor<Scalar> conv2d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>* bias, const ConvSpec& spec) {
  const auto g = geometry(input.shape(), weight.shape(), spec);
  if (spec.bias != (bias != nullptr)) {
    throw DimensionError("conv2d: bias presence does not match ConvSpec");
  }
  if (bias && bias->size() != spec.out_channels) {
    throw DimensionError("conv2d: bias length " + std::to_string(bias->size()) +
                         " does not match output channels " + std::to_string(spec.out_channels));
  }
  const Index batch = input.shape().n;
  Tensor<Scalar> out(Shape{batch, spec.out_channels, g.out_h, g.out_w});
  Eigen::Map<const ColMajor<Scalar>> w(weight.data(), g.patch(), spec.out_channels);
  ColMajor<Scalar> col;
  for (Index n = 0; n < batch; ++n) {
    Eigen::Map<ColMajor<Scalar>> o(out.data() + n * spec.out_channels * g.pixels(), g.pixels(),
                                   spec.out_channels);
    const Scalar* image = input.data() + n * g.channels * g.height * g.width;
    if (g.pointwise()) {
      Eigen::Map<const ColMajor<Scalar>> x(image, g.pixels(), g.channels);
      o.noalias() = x * w;
    } else {
      im2col(image, g, col);
      o.noalias() = col * w;
    }
    if (bias) {
      o.rowwise() += bias->array().matrix().transpose();
    }
  }
  return out;
}

template <typename Scalar>
void conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                     const Tensor<Scalar>& grad_output, const ConvSpec& spec,
                     Tensor<Scalar>* grad_input, Tensor<Scalar>* grad_weight,
                     Tensor<Scalar>* grad_bias) {
  const auto g = geometry(input.shape(), weight.shape(), spec);
  const Index batch = input.shape().n;
  require_same_shape(grad_output.shape(), Shape{batch, spec.out_channels, g.out_h, g.out_w},
                     "conv2d backward");
  Eigen::Map<const ColMajor<Scalar>> w(weight.data(), g.patch(), spec.out_channels);
  ColMajor<Scalar> col;
  ColMajor<Scalar> dcol;
  for (Index n = 0; n < batch; ++n) {
    Eigen::Map<const ColMajor<Scalar>> go(grad_output.data() + n * spec.out_channels * g.pixels(),
                                          g.pixels(), spec.out_channels);
    const Index image_offset = n * g.channels * g.height * g.width;
    if (grad_bias) {
      grad_bias->array() += go.colwise().sum().transpose().array();
    }
    if (g.pointwise()) {
      Eigen::Map<const ColMajor<Scalar>> x(input.data() + image_offset, g.pixels(), g.channels);
      if (grad_weight) {
        Eigen::Map<ColMajor<Scalar>> gw(grad_weight->data(), g.patch(), spec.out_channels);
        gw.noalias() += x.transpose() * go;
      }
      if (grad_input) {
        Eigen::Map<ColMajor<Scalar>> gi(grad_input->data() + image_offset, g.pixels(), g.channels);
        gi.noalias() += go * w.transpose();
      }
      continue;
    }
    if (grad_weight) {
      im2col(input.data() + image_offset, g, col);
      Eigen::Map<ColMajor<Scalar>> gw(grad_weight->data(), g.patch(), spec.out_channels);
      gw.noalias() += col.transpose() * go;
    }
    if (grad_input) {
      dcol.noalias() = go * w.transpose();
      col2im_add(dcol, g, grad_input->data() + image_offset);
    }
  }
}

template <typename Scalar>
Tensor<Scalar> pixel_shuffle(const Tensor<Scalar>& input, Index upscale) {
  const Shape& s = input.shape();
  if (upscale < 1) throw GeometryError("pixel_shuffle: upscale factor must be >= 1");
  const Index u2 = upscale * upscale;
  if (s.c % u2 != 0) {
    throw DimensionError("pixel_shuffle: channels " + std::to_string(s.c) +
                         " not divisible by upscale² = " + std::to_string(u2));
  }
  Tensor<Scalar> out(Shape{s.n, s.c / u2, s.h * upscale, s.w * upscale});
  for (Index n = 0; n < s.n; ++n) {
    for (Index c = 0; c < s.c; ++c) {
      const Index oc = c / u2;
      const Index dy = (c % u2) / upscale;
      const Index dx = c % upscale;
      for (Index y = 0; y < s.h; ++y) {
        for (Index x = 0; x < s.w; ++x) {
          out(n, oc, y * upscale + dy, x * upscale + dx) = input(n, c, y, x);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> pixel_unshuffle(const Tensor<Scalar>& input, Index downscale) {
  const Shape& s = input.shape();
  if (downscale < 1) throw GeometryError("pixel_unshuffle: factor must be >= 1");
  if (s.h % downscale != 0 || s.w % downscale != 0) {
    throw GeometryError("pixel_unshuffle: spatial dims " + s.str() + " not divisible by " +
                        std::to_string(downscale));
  }
  const Index u2 = downscale * downscale;
  Tensor<Scalar> out(Shape{s.n, s.c * u2, s.h / downscale, s.w / downscale});
  const Shape& o = out.shape();
  for (Index n = 0; n < o.n; ++n) {
    for (Index c = 0; c < o.c; ++c) {
      const Index ic = c / u2;
      const Index dy = (c % u2) / downscale;
      const Index dx = c % downscale;
      for (Index y = 0; y < o.h; ++y) {
        for (Index x = 0; x < o.w; ++x) {
          out(n, c, y, x) = input(n, ic, y * downscale + dy, x * downscale + dx);
        }
      }
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& input) {
  return Tensor<Scalar>(input.shape(), input.array().max(Scalar(0)));
}

template <typename Scalar>
Tensor<Scalar> concat_channels(std::span<const Tensor<Scalar>* const> inputs) {
  if (inputs.empty()) throw DimensionError("concat_channels: no inputs");
  const Shape first = inputs.front()->shape();
  Index channels = 0;
  for (const auto* t : inputs) {
    const Shape& s = t->shape();
    if (s.n != first.n) throw DimensionError("concat_channels: batch axis mismatch");
    if (s.h != first.h) throw DimensionError("concat_channels: rows axis mismatch");
    if (s.w != first.w) throw DimensionError("concat_channels: cols axis mismatch");
    channels += s.c;
  }
  Tensor<Scalar> out(Shape{first.n, channels, first.h, first.w});
  const Index plane = first.plane();
  for (Index n = 0; n < first.n; ++n) {
    Scalar* dst = out.data() + n * channels * plane;
    for (const auto* t : inputs) {
      const Index block = t->shape().c * plane;
      const Scalar* src = t->data() + n * block;
      std::copy(src, src + block, dst);
      dst += block;
    }
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> add(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "add");
  return Tensor<Scalar>(a.shape(), a.array() + b.array());
}

template <typename Scalar>
Tensor<Scalar> sub(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "sub");
  return Tensor<Scalar>(a.shape(), a.array() - b.array());
}

template <typename Scalar>
Scalar sse(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "sse");
  return (a.array() - b.array()).square().sum();
}

template <typename Scalar>
Scalar mse(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a.shape(), b.shape(), "mse");
  return sse(a, b) / static_cast<Scalar>(a.size());
}

#define CSRN_INSTANTIATE_OPS(T)                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,              \
                            const ConvSpec&);                                                  \
  template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                const ConvSpec&, Tensor<T>*, Tensor<T>*, Tensor<T>*);          \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, Index);                                   \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, Index);                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                   \
  template Tensor<T> concat_channels(std::span<const Tensor<T>* const>);                       \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template T sse(const Tensor<T>&, const Tensor<T>&);                                          \
  template T mse(const Tensor<T>&, const Tensor<T>&);

CSRN_INSTANTIATE_OPS(float)
CSRN_INSTANTIATE_OPS(double)

#undef CSRN_INSTANTIATE_OPS

}  // namespace csrn
