#pragma once

// Differentiable tensor operations on NCHW batches. Each op is a pure
// function pair: forward optionally fills a small context, backward consumes
// it. Convolutions run as im2col + GEMM; everything else is plain loops.
//
// Conventions:
//   x : input  [N, C, H, W]
//   w : kernels [O, C, k, k], b : bias [O]
//   stride is always 1; padding is "same" (pad_begin = (k-1)/2,
//   pad_end = k/2), so output spatial size equals input spatial size.

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "c3ae/errors.hpp"
#include "c3ae/tensor.hpp"

namespace c3ae::nn {

template <class T>
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha,
                 const T* a, int lda, const T* b, int ldb, T beta, T* c,
                 int ldc) {
  const CBLAS_TRANSPOSE ta = trans_a ? CblasTrans : CblasNoTrans;
  const CBLAS_TRANSPOSE tb = trans_b ? CblasTrans : CblasNoTrans;
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
  } else {
    cblas_dgemm(CblasRowMajor, ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c,
                ldc);
  }
}

// ---------------------------------------------------------------------------
// conv2d

template <class T>
struct Conv2dCtx {
  std::vector<int> in_shape;
  Tensor<T> cols;  // [N, C*k*k, H*W]
};

namespace detail {

template <class T>
void im2col_same(const Tensor<T>& x, int n, int k, T* cols) {
  const int C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int pad = (k - 1) / 2;
  const T* img = x.data.data() + x.index4(n, 0, 0, 0);
  // cols is [C*k*k, H*W]; row index (c, dh, dw), column index (h, w).
  std::size_t row = 0;
  for (int c = 0; c < C; ++c) {
    for (int dh = 0; dh < k; ++dh) {
      for (int dw = 0; dw < k; ++dw, ++row) {
        T* dst = cols + row * static_cast<std::size_t>(H) * W;
        for (int h = 0; h < H; ++h) {
          const int sh = h + dh - pad;
          if (sh < 0 || sh >= H) {
            std::fill(dst, dst + W, T(0));
            dst += W;
            continue;
          }
          const T* src = img + (static_cast<std::size_t>(c) * H + sh) * W;
          for (int w = 0; w < W; ++w) {
            const int sw = w + dw - pad;
            *dst++ = (sw < 0 || sw >= W) ? T(0) : src[sw];
          }
        }
      }
    }
  }
}

template <class T>
void col2im_same(const T* cols, int C, int H, int W, int k, T* img) {
  const int pad = (k - 1) / 2;
  std::size_t row = 0;
  for (int c = 0; c < C; ++c) {
    for (int dh = 0; dh < k; ++dh) {
      for (int dw = 0; dw < k; ++dw, ++row) {
        const T* src = cols + row * static_cast<std::size_t>(H) * W;
        for (int h = 0; h < H; ++h, src += W) {
          const int sh = h + dh - pad;
          if (sh < 0 || sh >= H) continue;
          T* dst = img + (static_cast<std::size_t>(c) * H + sh) * W;
          for (int w = 0; w < W; ++w) {
            const int sw = w + dw - pad;
            if (sw >= 0 && sw < W) dst[sw] += src[w];
          }
        }
      }
    }
  }
}

}  // namespace detail

/// Cross-correlation with bias, stride 1, "same" zero padding. Output is
/// [N, O, H, W]. Pass a context to enable the backward pass.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 Conv2dCtx<T>* ctx = nullptr) {
  if (x.ndim() != 4 || w.ndim() != 4) throw DomainError("conv2d: need 4-d tensors");
  if (w.dim(2) != w.dim(3)) throw DomainError("conv2d: kernels must be square");
  if (x.dim(1) != w.dim(1))
    throw DomainError("conv2d: channel mismatch " + shape_string(x.shape) +
                      " vs " + shape_string(w.shape));
  if (b.numel() != static_cast<std::size_t>(w.dim(0)))
    throw DomainError("conv2d: bias size mismatch");
  const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
  const int O = w.dim(0), k = w.dim(2);
  if (k > H || k > W) throw DomainError("conv2d: kernel larger than input");

  const int ckk = x.dim(1) * k * k;
  const int hw = H * W;
  Tensor<T> cols({N, ckk, hw});
  Tensor<T> y({N, O, H, W});
  for (int n = 0; n < N; ++n) {
    T* cols_n = cols.data.data() + static_cast<std::size_t>(n) * ckk * hw;
    detail::im2col_same(x, n, k, cols_n);
    T* y_n = y.data.data() + y.index4(n, 0, 0, 0);
    gemm<T>(false, false, O, hw, ckk, T(1), w.data.data(), ckk, cols_n, hw,
            T(0), y_n, hw);
    for (int o = 0; o < O; ++o) {
      T* dst = y_n + static_cast<std::size_t>(o) * hw;
      const T bias = b.data[o];
      for (int i = 0; i < hw; ++i) dst[i] += bias;
    }
  }
  if (ctx) {
    ctx->in_shape = x.shape;
    ctx->cols = std::move(cols);
  }
  return y;
}

/// Reverse pass for conv2d. Accumulates (+=) into w_grad / b_grad, which must
/// be pre-sized; returns the input gradient unless `need_input_grad` is off.
template <class T>
Tensor<T> conv2d_backward(const Tensor<T>& gy, const Tensor<T>& w,
                          const Conv2dCtx<T>& ctx, std::vector<T>& w_grad,
                          std::vector<T>& b_grad, bool need_input_grad = true) {
  const int N = ctx.in_shape[0], C = ctx.in_shape[1];
  const int H = ctx.in_shape[2], W = ctx.in_shape[3];
  const int O = w.dim(0), k = w.dim(2);
  const int ckk = C * k * k;
  const int hw = H * W;
  if (gy.shape != std::vector<int>{N, O, H, W})
    throw DomainError("conv2d_backward: bad output-gradient shape");
  if (w_grad.size() != w.numel() || b_grad.size() != static_cast<std::size_t>(O))
    throw DomainError("conv2d_backward: gradient buffers not sized");

  Tensor<T> gx;
  if (need_input_grad) gx = Tensor<T>(ctx.in_shape);
  std::vector<T> colgrad(need_input_grad ? static_cast<std::size_t>(ckk) * hw
                                         : 0);
  for (int n = 0; n < N; ++n) {
    const T* gy_n = gy.data.data() + gy.index4(n, 0, 0, 0);
    const T* cols_n =
        ctx.cols.data.data() + static_cast<std::size_t>(n) * ckk * hw;
    // dL/dW += gy_n * cols_n^T
    gemm<T>(false, true, O, ckk, hw, T(1), gy_n, hw, cols_n, hw, T(1),
            w_grad.data(), ckk);
    for (int o = 0; o < O; ++o) {
      const T* src = gy_n + static_cast<std::size_t>(o) * hw;
      T acc = 0;
      for (int i = 0; i < hw; ++i) acc += src[i];
      b_grad[o] += acc;
    }
    if (need_input_grad) {
      // dL/dcols = W^T * gy_n, then scatter back through the padding map.
      gemm<T>(true, false, ckk, hw, O, T(1), w.data.data(), ckk, gy_n, hw,
              T(0), colgrad.data(), hw);
      detail::col2im_same(colgrad.data(), C, H, W, k,
                          gx.data.data() + gx.index4(n, 0, 0, 0));
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// maxpool2 (2x2 windows, stride 2)

template <class T>
struct MaxPool2Ctx {
  std::vector<int> in_shape;
  std::vector<std::size_t> argmax;  // flat source index per output element
};

template <class T>
Tensor<T> maxpool2(const Tensor<T>& x, MaxPool2Ctx<T>* ctx = nullptr) {
  if (x.ndim() != 4) throw DomainError("maxpool2: need a 4-d tensor");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0)
    throw DomainError("maxpool2: spatial dims must be even, got " +
                      shape_string(x.shape));
  Tensor<T> y({N, C, H / 2, W / 2});
  std::vector<std::size_t> argmax(y.numel());
  std::size_t oi = 0;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int h = 0; h < H; h += 2) {
        for (int w = 0; w < W; w += 2, ++oi) {
          std::size_t best = x.index4(n, c, h, w);
          T bv = x.data[best];
          // first occurrence wins ties (scan order: (h,w),(h,w+1),(h+1,*))
          const std::size_t cand[3] = {x.index4(n, c, h, w + 1),
                                       x.index4(n, c, h + 1, w),
                                       x.index4(n, c, h + 1, w + 1)};
          for (std::size_t idx : cand) {
            if (x.data[idx] > bv) {
              bv = x.data[idx];
              best = idx;
            }
          }
          y.data[oi] = bv;
          argmax[oi] = best;
        }
      }
    }
  }
  if (ctx) {
    ctx->in_shape = x.shape;
    ctx->argmax = std::move(argmax);
  }
  return y;
}

template <class T>
Tensor<T> maxpool2_backward(const Tensor<T>& gy, const MaxPool2Ctx<T>& ctx) {
  Tensor<T> gx(ctx.in_shape);
  for (std::size_t i = 0; i < gy.numel(); ++i)
    gx.data[ctx.argmax[i]] += gy.data[i];
  return gx;
}

// ---------------------------------------------------------------------------
// upsample2_nearest (each pixel becomes a 2x2 block)

template <class T>
Tensor<T> upsample2_nearest(const Tensor<T>& x) {
  if (x.ndim() != 4) throw DomainError("upsample2_nearest: need a 4-d tensor");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> y({N, C, H * 2, W * 2});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
          const T v = x.at4(n, c, h, w);
          y.at4(n, c, 2 * h, 2 * w) = v;
          y.at4(n, c, 2 * h, 2 * w + 1) = v;
          y.at4(n, c, 2 * h + 1, 2 * w) = v;
          y.at4(n, c, 2 * h + 1, 2 * w + 1) = v;
        }
  return y;
}

template <class T>
Tensor<T> upsample2_nearest_backward(const Tensor<T>& gy) {
  const int N = gy.dim(0), C = gy.dim(1), H2 = gy.dim(2), W2 = gy.dim(3);
  Tensor<T> gx({N, C, H2 / 2, W2 / 2});
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H2; ++h)
        for (int w = 0; w < W2; ++w)
          gx.at4(n, c, h / 2, w / 2) += gy.at4(n, c, h, w);
  return gx;
}

// ---------------------------------------------------------------------------
// global average pool over the spatial extent: [N,C,H,W] -> [N,C,1,1]

template <class T>
struct GlobalAvgPoolCtx {
  std::vector<int> in_shape;
};

template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x, GlobalAvgPoolCtx<T>* ctx = nullptr) {
  if (x.ndim() != 4) throw DomainError("global_avg_pool: need a 4-d tensor");
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> y({N, C, 1, 1});
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T* src = x.data.data() + x.index4(n, c, 0, 0);
      double acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += src[i];
      y.at4(n, c, 0, 0) = static_cast<T>(acc / static_cast<double>(hw));
    }
  if (ctx) ctx->in_shape = x.shape;
  return y;
}

template <class T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& gy,
                                   const GlobalAvgPoolCtx<T>& ctx) {
  Tensor<T> gx(ctx.in_shape);
  const int N = ctx.in_shape[0], C = ctx.in_shape[1];
  const int H = ctx.in_shape[2], W = ctx.in_shape[3];
  const T inv = T(1) / static_cast<T>(H * W);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const T g = gy.at4(n, c, 0, 0) * inv;
      T* dst = gx.data.data() + gx.index4(n, c, 0, 0);
      for (int i = 0; i < H * W; ++i) dst[i] += g;
    }
  return gx;
}

// ---------------------------------------------------------------------------
// elementwise activations

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = v > T(0) ? v : T(0);
  return y;
}

/// Backward needs the forward *input*.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& gy, const Tensor<T>& x) {
  Tensor<T> gx = gy;
  for (std::size_t i = 0; i < gx.numel(); ++i)
    if (!(x.data[i] > T(0))) gx.data[i] = T(0);
  return gx;
}

template <class T>
T sigmoid_scalar(T v) {
  if (v >= T(0)) {
    const T e = std::exp(-v);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(v);
  return e / (T(1) + e);
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data) v = sigmoid_scalar(v);
  return y;
}

/// Backward needs the forward *output*.
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& gy, const Tensor<T>& y) {
  Tensor<T> gx = gy;
  for (std::size_t i = 0; i < gx.numel(); ++i)
    gx.data[i] *= y.data[i] * (T(1) - y.data[i]);
  return gx;
}

template <class T>
Tensor<T> softplus(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.data)
    v = v > T(30) ? v : std::log1p(std::exp(v));
  return y;
}

template <class T>
Tensor<T> softplus_backward(const Tensor<T>& gy, const Tensor<T>& x) {
  Tensor<T> gx = gy;
  for (std::size_t i = 0; i < gx.numel(); ++i)
    gx.data[i] *= sigmoid_scalar(x.data[i]);
  return gx;
}

// ---------------------------------------------------------------------------
// dropout (inverted: survivors scaled by 1/(1-rate); eval mode is identity)

template <class T>
struct DropoutCtx {
  std::vector<T> scale;  // per-element multiplier, empty when inactive
};

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng,
                  DropoutCtx<T>* ctx = nullptr) {
  if (rate < 0.0 || rate >= 1.0)
    throw DomainError("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    if (ctx) ctx->scale.clear();
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> y = x;
  std::vector<T> scale(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    scale[i] = rng.uniform() < rate ? T(0) : keep_scale;
    y.data[i] *= scale[i];
  }
  if (ctx) ctx->scale = std::move(scale);
  return y;
}

template <class T>
Tensor<T> dropout_backward(const Tensor<T>& gy, const DropoutCtx<T>& ctx) {
  if (ctx.scale.empty()) return gy;
  Tensor<T> gx = gy;
  for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] *= ctx.scale[i];
  return gx;
}

// ---------------------------------------------------------------------------
// row-wise L2 normalization of an [N, K] matrix

template <class T>
struct RowNormCtx {
  Tensor<T> y;
  std::vector<T> norms;
};

template <class T>
Tensor<T> row_l2_normalize(const Tensor<T>& x, RowNormCtx<T>* ctx = nullptr) {
  if (x.ndim() != 2) throw DomainError("row_l2_normalize: need a 2-d tensor");
  const int N = x.dim(0), K = x.dim(1);
  Tensor<T> y = x;
  std::vector<T> norms(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) {
    double acc = 0;
    for (int j = 0; j < K; ++j) acc += double(x.at2(n, j)) * x.at2(n, j);
    const T nos = static_cast<T>(std::sqrt(acc));
    if (!(nos > T(0)))
      throw DomainError("row_l2_normalize: zero-norm row");
    norms[n] = nos;
    for (int j = 0; j < K; ++j) y.at2(n, j) /= nos;
  }
  if (ctx) {
    ctx->y = y;
    ctx->norms = std::move(norms);
  }
  return y;
}

template <class T>
Tensor<T> row_l2_normalize_backward(const Tensor<T>& gy,
                                    const RowNormCtx<T>& ctx) {
  const int N = gy.dim(0), K = gy.dim(1);
  Tensor<T> gx = gy;
  for (int n = 0; n < N; ++n) {
    double dot = 0;
    for (int j = 0; j < K; ++j) dot += double(gy.at2(n, j)) * ctx.y.at2(n, j);
    for (int j = 0; j < K; ++j)
      gx.at2(n, j) = (gy.at2(n, j) - static_cast<T>(dot) * ctx.y.at2(n, j)) /
                     ctx.norms[static_cast<std::size_t>(n)];
  }
  return gx;
}

}  // namespace c3ae::nn
