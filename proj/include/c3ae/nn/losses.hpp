#pragma once

// Scalar training losses. Each returns the loss value and, when an output
// tensor is supplied, overwrites it with d(loss)/d(first argument).

#include <algorithm>
#include <cmath>

#include "c3ae/color.hpp"
#include "c3ae/errors.hpp"
#include "c3ae/tensor.hpp"

namespace c3ae::nn {

/// Mean binary cross-entropy over all elements. Predictions are clamped to
/// [1e-7, 1 - 1e-7] before the logs; the clamp is treated as part of the
/// function, so gradients vanish in the clamped region.
template <class T>
double bce_loss(const Tensor<T>& pred, const Tensor<T>& target,
                Tensor<T>* grad_pred = nullptr) {
  if (!pred.same_shape(target))
    throw DomainError("bce_loss: shape mismatch " + shape_string(pred.shape) +
                      " vs " + shape_string(target.shape));
  if (pred.numel() == 0) throw DomainError("bce_loss: empty tensors");
  constexpr double eps = 1e-7;
  const double inv_n = 1.0 / static_cast<double>(pred.numel());
  if (grad_pred) {
    grad_pred->shape = pred.shape;
    grad_pred->data.assign(pred.numel(), T(0));
  }
  double acc = 0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    const double p_raw = static_cast<double>(pred.data[i]);
    const double p = std::clamp(p_raw, eps, 1.0 - eps);
    const double t = static_cast<double>(target.data[i]);
    acc -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    if (grad_pred) {
      const bool clamped = p_raw < eps || p_raw > 1.0 - eps;
      const double g = clamped ? 0.0 : (p - t) / (p * (1.0 - p)) * inv_n;
      grad_pred->data[i] = static_cast<T>(g);
    }
  }
  return acc * inv_n;
}

/// Mean recovery angular error in degrees over a batch of [N, 3] rows.
/// The cosine is clamped away from +-1; the gradient uses the clamped cosine
/// in the acos derivative so it stays finite even for near-parallel rows.
/// The clamp width keeps the angle floor for identical rows below 0.01
/// degrees: acos(1 - 1e-9) = 0.0026 degrees.
template <class T>
double rae_loss(const Tensor<T>& est, const Tensor<T>& gt,
                Tensor<T>* grad_est = nullptr) {
  if (est.ndim() != 2 || est.dim(1) != 3 || !est.same_shape(gt))
    throw DomainError("rae_loss: need matching [N, 3] tensors");
  const int N = est.dim(0);
  constexpr double c_eps = 1e-9;
  const double deg = 180.0 / kPi;
  if (grad_est) {
    grad_est->shape = est.shape;
    grad_est->data.assign(est.numel(), T(0));
  }
  double acc = 0;
  for (int n = 0; n < N; ++n) {
    double e[3], g[3];
    for (int j = 0; j < 3; ++j) {
      e[j] = static_cast<double>(est.at2(n, j));
      g[j] = static_cast<double>(gt.at2(n, j));
      if (!(g[j] > 0.0))
        throw DomainError("rae_loss: ground truth rows must be strictly positive");
    }
    const double ne = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    const double ng = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
    if (!(ne > 0.0)) throw DomainError("rae_loss: zero-norm estimate row");
    const double dot = e[0] * g[0] + e[1] * g[1] + e[2] * g[2];
    const double c = std::clamp(dot / (ne * ng), -1.0 + c_eps, 1.0 - c_eps);
    acc += std::acos(c) * deg;
    if (grad_est) {
      // d acos(c)/d e_j through c = e.g / (|e||g|), in degrees, batch mean.
      const double dacos = -deg / std::sqrt(1.0 - c * c);
      const double scale = dacos / static_cast<double>(N);
      for (int j = 0; j < 3; ++j) {
        const double dc = g[j] / (ne * ng) - c * e[j] / (ne * ne);
        grad_est->data[est.index2(n, j)] = static_cast<T>(scale * dc);
      }
    }
  }
  return acc / static_cast<double>(N);
}

}  // namespace c3ae::nn
