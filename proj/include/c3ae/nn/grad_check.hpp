#pragma once

// Central finite-difference gradient checker. The function under test is
// re-evaluated with single elements perturbed; its analytic gradient must
// already be stored in each input's .grad.
//
// The reported error for element i is |analytic_i - numeric_i| divided by
// the largest numeric gradient magnitude of that tensor (with a small
// floor). Normalizing by the per-tensor peak keeps elements whose true
// gradient is tiny from drowning the check in finite-difference noise while
// still flagging uniformly wrong gradients: an everywhere-doubled gradient
// scores about 1.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "c3ae/errors.hpp"
#include "c3ae/rng.hpp"
#include "c3ae/tensor.hpp"

namespace c3ae::nn {

struct GradCheckOpts {
  double step = 1e-3;
  /// 0 = check every element; otherwise a deterministic random sample of
  /// this many elements per tensor (used for large compositions).
  std::size_t max_samples_per_tensor = 0;
  std::uint64_t sample_seed = 0;
};

/// `fn` evaluates the scalar function of the current contents of `inputs`
/// (it must be deterministic and must not read .grad). Returns the max
/// relative error across all checked elements.
template <class T, class Fn>
double grad_check(Fn&& fn, const std::vector<Tensor<T>*>& inputs,
                  GradCheckOpts opts = {}) {
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor<T>& t = *inputs[k];
    if (t.grad.size() != t.numel())
      throw DomainError("grad_check: input has no analytic gradient");

    std::vector<std::size_t> idx;
    if (opts.max_samples_per_tensor == 0 ||
        opts.max_samples_per_tensor >= t.numel()) {
      idx.resize(t.numel());
      for (std::size_t i = 0; i < t.numel(); ++i) idx[i] = i;
    } else {
      Rng rng = Rng::derive(opts.sample_seed, k, t.numel());
      idx.resize(opts.max_samples_per_tensor);
      for (auto& i : idx)
        i = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(t.numel() - 1)));
    }

    std::vector<double> numeric(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::size_t i = idx[j];
      const T saved = t.data[i];
      t.data[i] = saved + static_cast<T>(opts.step);
      const double f_plus = fn();
      t.data[i] = saved - static_cast<T>(opts.step);
      const double f_minus = fn();
      t.data[i] = saved;
      numeric[j] = (f_plus - f_minus) / (2.0 * opts.step);
    }

    double peak = 0.0;
    for (double nv : numeric) peak = std::max(peak, std::abs(nv));
    const double denom = std::max(peak, 1e-8);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const double analytic = static_cast<double>(t.grad[idx[j]]);
      worst = std::max(worst, std::abs(analytic - numeric[j]) / denom);
    }
  }
  return worst;
}

}  // namespace c3ae::nn
