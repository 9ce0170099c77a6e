#pragma once

// Adam with bias correction. One state object per trained parameter set;
// moment buffers are laid out parallel to the parameter list.

#include <cmath>
#include <vector>

#include "c3ae/errors.hpp"
#include "c3ae/tensor.hpp"

namespace c3ae::nn {

template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;
  std::vector<std::vector<T>> m;  // first moments
  std::vector<std::vector<T>> v;  // second moments

  void init(const std::vector<Tensor<T>*>& params) {
    m.clear();
    v.clear();
    for (const Tensor<T>* p : params) {
      m.emplace_back(p->numel(), T(0));
      v.emplace_back(p->numel(), T(0));
    }
    step_count = 0;
  }
};

/// One optimizer step; reads each parameter's .grad. Parameter order must
/// match the list the state was initialized with.
template <class T>
void adam_step(const std::vector<Tensor<T>*>& params, AdamState<T>& st) {
  if (st.m.size() != params.size())
    throw DomainError("adam_step: state does not match parameter list");
  ++st.step_count;
  const double bc1 = 1.0 - std::pow(st.beta1, st.step_count);
  const double bc2 = 1.0 - std::pow(st.beta2, st.step_count);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = *params[k];
    if (p.grad.size() != p.numel())
      throw DomainError("adam_step: parameter has no gradient");
    if (st.m[k].size() != p.numel())
      throw DomainError("adam_step: moment shape mismatch");
    for (std::size_t i = 0; i < p.numel(); ++i) {
      const double g = static_cast<double>(p.grad[i]);
      const double m = st.beta1 * st.m[k][i] + (1.0 - st.beta1) * g;
      const double v = st.beta2 * st.v[k][i] + (1.0 - st.beta2) * g * g;
      st.m[k][i] = static_cast<T>(m);
      st.v[k][i] = static_cast<T>(v);
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p.data[i] -= static_cast<T>(st.lr * m_hat / (std::sqrt(v_hat) + st.eps));
    }
  }
}

}  // namespace c3ae::nn
