#pragma once

// Dense N-d array of float32 (training) or float64 (finite-difference
// checking) with optional same-shape gradient storage. Image batches use
// NCHW order.

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "c3ae/errors.hpp"
#include "c3ae/rng.hpp"

namespace c3ae {

template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until ensure_grad()

  Tensor() = default;
  explicit Tensor(std::vector<int> s)
      : shape(std::move(s)), data(numel_of(shape), T(0)) {}

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw DomainError("tensor dimension must be positive");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return data.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int ndim() const { return static_cast<int>(shape.size()); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() {
    grad.assign(data.size(), T(0));
  }

  // 4-d NCHW accessors.
  std::size_t index4(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape[1] + c) * shape[2] + h) *
               shape[3] +
           w;
  }
  T& at4(int n, int c, int h, int w) { return data[index4(n, c, h, w)]; }
  T at4(int n, int c, int h, int w) const { return data[index4(n, c, h, w)]; }

  // 2-d accessors.
  std::size_t index2(int i, int j) const {
    return static_cast<std::size_t>(i) * shape[1] + j;
  }
  T& at2(int i, int j) { return data[index2(i, j)]; }
  T at2(int i, int j) const { return data[index2(i, j)]; }

  static Tensor full(std::vector<int> s, T value) {
    Tensor t(std::move(s));
    std::fill(t.data.begin(), t.data.end(), value);
    return t;
  }

  static Tensor uniform(std::vector<int> s, Rng& rng, double lo = 0.0,
                        double hi = 1.0) {
    Tensor t(std::move(s));
    for (auto& v : t.data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  static Tensor normal(std::vector<int> s, Rng& rng, double mean = 0.0,
                       double stddev = 1.0) {
    Tensor t(std::move(s));
    for (auto& v : t.data) v = static_cast<T>(rng.normal(mean, stddev));
    return t;
  }

  /// Same data viewed under a different shape (element count must match).
  Tensor reshaped(std::vector<int> s) const {
    if (numel_of(s) != numel()) throw DomainError("reshape: size mismatch");
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> t;
    t.shape = shape;
    t.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      t.data[i] = static_cast<U>(data[i]);
    return t;
  }
};

using Tensor32 = Tensor<float>;
using Tensor64 = Tensor<double>;

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace c3ae
