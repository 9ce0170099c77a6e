#pragma once

// Core color types: scene illuminants, linear images, the recovery angular
// error, and the diagonal (von Kries) illuminant model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "c3ae/errors.hpp"

namespace c3ae {

inline constexpr double kPi = 3.14159265358979323846;

/// Linear sensor response of the scene light source. All components are
/// positive; the overall scale carries no meaning for estimation, so values
/// are compared as directions.
struct Illuminant {
  double r = 1.0;
  double g = 1.0;
  double b = 1.0;

  double norm() const { return std::sqrt(r * r + g * g + b * b); }
  double max_component() const { return std::max({r, g, b}); }

  /// Unit L2 norm copy.
  Illuminant normalized() const {
    const double n = norm();
    if (!(n > 0.0)) throw DomainError("illuminant has zero norm");
    return {r / n, g / n, b / n};
  }

  /// Copy rescaled so the largest component is 1 (gains stay in [0, 1]).
  Illuminant max_normalized() const {
    const double m = max_component();
    if (!(m > 0.0)) throw DomainError("illuminant has no positive component");
    return {r / m, g / m, b / m};
  }

  double operator[](int c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

/// H x W x 3 image of linear-light intensities in [0, 1], interleaved RGB.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // row-major, r,g,b per pixel

  Image() = default;
  Image(int w, int h)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.f) {}

  float& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  bool empty() const { return data.empty(); }
};

/// Recovery angular error between two illuminants, in degrees. Scale
/// invariant in both arguments. The cosine is clamped to [-1, 1] so rounding
/// cannot escape the acos domain.
inline double rae(const Illuminant& a, const Illuminant& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0))
    throw DomainError("rae: zero-norm illuminant");
  double c = (a.r * b.r + a.g * b.g + a.b * b.b) / (na * nb);
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / kPi;
}

/// Renders a canonical image under `ill` with per-channel gains
/// (diagonal model). `ill` should be max-normalized so output stays in
/// [0, 1]; values are clipped either way.
inline Image apply_illuminant(const Image& img, const Illuminant& ill) {
  Image out = img;
  const float gains[3] = {static_cast<float>(ill.r), static_cast<float>(ill.g),
                          static_cast<float>(ill.b)};
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    for (int c = 0; c < 3; ++c) {
      out.data[i + c] = std::clamp(out.data[i + c] * gains[c], 0.f, 1.f);
    }
  }
  return out;
}

/// White-balances an image given an illuminant estimate. The estimate is
/// rescaled so its green component is 1 before dividing, which corrects the
/// cast without changing the overall brightness level. Invariant to positive
/// rescaling of `ill_est`.
inline Image correct_image(const Image& img, const Illuminant& ill_est) {
  if (!(ill_est.r > 0.0) || !(ill_est.g > 0.0) || !(ill_est.b > 0.0))
    throw DomainError("correct_image: illuminant must be strictly positive");
  const float gains[3] = {static_cast<float>(ill_est.g / ill_est.r), 1.f,
                          static_cast<float>(ill_est.g / ill_est.b)};
  Image out = img;
  for (std::size_t i = 0; i < out.data.size(); i += 3) {
    for (int c = 0; c < 3; ++c) {
      out.data[i + c] = std::clamp(out.data[i + c] * gains[c], 0.f, 1.f);
    }
  }
  return out;
}

}  // namespace c3ae
