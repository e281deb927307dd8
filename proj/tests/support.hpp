#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "sphcnn/sft.hpp"

namespace testing {

inline double max_abs_diff(const sphcnn::SphericalSignal& a, const sphcnn::SphericalSignal& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  }
  return d;
}

inline double max_abs_diff(const sphcnn::SpectralCoeffs& a, const sphcnn::SpectralCoeffs& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.coeffs().size(); ++i) {
    d = std::max(d, std::abs(a.coeffs()[i] - b.coeffs()[i]));
  }
  return d;
}

inline double max_abs(const sphcnn::SphericalSignal& a) {
  double d = 0.0;
  for (double v : a.values()) d = std::max(d, std::abs(v));
  return d;
}

/// Quadrature-weighted L2 norm over all channels.
inline double weighted_l2(const sphcnn::SphericalSignal& s) {
  double acc = 0.0;
  const auto& w = s.grid().quad_weights;
  for (int c = 0; c < s.channels(); ++c) {
    for (int j = 0; j < s.side(); ++j) {
      for (int k = 0; k < s.side(); ++k) acc += w[j] * s.at(c, j, k) * s.at(c, j, k);
    }
  }
  return std::sqrt(acc);
}

}  // namespace testing
