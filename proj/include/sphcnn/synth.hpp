#pragma once

#include <cstdint>
#include <vector>

#include "sphcnn/rotation.hpp"
#include "sphcnn/sft.hpp"

namespace sphcnn {

/// Random real-origin coefficients: f_l^0 real, f_l^m (m > 0) complex Gaussian
/// scaled by 1 / (1 + l)^decay, negative orders by symmetry.
SpectralCoeffs random_coeffs(Bandwidth b, int channels, std::uint64_t seed,
                             double decay = 0.0);

/// Random signal that is exactly bandlimited at b (ISFT of random_coeffs).
SphericalSignal random_bandlimited_signal(int b, int channels, std::uint64_t seed,
                                          double decay = 0.0);

/// Bandlimited zonal bump centred at a unit direction: sum over l < lmax of
/// exp(-(l / width)^2) (2l + 1) / 4pi P_l(<x, centre>). Evaluable anywhere.
struct Blob {
  Vec3 centre;
  double amplitude = 1.0;
};

struct BlobPattern {
  std::vector<Blob> blobs;
  int lmax = 8;
  double width = 3.0;

  double evaluate(const Vec3& x) const;
  /// Samples f(R^{-1} x) on the grid of bandwidth b, i.e. the pattern rotated by R.
  SphericalSignal sample(int b, const RotationZYZ& r = {}) const;
};

/// Canonical blob arrangements for the toy classification task.
/// Class 0: two antipodal blobs. Class 1: three blobs on a great circle.
/// Class 2: four tetrahedral blobs. Total mass is the same for every class.
BlobPattern canonical_pattern(int label, int lmax = 8, double width = 3.0);

/// Canonical pattern with small per-blob direction jitter (radians, seeded).
BlobPattern jittered_pattern(int label, std::uint64_t seed, double jitter, int lmax = 8,
                             double width = 3.0);

}  // namespace sphcnn
