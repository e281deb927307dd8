#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

#include "sphcnn/harmonics.hpp"
#include "sphcnn/sft.hpp"

namespace sphcnn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Unit vector at colatitude theta, longitude phi.
Vec3 direction(double theta, double phi);
/// (theta, phi) of a nonzero vector, phi in [0, 2 pi).
std::pair<double, double> to_spherical(const Vec3& v);

/// SO(3) element as ZYZ Euler angles: R = Rz(alpha) Ry(beta) Rz(gamma).
struct RotationZYZ {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  Mat3 matrix() const;
  static RotationZYZ from_matrix(const Mat3& m);
  /// alpha, gamma in [0, 2 pi), beta in [0, pi]; gimbal cases put everything in alpha.
  RotationZYZ canonical() const;
  RotationZYZ inverse() const;
  Vec3 apply(const Vec3& v) const { return matrix() * v; }

  static RotationZYZ about_z(double angle) { return {angle, 0.0, 0.0}; }
};

/// outer * inner (apply inner first).
RotationZYZ compose(const RotationZYZ& outer, const RotationZYZ& inner);

/// Geodesic distance on SO(3) in degrees.
double geodesic_distance_deg(const RotationZYZ& a, const RotationZYZ& b);

/// Representation matrix of a rotation on degree-l coefficients, indexed
/// (m + l, n + l). Rotating a function by R (f -> f(R^{-1} x)) maps its
/// coefficients c to c'_m = sum_n D_{mn} c_n.
struct WignerBlock {
  int degree = 0;
  std::vector<Complex> matrix;

  int dim() const { return 2 * degree + 1; }
  Complex operator()(int m, int n) const {
    return matrix[static_cast<std::size_t>(m + degree) * dim() + (n + degree)];
  }
};

/// Real Wigner small-d matrices d^l(beta) for every l < b, each (2l+1)^2
/// row-major, from the three-term recurrence in l.
std::vector<std::vector<double>> wigner_small_d_all(int b, double beta);

WignerBlock wigner_d(int l, const RotationZYZ& r);

/// All blocks for degrees < b, computed together.
std::vector<WignerBlock> wigner_blocks(int b, const RotationZYZ& r);

SpectralCoeffs rotate_spectrum(const SpectralCoeffs& coeffs, const RotationZYZ& r);
SpectralCoeffs rotate_spectrum(const SpectralCoeffs& coeffs, const std::vector<WignerBlock>& blocks);

/// SFT -> rotate_spectrum -> ISFT. Exact for bandlimited signals; projects
/// anything else onto degrees < b first.
SphericalSignal rotate_signal(const SphericalSignal& signal, const RotationZYZ& r,
                              const HarmonicTable& table);
SphericalSignal rotate_signal(const SphericalSignal& signal, const RotationZYZ& r);

struct RandomUniform {
  std::uint64_t seed = 0;
  int count = 1;
};
struct EquiangularGrid {
  int n_alpha = 1;
  int n_beta = 1;
  int n_gamma = 1;
};
using RotationScheme = std::variant<RandomUniform, EquiangularGrid>;

/// RandomUniform draws Haar-distributed rotations from uniform unit
/// quaternions. EquiangularGrid enumerates alpha = 2 pi i / na,
/// beta = pi j / nb, gamma = 2 pi k / ng in (alpha, beta, gamma) order.
std::vector<RotationZYZ> sample_rotations(const RotationScheme& scheme);

/// One Haar-uniform rotation from a caller-owned engine.
template <typename Engine>
RotationZYZ random_rotation(Engine& rng);

RotationZYZ rotation_from_uniforms(double u1, double u2, double u3);

template <typename Engine>
RotationZYZ random_rotation(Engine& rng) {
  auto u = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const double u1 = u();
  const double u2 = u();
  const double u3 = u();
  return rotation_from_uniforms(u1, u2, u3);
}

}  // namespace sphcnn
