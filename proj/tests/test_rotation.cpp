#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sphcnn/rotation.hpp"
#include "sphcnn/synth.hpp"
#include "support.hpp"

using namespace sphcnn;
using std::numbers::pi;

namespace {

// Independent oracle: Wigner's explicit sum in long double.
long double small_d_oracle(int j, int mp, int m, long double beta) {
  auto fact = [](int n) {
    long double r = 1.0L;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
  };
  const long double c = std::cos(beta / 2), s = std::sin(beta / 2);
  const long double norm = std::sqrt(fact(j + mp) * fact(j - mp) * fact(j + m) * fact(j - m));
  long double sum = 0.0L;
  for (int k = 0; k <= 2 * j; ++k) {
    if (j + m - k < 0 || mp - m + k < 0 || j - mp - k < 0) continue;
    const long double sign = ((mp - m + k) % 2) ? -1.0L : 1.0L;
    sum += sign * norm / (fact(j + m - k) * fact(k) * fact(mp - m + k) * fact(j - mp - k)) *
           std::pow(c, 2 * j + m - mp - 2 * k) * std::pow(s, mp - m + 2 * k);
  }
  return sum;
}

// Pointwise synthesis of real-origin coefficients at an arbitrary direction.
double synthesize_at(const SpectralCoeffs& c, int channel, const Vec3& x) {
  const auto [theta, phi] = to_spherical(x);
  double acc = 0.0;
  for (int l = 0; l < c.bandwidth().value(); ++l) {
    for (int m = -l; m <= l; ++m) acc += (c.at(channel, l, m) * sph_harmonic(l, m, theta, phi)).real();
  }
  return acc;
}

}  // namespace

TEST_CASE("small-d recurrence matches the explicit sum") {
  for (double beta : {0.0, 0.3, 1.1, pi / 2, 2.9, pi}) {
    const auto d = wigner_small_d_all(11, beta);
    double worst = 0.0;
    for (int l = 0; l < 11; ++l) {
      for (int m = -l; m <= l; ++m) {
        for (int n = -l; n <= l; ++n) {
          const double expect = static_cast<double>(small_d_oracle(l, m, n, beta));
          worst = std::max(worst, std::abs(d[l][(m + l) * (2 * l + 1) + n + l] - expect));
        }
      }
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("identity and z rotations") {
  for (int l : {0, 1, 5}) {
    const auto id = wigner_d(l, {});
    for (int m = -l; m <= l; ++m) {
      for (int n = -l; n <= l; ++n) CHECK(id(m, n) == Complex(m == n ? 1.0 : 0.0, 0.0));
    }
    const double g = 0.77;
    const auto z = wigner_d(l, {0.0, 0.0, g});
    for (int m = -l; m <= l; ++m) {
      for (int n = -l; n <= l; ++n) {
        const Complex expect = m == n ? std::polar(1.0, -m * g) : Complex{};
        CHECK(std::abs(z(m, n) - expect) < 1e-14);
      }
    }
  }
}

TEST_CASE("Wigner blocks are unitary") {
  const auto blocks = wigner_blocks(48, {1.2, 2.3, 4.5});
  double worst = 0.0;
  for (const auto& blk : blocks) {
    const int l = blk.degree;
    for (int a = -l; a <= l; ++a) {
      for (int c = -l; c <= l; ++c) {
        Complex acc{};
        for (int n = -l; n <= l; ++n) acc += blk(a, n) * std::conj(blk(c, n));
        worst = std::max(worst, std::abs(acc - Complex(a == c ? 1.0 : 0.0, 0.0)));
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("degree-1 rotation matches resampling and re-transforming") {
  SpectralCoeffs c(Bandwidth(4), 1);
  c.at(0, 1, 0) = 0.7;
  c.at(0, 1, 1) = {0.2, -0.4};
  c.enforce_real_symmetry();
  const RotationZYZ r{0.4, 1.3, 2.2};
  SphericalSignal resampled(4, 1);
  const Mat3 inv = r.matrix().transpose();
  for (int j = 0; j < resampled.side(); ++j) {
    for (int k = 0; k < resampled.side(); ++k) {
      resampled.at(0, j, k) =
          synthesize_at(c, 0, inv * direction(resampled.grid().thetas[j], resampled.grid().phis[k]));
    }
  }
  CHECK(testing::max_abs_diff(rotate_spectrum(c, r), sft(resampled)) < 1e-9);
}

TEST_CASE("convention lock: rotate_signal equals evaluation at R^-1 x") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_coeffs(Bandwidth(8), 1, 500 + trial);
    const auto signal = isft(c);
    const auto r = random_rotation(rng);
    const auto rotated = rotate_signal(signal, r);
    const Mat3 inv = r.matrix().transpose();
    for (int j = 0; j < signal.side(); ++j) {
      for (int k = 0; k < signal.side(); ++k) {
        const double expect = synthesize_at(c, 0, inv * direction(signal.grid().thetas[j], signal.grid().phis[k]));
        worst = std::max(worst, std::abs(rotated.at(0, j, k) - expect));
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("rotation composes as a group action") {
  const auto c = random_coeffs(Bandwidth(10), 2, 8);
  const RotationZYZ r1{0.3, 0.9, 5.0}, r2{2.0, 2.5, 1.0};
  const auto lhs = rotate_spectrum(rotate_spectrum(c, r1), r2);
  const auto rhs = rotate_spectrum(c, compose(r2, r1));
  CHECK(testing::max_abs_diff(lhs, rhs) < 1e-9);
  CHECK(testing::max_abs_diff(rotate_spectrum(c, RotationZYZ{}), c) < 1e-15);
}

TEST_CASE("per-degree norms are preserved") {
  const auto c = random_coeffs(Bandwidth(12), 1, 3);
  const auto rc = rotate_spectrum(c, {1.0, 2.0, 3.0});
  for (int l = 0; l < 12; ++l) {
    double a = 0.0, b = 0.0;
    for (int m = -l; m <= l; ++m) {
      a += std::norm(c.at(0, l, m));
      b += std::norm(rc.at(0, l, m));
    }
    CHECK(std::sqrt(b) == doctest::Approx(std::sqrt(a)).epsilon(1e-12));
  }
}

TEST_CASE("rotate_signal: identity, inverse and azimuthal grid roll") {
  const int b = 8;
  const auto s = random_bandlimited_signal(b, 2, 77);
  CHECK(testing::max_abs_diff(rotate_signal(s, {}), s) < 1e-9);

  const RotationZYZ r{0.5, 1.7, 2.9};
  CHECK(testing::max_abs_diff(rotate_signal(rotate_signal(s, r), r.inverse()), s) < 1e-9);

  // Rotating by pi / b about z shifts samples one column east.
  const auto rolled = rotate_signal(s, RotationZYZ::about_z(pi / b));
  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (int j = 0; j < s.side(); ++j) {
      for (int k = 0; k < s.side(); ++k) {
        worst = std::max(worst, std::abs(rolled.at(c, j, (k + 1) % s.side()) - s.at(c, j, k)));
      }
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("ZYZ conversions") {
  const RotationZYZ r{5.9, 0.4, 3.3};
  const auto back = RotationZYZ::from_matrix(r.matrix());
  CHECK(back.alpha == doctest::Approx(r.alpha));
  CHECK(back.beta == doctest::Approx(r.beta));
  CHECK(back.gamma == doctest::Approx(r.gamma));
  CHECK(geodesic_distance_deg(r, back) < 1e-6);
  CHECK(geodesic_distance_deg(compose(r, r.inverse()), {}) < 1e-6);
  CHECK(geodesic_distance_deg(RotationZYZ::about_z(0.0), RotationZYZ::about_z(pi / 2)) ==
        doctest::Approx(90.0));
  const auto c = RotationZYZ{-1.0, -0.5, 7.0}.canonical();
  CHECK(c.beta >= 0.0);
  CHECK(c.beta <= pi);
  CHECK(c.alpha >= 0.0);
  CHECK(c.alpha < 2 * pi);
  CHECK(geodesic_distance_deg(c, RotationZYZ{-1.0, -0.5, 7.0}) < 1e-6);
  const auto gimbal = RotationZYZ{1.0, 0.0, 2.0}.canonical();
  CHECK(geodesic_distance_deg(gimbal, RotationZYZ::about_z(3.0)) < 1e-6);
}

TEST_CASE("rotation sampling") {
  const auto id = sample_rotations(EquiangularGrid{1, 1, 1});
  REQUIRE(id.size() == 1);
  CHECK(geodesic_distance_deg(id[0], {}) == 0.0);
  CHECK(sample_rotations(EquiangularGrid{4, 3, 2}).size() == 24);

  const auto a = sample_rotations(RandomUniform{42, 5});
  const auto b = sample_rotations(RandomUniform{42, 5});
  for (int i = 0; i < 5; ++i) CHECK(geodesic_distance_deg(a[i], b[i]) == 0.0);

  // Haar measure: the mean of every D^1 entry vanishes.
  const auto many = sample_rotations(RandomUniform{7, 10000});
  std::vector<Complex> mean(9);
  for (const auto& r : many) {
    const auto d1 = wigner_d(1, r);
    for (int i = 0; i < 9; ++i) mean[i] += d1.matrix[i] / 10000.0;
  }
  for (const auto& v : mean) CHECK(std::abs(v) < 0.05);
}
