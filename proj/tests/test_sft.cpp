#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "sphcnn/errors.hpp"
#include "sphcnn/sft.hpp"
#include "sphcnn/synth.hpp"
#include "support.hpp"

using namespace sphcnn;
using std::numbers::pi;

namespace {

SphericalSignal constant_signal(int b, double c) {
  SphericalSignal s(b, 1);
  for (double& v : s.values()) v = c;
  return s;
}

double max_except(const SpectralCoeffs& c, int l0, int m0) {
  double worst = 0.0;
  for (int l = 0; l < c.bandwidth().value(); ++l) {
    for (int m = -l; m <= l; ++m) {
      if (l == l0 && std::abs(m) == m0) continue;
      worst = std::max(worst, std::abs(c.at(0, l, m)));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("constant signal has a single l = 0 coefficient") {
  for (auto method : {SftMethod::Direct, SftMethod::SeparationOfVariables}) {
    const auto c = sft(constant_signal(8, 2.5), method);
    CHECK(c.at(0, 0, 0).real() == doctest::Approx(2.5 * std::sqrt(4 * pi)).epsilon(1e-12));
    CHECK(max_except(c, 0, 0) < 1e-9);
    CHECK(c.real_origin());
  }
}

TEST_CASE("zero in, zero out") {
  const auto c = sft(constant_signal(4, 0.0));
  for (auto v : c.coeffs()) CHECK(v == Complex{});
  const auto s = isft(SpectralCoeffs(Bandwidth(4), 2));
  CHECK(testing::max_abs(s) == 0.0);
}

TEST_CASE("Re Y_1^1 is recovered at m = +-1 with real symmetry") {
  const int b = 8;
  SphericalSignal s(b, 1);
  for (int j = 0; j < s.side(); ++j) {
    for (int k = 0; k < s.side(); ++k) {
      s.at(0, j, k) = sph_harmonic(1, 1, s.grid().thetas[j], s.grid().phis[k]).real();
    }
  }
  for (auto method : {SftMethod::Direct, SftMethod::SeparationOfVariables}) {
    const auto c = sft(s, method);
    // Re Y = (Y_1^1 - Y_1^{-1}) / 2
    CHECK(std::abs(c.at(0, 1, 1) - Complex(0.5, 0.0)) < 1e-12);
    CHECK(c.at(0, 1, -1) == -std::conj(c.at(0, 1, 1)));
    CHECK(max_except(c, 1, 1) < 1e-9);
  }
}

TEST_CASE("separation of variables agrees with the direct transform") {
  for (int seed = 0; seed < 5; ++seed) {
    SphericalSignal s(8, 2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    for (double& v : s.values()) v = d(rng);
    CHECK(testing::max_abs_diff(sft_direct(s, *table_for(8)), sft_sepvar(s, *table_for(8))) < 1e-9);
  }
}

TEST_CASE("round trip for b in {2, 4, 8, 16, 32}") {
  for (int b : {2, 4, 8, 16, 32}) {
    const auto signal = random_bandlimited_signal(b, 2, 100 + b);
    const auto back = isft(sft(signal));
    CHECK(testing::max_abs_diff(signal, back) < 1e-9);
  }
}

TEST_CASE("ISFT of sqrt(4 pi) at l = 0 is the unit constant") {
  SpectralCoeffs c(Bandwidth(8), 1);
  c.at(0, 0, 0) = std::sqrt(4 * pi);
  const auto s = isft(c);
  for (double v : s.values()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Parseval holds for bandlimited signals") {
  const auto s = random_bandlimited_signal(16, 1, 3, 0.5);
  const auto c = sft(s);
  double spectral = 0.0;
  for (auto v : c.coeffs()) spectral += std::norm(v);
  const double spatial = std::pow(testing::weighted_l2(s), 2);
  CHECK(std::abs(spectral - spatial) / spatial < 1e-8);
}

TEST_CASE("complex synthesis path matches the real expansion") {
  auto c = random_coeffs(Bandwidth(8), 1, 5);
  const auto real_path = isft(c);
  c.set_real_origin(false);
  const auto complex_path = isft(c);
  CHECK(testing::max_abs_diff(real_path, complex_path) < 1e-12);
}

TEST_CASE("non-real coefficients are rejected by the complex path") {
  SpectralCoeffs c(Bandwidth(4), 1, false);
  c.at(0, 2, 1) = {1.0, 0.5};
  CHECK_THROWS_AS(isft(c), DomainError);
}

TEST_CASE("bandlimit is an idempotent projection") {
  const auto s = random_bandlimited_signal(8, 1, 9);
  CHECK(testing::max_abs_diff(bandlimit(s, *table_for(8)), s) < 1e-9);

  SphericalSignal step(8, 1);
  for (int j = 0; j < step.side(); ++j) {
    for (int k = 0; k < step.side(); ++k) step.at(0, j, k) = j < step.side() / 3 ? 1.0 : 0.0;
  }
  const auto once = bandlimit(step, *table_for(8));
  const auto twice = bandlimit(once, *table_for(8));
  CHECK(testing::max_abs_diff(once, twice) < 1e-9);
  // Energy above the band is removed: the projection loses norm.
  CHECK(testing::max_abs_diff(once, step) > 1e-2);
  CHECK(testing::weighted_l2(once) < testing::weighted_l2(step));
}

TEST_CASE("bandwidth mismatch is an error") {
  const auto s = random_bandlimited_signal(8, 1, 1);
  CHECK_THROWS_AS(sft_direct(s, *table_for(4)), DomainError);
  CHECK_THROWS_AS(sft_sepvar(s, *table_for(16)), DomainError);
  CHECK_THROWS_AS(isft(SpectralCoeffs(Bandwidth(4), 1), *table_for(8)), DomainError);
}

TEST_CASE("stored spectra satisfy the real-input symmetry exactly") {
  const auto c = sft(random_bandlimited_signal(8, 1, 21));
  for (int l = 0; l < 8; ++l) {
    CHECK(c.at(0, l, 0).imag() == 0.0);
    for (int m = 1; m <= l; ++m) {
      const Complex expect = (m % 2 ? -1.0 : 1.0) * std::conj(c.at(0, l, m));
      CHECK(c.at(0, l, -m) == expect);
    }
  }
}

TEST_CASE("half-spectrum kernels are adjoint pairs") {
  // <analyze(x), y> = <x, synthesize(y)> with matching weights and scale 1.
  const int b = 6;
  const auto& table = *table_for(b);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> x(4 * b * b);
  for (double& v : x) v = d(rng);
  std::vector<Complex> y(half::size(b));
  for (auto& v : y) v = {d(rng), d(rng)};
  std::vector<double> w(2 * b);
  for (double& v : w) v = d(rng);

  std::vector<Complex> ax(half::size(b));
  half::analyze(x, w, table, ax);
  double lhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += (std::conj(y[i]) * ax[i]).real();

  std::vector<double> sy(x.size());
  half::synthesize(y, std::vector<double>(b, 1.0), table, sy);
  double rhs = 0.0;
  for (int j = 0; j < 2 * b; ++j) {
    for (int k = 0; k < 2 * b; ++k) rhs += x[j * 2 * b + k] * w[j] * sy[j * 2 * b + k];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
