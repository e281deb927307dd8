#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sphcnn/errors.hpp"
#include "sphcnn/harmonics.hpp"

using namespace sphcnn;
using std::numbers::pi;

namespace {

// Rodrigues oracle: P_l^m(x) = (-1)^m (1-x^2)^{m/2} d^{l+m}/dx^{l+m} (x^2-1)^l / (2^l l!)
// with exact polynomial coefficient arithmetic in long double.
long double rodrigues(int l, int m, long double x) {
  std::vector<long double> poly(2 * l + 1, 0.0L);
  // (x^2 - 1)^l = sum_k C(l,k) x^{2k} (-1)^{l-k}
  long double binom = 1.0L;
  for (int k = 0; k <= l; ++k) {
    poly[2 * k] = binom * (((l - k) % 2) ? -1.0L : 1.0L);
    binom = binom * (l - k) / (k + 1);
  }
  for (int d = 0; d < l + m; ++d) {
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) poly[i] = poly[i + 1] * (i + 1);
    poly.back() = 0.0L;
  }
  long double value = 0.0L;
  for (std::size_t i = poly.size(); i-- > 0;) value = value * x + poly[i];
  long double denom = 1.0L;
  for (int i = 1; i <= l; ++i) denom *= 2.0L * i;
  const long double s = std::pow(1.0L - x * x, m / 2.0L);
  return ((m % 2) ? -1.0L : 1.0L) * s * value / denom;
}

}  // namespace

TEST_CASE("assoc_legendre closed forms") {
  CHECK(assoc_legendre(0, 0, 0.3) == 1.0);
  CHECK(assoc_legendre(1, 0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  // Condon-Shortley: P_1^1 = -sqrt(1 - x^2)
  CHECK(assoc_legendre(1, 1, 0.6) == doctest::Approx(-0.8).epsilon(1e-15));
}

TEST_CASE("assoc_legendre matches Rodrigues at (4, 2, 0.7)") {
  const double oracle = static_cast<double>(rodrigues(4, 2, 0.7L));
  // 15/2 (7x^2 - 1)(1 - x^2) at x = 0.7
  CHECK(oracle == doctest::Approx(7.5 * (7 * 0.49 - 1) * 0.51).epsilon(1e-14));
  CHECK(assoc_legendre(4, 2, 0.7) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("recurrence agrees with Rodrigues for l <= 10 on random x") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double x = dist(rng);
    for (int l = 0; l <= 10; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double expect = static_cast<double>(rodrigues(l, m, x));
        const double got = assoc_legendre(l, m, x);
        // Relative error, floored where the function passes through zero.
        worst = std::max(worst, std::abs(got - expect) / std::max(1.0, std::abs(expect)));
      }
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("normalized recurrence equals q P") {
  for (double x : {-0.93, -0.2, 0.0, 0.41, 0.999}) {
    const auto p = normalized_legendre(9, x);
    for (int l = 0; l <= 9; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double q = std::sqrt((2 * l + 1) / (4 * pi) * std::tgamma(l - m + 1) / std::tgamma(l + m + 1));
        CHECK(p[tri_index(l, m)] == doctest::Approx(q * assoc_legendre(l, m, x)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("no overflow up to degree 511 on the b = 512 grid") {
  const auto grid = make_grid(Bandwidth(512));
  bool finite = true;
  for (int j = 0; j < grid.size(); j += 7) {
    const auto p = normalized_legendre(511, std::cos(grid.thetas[j]));
    for (double v : p) finite = finite && std::isfinite(v) && std::abs(v) < 10.0;
  }
  CHECK(finite);
}

TEST_CASE("sph_harmonic values and conjugation symmetry") {
  CHECK(sph_harmonic(0, 0, 0.7, 1.3).real() == doctest::Approx(0.2820948).epsilon(1e-7));
  CHECK(sph_harmonic(0, 0, 2.1, 4.0).imag() == 0.0);
  CHECK(sph_harmonic(1, 0, 0.0, 0.0).real() == doctest::Approx(0.4886025).epsilon(1e-7));
  const Complex lhs = sph_harmonic(2, -1, 1.0, 2.0);
  const Complex rhs = -std::conj(sph_harmonic(2, 1, 1.0, 2.0));
  CHECK(std::abs(lhs - rhs) < 1e-15);
  // Y_1^1 = -sqrt(3 / 8 pi) sin(theta) e^{i phi}
  const Complex y11 = sph_harmonic(1, 1, 0.8, 0.3);
  const Complex expect = -std::sqrt(3 / (8 * pi)) * std::sin(0.8) * std::polar(1.0, 0.3);
  CHECK(std::abs(y11 - expect) < 1e-15);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(assoc_legendre(2, 3, 0.1), DomainError);
  CHECK_THROWS_AS(assoc_legendre(2, -1, 0.1), DomainError);
  CHECK_THROWS_AS(assoc_legendre(2, 1, 1.5), DomainError);
  CHECK_THROWS_AS(sph_harmonic(2, 3, 0.1, 0.2), DomainError);
  CHECK_THROWS_AS(build_table(make_grid(Bandwidth(64)), 32), DomainError);
}

TEST_CASE("table layout for b = 2") {
  const auto table = build_table(make_grid(Bandwidth(2)));
  CHECK(table->legendre_block(0).size() == 2 * 4);
  CHECK(table->legendre_block(1).size() == 1 * 4);
  CHECK(table->legendre(1, 1, 0) == 0.0);
  CHECK(table->legendre(0, 0, 3) == doctest::Approx(1 / std::sqrt(4 * pi)));
}

TEST_CASE("table columns are orthonormal under the quadrature at b = 8") {
  const auto table = build_table(make_grid(Bandwidth(8)));
  double defect = 0.0;
  for (int m = 0; m < 8; ++m) {
    for (int l = m; l < 8; ++l) {
      for (int lp = m; lp < 8; ++lp) {
        defect = std::max(defect, std::abs(table->column_inner(l, lp, m) - (l == lp ? 1.0 : 0.0)));
      }
    }
  }
  CHECK(defect < 1e-9);
}

TEST_CASE("m = 0 phases are one") {
  const auto table = table_for(16);
  for (int k = 0; k < 32; ++k) CHECK(table->phase(0, k) == Complex(1.0, 0.0));
  CHECK(std::abs(table->phase(3, 5) - std::polar(1.0, -3 * table->grid().phis[5])) < 1e-14);
}
