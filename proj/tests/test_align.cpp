#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "sphcnn/align.hpp"
#include "sphcnn/errors.hpp"
#include "sphcnn/synth.hpp"

using namespace sphcnn;
using std::numbers::pi;

namespace {

double energy(const SpectralCoeffs& c) {
  double e = 0.0;
  for (auto v : c.coeffs()) e += std::norm(v);
  return e;
}

RotationZYZ on_grid(int i, int j, int k) { return {2 * pi * i / 16, pi * j / 16, 2 * pi * k / 16}; }

}  // namespace

TEST_CASE("planted grid rotation is recovered exactly") {
  const auto a = random_coeffs(Bandwidth(8), 2, 11, 1.0);
  for (auto r0 : {on_grid(3, 5, 12), on_grid(15, 9, 1), on_grid(0, 7, 4)}) {
    const std::vector<SpectralCoeffs> fa{a}, fb{rotate_spectrum(a, r0)};
    SearchOptions opts;
    opts.refine_levels = 0;
    const auto res = so3_correlate(fa, fb, opts);
    CHECK(res.rotation.alpha == r0.alpha);
    CHECK(res.rotation.beta == r0.beta);
    CHECK(res.rotation.gamma == r0.gamma);
    CHECK(res.score == doctest::Approx(energy(a)).epsilon(1e-9));
    CHECK_FALSE(res.degenerate);
    CHECK(res.per_rotation_scores.size() == 16u * 16u * 16u);
  }
}

TEST_CASE("score matches an explicit rotate-then-inner-product") {
  const auto a = random_coeffs(Bandwidth(6), 1, 3);
  const auto b = random_coeffs(Bandwidth(6), 1, 4);
  const auto rots = sample_rotations(RandomUniform{9, 12});
  const std::vector<SpectralCoeffs> fa{a}, fb{b};
  const auto scores = correlation_scores(fa, fb, rots);
  for (std::size_t i = 0; i < rots.size(); ++i) {
    const auto ra = rotate_spectrum(a, rots[i]);
    double dot = 0.0;
    for (std::size_t q = 0; q < ra.coeffs().size(); ++q) dot += (std::conj(b.coeffs()[q]) * ra.coeffs()[q]).real();
    CHECK(scores[i] == doctest::Approx(dot).epsilon(1e-10));
  }
}

TEST_CASE("identity and off-grid recovery") {
  const auto a = random_coeffs(Bandwidth(8), 1, 21, 1.0);
  const std::vector<SpectralCoeffs> fa{a};
  const auto self = so3_correlate(fa, fa);
  CHECK(geodesic_distance_deg(self.rotation, {}) < 1e-9);

  const RotationZYZ r0{1.1, 0.7, 4.0};
  const std::vector<SpectralCoeffs> fb{rotate_spectrum(a, r0)};
  SearchOptions coarse_only;
  coarse_only.refine_levels = 0;
  const double coarse_err = geodesic_distance_deg(so3_correlate(fa, fb, coarse_only).rotation, r0);
  const double fine_err = geodesic_distance_deg(so3_correlate(fa, fb).rotation, r0);
  CHECK(fine_err <= coarse_err);
  CHECK(fine_err < 6.0);
}

TEST_CASE("scores are symmetric under swapping inputs and inverting") {
  const std::vector<SpectralCoeffs> a{random_coeffs(Bandwidth(7), 2, 5), random_coeffs(Bandwidth(4), 3, 6)};
  const std::vector<SpectralCoeffs> b{random_coeffs(Bandwidth(7), 2, 7), random_coeffs(Bandwidth(4), 3, 8)};
  const auto rots = sample_rotations(RandomUniform{2, 20});
  std::vector<RotationZYZ> inv;
  for (const auto& r : rots) inv.push_back(r.inverse());
  const auto ab = correlation_scores(a, b, rots);
  const auto ba = correlation_scores(b, a, inv);
  for (std::size_t i = 0; i < rots.size(); ++i) CHECK(std::abs(ab[i] - ba[i]) < 1e-9);
}

TEST_CASE("argmax follows a rotation of the target") {
  const auto a = random_coeffs(Bandwidth(8), 1, 31, 1.0);
  const auto r0 = on_grid(2, 6, 9);
  const auto s = RotationZYZ::about_z(2 * pi * 5 / 16);
  const std::vector<SpectralCoeffs> fa{a}, fb{rotate_spectrum(rotate_spectrum(a, r0), s)};
  SearchOptions opts;
  opts.refine_levels = 0;
  const auto res = so3_correlate(fa, fb, opts);
  CHECK(geodesic_distance_deg(res.rotation, compose(s, r0)) < 1e-6);
}

TEST_CASE("rotation-invariant inputs are flagged degenerate") {
  SpectralCoeffs zonal(Bandwidth(8), 1);
  zonal.at(0, 0, 0) = 2.0;
  const std::vector<SpectralCoeffs> f{zonal};
  CHECK(so3_correlate(f, f).degenerate);

  const auto sphere = make_icosphere(4);
  AlignFeatures feats;
  feats.bandwidth = 8;
  CHECK(align_shapes(sphere, rotate_mesh(sphere, {0.3, 1.0, 2.0}), feats).degenerate);
}

TEST_CASE("mesh alignment recovers a planted rotation") {
  const auto star = make_star_mesh(4, 4);
  const RotationZYZ r0{0.9, 1.3, 2.2};
  AlignFeatures feats;
  feats.bandwidth = 16;
  const auto res = align_shapes(star, rotate_mesh(star, r0), feats, {}, r0);
  REQUIRE(res.angular_error_deg.has_value());
  MESSAGE("mesh alignment error " << *res.angular_error_deg << " deg");
  CHECK(*res.angular_error_deg < 10.0);
  CHECK_FALSE(res.degenerate);
}

TEST_CASE("mismatched feature lists are rejected") {
  const std::vector<SpectralCoeffs> a{random_coeffs(Bandwidth(4), 1, 1)};
  const std::vector<SpectralCoeffs> b{random_coeffs(Bandwidth(5), 1, 1)};
  CHECK_THROWS_AS(so3_correlate(a, b), DomainError);
  CHECK_THROWS_AS(so3_correlate({}, {}), DomainError);
}
