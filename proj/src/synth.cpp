#include "sphcnn/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sphcnn/errors.hpp"

namespace sphcnn {

using std::numbers::pi;

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double gaussian(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

}  // namespace

SpectralCoeffs random_coeffs(Bandwidth b, int channels, std::uint64_t seed, double decay) {
  std::mt19937_64 rng(seed);
  SpectralCoeffs out(b, channels, true);
  for (int c = 0; c < channels; ++c) {
    for (int l = 0; l < b.value(); ++l) {
      const double scale = std::pow(1.0 + l, -decay);
      out.at(c, l, 0) = {scale * gaussian(rng), 0.0};
      for (int m = 1; m <= l; ++m) {
        const double re = gaussian(rng);
        const double im = gaussian(rng);
        out.at(c, l, m) = scale * Complex{re, im} / std::sqrt(2.0);
      }
    }
  }
  out.enforce_real_symmetry();
  return out;
}

SphericalSignal random_bandlimited_signal(int b, int channels, std::uint64_t seed, double decay) {
  return isft(random_coeffs(Bandwidth(b), channels, seed, decay));
}

double BlobPattern::evaluate(const Vec3& x) const {
  double total = 0.0;
  for (const auto& blob : blobs) {
    const double t = std::clamp(x.dot(blob.centre), -1.0, 1.0);
    double p_prev = 1.0;
    double p = t;
    double acc = 1.0 / (4.0 * pi);
    for (int l = 1; l < lmax; ++l) {
      const double weight = std::exp(-(l / width) * (l / width)) * (2.0 * l + 1.0) / (4.0 * pi);
      acc += weight * p;
      const double next = ((2.0 * l + 1.0) * t * p - l * p_prev) / (l + 1.0);
      p_prev = p;
      p = next;
    }
    total += blob.amplitude * acc;
  }
  return total;
}

SphericalSignal BlobPattern::sample(int b, const RotationZYZ& r) const {
  SphericalSignal out(b, 1);
  const Mat3 inv = r.matrix().transpose();
  const auto& g = out.grid();
  for (int j = 0; j < out.side(); ++j) {
    for (int k = 0; k < out.side(); ++k) {
      out.at(0, j, k) = evaluate(inv * direction(g.thetas[j], g.phis[k]));
    }
  }
  return out;
}

BlobPattern canonical_pattern(int label, int lmax, double width) {
  BlobPattern p;
  p.lmax = lmax;
  p.width = width;
  std::vector<Vec3> centres;
  switch (label) {
    case 0:
      centres = {Vec3(0, 0, 1), Vec3(0, 0, -1)};
      break;
    case 1:
      for (int i = 0; i < 3; ++i) {
        const double a = 2.0 * pi * i / 3.0;
        centres.emplace_back(std::cos(a), std::sin(a), 0.0);
      }
      break;
    case 2: {
      const double s = 1.0 / std::sqrt(3.0);
      centres = {Vec3(s, s, s), Vec3(s, -s, -s), Vec3(-s, s, -s), Vec3(-s, -s, s)};
      break;
    }
    default:
      throw DomainError("canonical_pattern supports labels 0..2");
  }
  for (const auto& c : centres) p.blobs.push_back({c, 4.0 / static_cast<double>(centres.size())});
  return p;
}

BlobPattern jittered_pattern(int label, std::uint64_t seed, double jitter, int lmax, double width) {
  BlobPattern p = canonical_pattern(label, lmax, width);
  std::mt19937_64 rng(seed);
  for (auto& blob : p.blobs) {
    Vec3 offset(gaussian(rng), gaussian(rng), gaussian(rng));
    offset -= offset.dot(blob.centre) * blob.centre;
    blob.centre = (blob.centre + jitter * offset).normalized();
  }
  return p;
}

}  // namespace sphcnn
