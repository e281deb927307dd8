#include "sphcnn/rotation.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "sphcnn/errors.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

using std::numbers::pi;

namespace {

double wrap_two_pi(double a) {
  double r = std::fmod(a, 2.0 * pi);
  if (r < 0.0) r += 2.0 * pi;
  if (r >= 2.0 * pi) r = 0.0;
  return r;
}

Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
  return m;
}

// Single-sum closed form of d^j_{m'm}(beta); used to seed the recurrence at
// j = max(|m'|, |m|) where exactly one term survives.
double small_d_closed_form(int j, int mp, int m, double beta) {
  const double c = std::cos(beta / 2.0);
  const double s = std::sin(beta / 2.0);
  auto lf = [](int k) { return std::lgamma(static_cast<double>(k) + 1.0); };
  const double log_norm = 0.5 * (lf(j + mp) + lf(j - mp) + lf(j + m) + lf(j - m));
  double sum = 0.0;
  for (int k = std::max(0, m - mp); k <= std::min(j + m, j - mp); ++k) {
    const int pc = 2 * j + m - mp - 2 * k;
    const int ps = mp - m + 2 * k;
    if ((pc > 0 && c == 0.0) || (ps > 0 && s == 0.0)) continue;
    double log_mag = log_norm - lf(j + m - k) - lf(k) - lf(mp - m + k) - lf(j - mp - k);
    double sign = ((mp - m + k) % 2) ? -1.0 : 1.0;
    if (pc > 0) log_mag += pc * std::log(std::abs(c));
    if (ps > 0) {
      log_mag += ps * std::log(std::abs(s));
      if (s < 0.0 && ps % 2) sign = -sign;
    }
    if (c < 0.0 && pc % 2) sign = -sign;
    sum += sign * std::exp(log_mag);
  }
  return sum;
}

}  // namespace

Vec3 direction(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

std::pair<double, double> to_spherical(const Vec3& v) {
  const double r = v.norm();
  const double theta = std::acos(std::clamp(v.z() / r, -1.0, 1.0));
  return {theta, wrap_two_pi(std::atan2(v.y(), v.x()))};
}

Mat3 RotationZYZ::matrix() const { return rot_z(alpha) * rot_y(beta) * rot_z(gamma); }

RotationZYZ RotationZYZ::from_matrix(const Mat3& r) {
  const double cb = std::clamp(r(2, 2), -1.0, 1.0);
  const double sb = std::hypot(r(0, 2), r(1, 2));
  RotationZYZ out;
  if (sb > 1e-12) {
    out.beta = std::atan2(sb, cb);
    out.alpha = std::atan2(r(1, 2), r(0, 2));
    out.gamma = std::atan2(r(2, 1), -r(2, 0));
  } else if (cb > 0.0) {
    out.beta = 0.0;
    out.alpha = std::atan2(r(1, 0), r(0, 0));
  } else {
    out.beta = pi;
    out.alpha = std::atan2(-r(1, 0), -r(0, 0));
  }
  out.alpha = wrap_two_pi(out.alpha);
  out.gamma = wrap_two_pi(out.gamma);
  return out;
}

RotationZYZ RotationZYZ::canonical() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !std::isfinite(gamma)) {
    throw DomainError("rotation angles must be finite");
  }
  if (beta >= 0.0 && beta <= pi && beta != 0.0 && beta != pi) {
    return {wrap_two_pi(alpha), beta, wrap_two_pi(gamma)};
  }
  return from_matrix(matrix());
}

// Ry(-beta) = Rz(pi) Ry(beta) Rz(pi).
RotationZYZ RotationZYZ::inverse() const {
  return RotationZYZ{pi - gamma, beta, pi - alpha}.canonical();
}

RotationZYZ compose(const RotationZYZ& outer, const RotationZYZ& inner) {
  return RotationZYZ::from_matrix(outer.matrix() * inner.matrix());
}

double geodesic_distance_deg(const RotationZYZ& a, const RotationZYZ& b) {
  const Eigen::Quaterniond q(Mat3(a.matrix().transpose() * b.matrix()));
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w())) * 180.0 / pi;
}

std::vector<std::vector<double>> wigner_small_d_all(int b, double beta) {
  if (b < 1) throw DomainError("wigner_small_d_all requires b >= 1");
  std::vector<std::vector<double>> d(b);
  for (int l = 0; l < b; ++l) d[l].assign(static_cast<std::size_t>(2 * l + 1) * (2 * l + 1), 0.0);
  if (beta == 0.0) {
    for (int l = 0; l < b; ++l) {
      for (int m = 0; m <= 2 * l; ++m) d[l][static_cast<std::size_t>(m) * (2 * l + 1) + m] = 1.0;
    }
    return d;
  }
  const double cb = std::cos(beta);
  auto at = [&d](int l, int m, int n) -> double& {
    return d[l][static_cast<std::size_t>(m + l) * (2 * l + 1) + (n + l)];
  };
  for (int m = -(b - 1); m < b; ++m) {
    for (int n = -(b - 1); n < b; ++n) {
      const int l0 = std::max(std::abs(m), std::abs(n));
      double prev = 0.0;
      double cur = small_d_closed_form(l0, m, n, beta);
      at(l0, m, n) = cur;
      const double mm = static_cast<double>(m) * m;
      const double nn = static_cast<double>(n) * n;
      for (int l = l0 + 1; l < b; ++l) {
        const double j = l - 1;  // recurrence from degree j to j + 1
        const double lead = l * (2.0 * l - 1.0) / std::sqrt((l * 1.0 * l - mm) * (l * 1.0 * l - nn));
        double next;
        if (j == 0.0) {
          next = lead * cb * cur;
        } else {
          const double mix = static_cast<double>(m) * n / (j * (j + 1.0));
          const double back = std::sqrt((j * j - mm) * (j * j - nn)) / (j * (2.0 * j + 1.0));
          next = lead * ((cb - mix) * cur - back * prev);
        }
        prev = cur;
        cur = next;
        at(l, m, n) = cur;
      }
    }
  }
  return d;
}

std::vector<WignerBlock> wigner_blocks(int b, const RotationZYZ& r) {
  const auto d = wigner_small_d_all(b, r.beta);
  std::vector<WignerBlock> out(b);
  for (int l = 0; l < b; ++l) {
    const int dim = 2 * l + 1;
    out[l].degree = l;
    out[l].matrix.resize(static_cast<std::size_t>(dim) * dim);
    for (int m = -l; m <= l; ++m) {
      const Complex pa = std::polar(1.0, -m * r.alpha);
      for (int n = -l; n <= l; ++n) {
        const std::size_t idx = static_cast<std::size_t>(m + l) * dim + (n + l);
        out[l].matrix[idx] = pa * d[l][idx] * std::polar(1.0, -n * r.gamma);
      }
    }
  }
  return out;
}

WignerBlock wigner_d(int l, const RotationZYZ& r) {
  if (l < 0) throw DomainError("wigner_d requires l >= 0");
  auto blocks = wigner_blocks(l + 1, r);
  return std::move(blocks[l]);
}

SpectralCoeffs rotate_spectrum(const SpectralCoeffs& coeffs, const std::vector<WignerBlock>& blocks) {
  const int b = coeffs.bandwidth().value();
  if (static_cast<int>(blocks.size()) < b) throw DomainError("not enough Wigner blocks for bandwidth");
  SpectralCoeffs out(coeffs.bandwidth(), coeffs.channels(), coeffs.real_origin());
  parallel_for(static_cast<std::size_t>(coeffs.channels()), [&](std::size_t cc) {
    const int c = static_cast<int>(cc);
    for (int l = 0; l < b; ++l) {
      const auto& blk = blocks[l];
      const int m_lo = coeffs.real_origin() ? 0 : -l;
      for (int m = m_lo; m <= l; ++m) {
        Complex acc{};
        for (int n = -l; n <= l; ++n) acc += blk(m, n) * coeffs.at(c, l, n);
        out.at(c, l, m) = acc;
      }
    }
  });
  if (coeffs.real_origin()) out.enforce_real_symmetry();
  return out;
}

SpectralCoeffs rotate_spectrum(const SpectralCoeffs& coeffs, const RotationZYZ& r) {
  return rotate_spectrum(coeffs, wigner_blocks(coeffs.bandwidth().value(), r));
}

SphericalSignal rotate_signal(const SphericalSignal& signal, const RotationZYZ& r,
                              const HarmonicTable& table) {
  return isft(rotate_spectrum(sft_sepvar(signal, table), r), table);
}

SphericalSignal rotate_signal(const SphericalSignal& signal, const RotationZYZ& r) {
  return rotate_signal(signal, r, *table_for(signal.bandwidth().value()));
}

RotationZYZ rotation_from_uniforms(double u1, double u2, double u3) {
  const double a = std::sqrt(1.0 - u1);
  const double c = std::sqrt(u1);
  const Eigen::Quaterniond q(c * std::cos(2.0 * pi * u3), a * std::sin(2.0 * pi * u2),
                             a * std::cos(2.0 * pi * u2), c * std::sin(2.0 * pi * u3));
  return RotationZYZ::from_matrix(q.normalized().toRotationMatrix());
}

std::vector<RotationZYZ> sample_rotations(const RotationScheme& scheme) {
  std::vector<RotationZYZ> out;
  if (const auto* ru = std::get_if<RandomUniform>(&scheme)) {
    if (ru->count < 0) throw DomainError("rotation count must be nonnegative");
    std::mt19937_64 rng(ru->seed);
    out.reserve(ru->count);
    for (int i = 0; i < ru->count; ++i) out.push_back(random_rotation(rng));
    return out;
  }
  const auto& g = std::get<EquiangularGrid>(scheme);
  if (g.n_alpha < 1 || g.n_beta < 1 || g.n_gamma < 1) {
    throw DomainError("equiangular rotation grid needs positive sizes");
  }
  out.reserve(static_cast<std::size_t>(g.n_alpha) * g.n_beta * g.n_gamma);
  for (int i = 0; i < g.n_alpha; ++i) {
    for (int j = 0; j < g.n_beta; ++j) {
      for (int k = 0; k < g.n_gamma; ++k) {
        out.push_back({2.0 * pi * i / g.n_alpha, pi * j / g.n_beta, 2.0 * pi * k / g.n_gamma});
      }
    }
  }
  return out;
}

}  // namespace sphcnn
