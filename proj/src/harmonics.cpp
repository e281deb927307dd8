#include "sphcnn/harmonics.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "sphcnn/errors.hpp"

namespace sphcnn {

namespace {

// Leaked so plans held by static caches can still be destroyed at exit.
std::mutex& planner_mutex() {
  static auto* m = new std::mutex;
  return *m;
}

void fill_normalized(int lmax, double x, double s, double* out) {
  using std::numbers::pi;
  out[0] = 1.0 / std::sqrt(4.0 * pi);
  for (int m = 1; m <= lmax; ++m) {
    out[tri_index(m, m)] =
        -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * out[tri_index(m - 1, m - 1)];
  }
  for (int m = 0; m < lmax; ++m) {
    out[tri_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * out[tri_index(m, m)];
    double a_prev = std::sqrt(2.0 * m + 3.0);
    for (int l = m + 2; l <= lmax; ++l) {
      const double l2 = static_cast<double>(l) * l;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - static_cast<double>(m) * m));
      out[tri_index(l, m)] =
          a * (x * out[tri_index(l - 1, m)] - out[tri_index(l - 2, m)] / a_prev);
      a_prev = a;
    }
  }
}

}  // namespace

double assoc_legendre(int l, int m, double x) {
  if (m < 0 || m > l) {
    throw DomainError("assoc_legendre requires 0 <= m <= l (l=" + std::to_string(l) +
                      ", m=" + std::to_string(m) + ")");
  }
  if (!(std::abs(x) <= 1.0)) throw DomainError("assoc_legendre requires |x| <= 1");
  const double s = std::sqrt((1.0 - x) * (1.0 + x));
  double pmm = 1.0;
  for (int i = 1; i <= m; ++i) pmm *= -(2.0 * i - 1.0) * s;
  if (l == m) return pmm;
  double pm1 = x * (2.0 * m + 1.0) * pmm;
  for (int ll = m + 2; ll <= l; ++ll) {
    const double next = (x * (2.0 * ll - 1.0) * pm1 - (ll + m - 1.0) * pmm) / (ll - m);
    pmm = pm1;
    pm1 = next;
  }
  return pm1;
}

std::vector<double> normalized_legendre(int lmax, double x) {
  if (lmax < 0) throw DomainError("normalized_legendre requires lmax >= 0");
  if (!(std::abs(x) <= 1.0)) throw DomainError("normalized_legendre requires |x| <= 1");
  std::vector<double> out(tri_index(lmax, lmax) + 1);
  fill_normalized(lmax, x, std::sqrt((1.0 - x) * (1.0 + x)), out.data());
  return out;
}

Complex sph_harmonic(int l, int m, double theta, double phi) {
  if (l < 0 || std::abs(m) > l) {
    throw DomainError("sph_harmonic requires |m| <= l (l=" + std::to_string(l) +
                      ", m=" + std::to_string(m) + ")");
  }
  const int am = std::abs(m);
  const auto p = normalized_legendre(l, std::cos(theta));
  const Complex y = p[tri_index(l, am)] * std::polar(1.0, am * phi);
  if (m >= 0) return y;
  return (am % 2 ? -1.0 : 1.0) * std::conj(y);
}

// ---------------------------------------------------------------------------

RowFft::RowFft(int n) : n_(n) {
  std::vector<double> r(n);
  std::vector<fftw_complex> c(n);
  std::vector<fftw_complex> c2(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  r2c_ = fftw_plan_dft_r2c_1d(n, r.data(), c.data(), flags);
  c2r_ = fftw_plan_dft_c2r_1d(n, c.data(), r.data(), flags | FFTW_DESTROY_INPUT);
  fwd_ = fftw_plan_dft_1d(n, c.data(), c2.data(), FFTW_FORWARD, flags);
  bwd_ = fftw_plan_dft_1d(n, c.data(), c2.data(), FFTW_BACKWARD, flags);
  if (!r2c_ || !c2r_ || !fwd_ || !bwd_) throw NumericalError("FFTW planning failed");
}

RowFft::~RowFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(r2c_));
  fftw_destroy_plan(static_cast<fftw_plan>(c2r_));
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
}

void RowFft::forward_real(const double* in, Complex* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(r2c_), const_cast<double*>(in),
                       reinterpret_cast<fftw_complex*>(out));
}

void RowFft::inverse_real(Complex* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(c2r_), reinterpret_cast<fftw_complex*>(in), out);
}

void RowFft::complex(const Complex* in, Complex* out, int sign) const {
  auto plan = static_cast<fftw_plan>(sign < 0 ? fwd_ : bwd_);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

// ---------------------------------------------------------------------------

HarmonicTable::HarmonicTable(std::shared_ptr<const SphericalGrid> grid)
    : grid_(std::move(grid)), b_(grid_->bandwidth.value()), n_(grid_->size()) {
  block_offset_.resize(b_ + 1);
  std::size_t total = 0;
  for (int m = 0; m < b_; ++m) {
    block_offset_[m] = total;
    total += static_cast<std::size_t>(b_ - m) * n_;
  }
  block_offset_[b_] = total;
  legendre_.resize(total);

  std::vector<double> column(tri_index(b_ - 1, b_ - 1) + 1);
  for (int j = 0; j < n_; ++j) {
    const double theta = grid_->thetas[j];
    fill_normalized(b_ - 1, std::cos(theta), std::sin(theta), column.data());
    for (int m = 0; m < b_; ++m) {
      for (int l = m; l < b_; ++l) {
        legendre_[block_offset_[m] + static_cast<std::size_t>(l - m) * n_ + j] =
            column[tri_index(l, m)];
      }
    }
  }

  phases_.resize(static_cast<std::size_t>(b_) * n_);
  for (int m = 0; m < b_; ++m) {
    for (int k = 0; k < n_; ++k) {
      // Exact phase from the integer index avoids drift in m * phi_k.
      const long r = (static_cast<long>(m) * k) % n_;
      phases_[static_cast<std::size_t>(m) * n_ + k] =
          std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(r) / n_);
    }
  }
  fft_ = std::make_unique<RowFft>(n_);
}

HarmonicTable::~HarmonicTable() = default;

std::span<const double> HarmonicTable::legendre_block(int m) const {
  return {legendre_.data() + block_offset_[m], block_offset_[m + 1] - block_offset_[m]};
}

double HarmonicTable::legendre(int l, int m, int j) const {
  return legendre_[block_offset_[m] + static_cast<std::size_t>(l - m) * n_ + j];
}

double HarmonicTable::column_inner(int l, int lp, int m) const {
  double acc = 0.0;
  for (int j = 0; j < n_; ++j) {
    acc += grid_->quad_weights[j] * legendre(l, m, j) * legendre(lp, m, j);
  }
  return acc * n_;
}

std::shared_ptr<const HarmonicTable> build_table(const SphericalGrid& grid, int max_bandwidth) {
  if (grid.bandwidth.value() > max_bandwidth) {
    throw DomainError("harmonic table bandwidth " + std::to_string(grid.bandwidth.value()) +
                      " exceeds maximum " + std::to_string(max_bandwidth));
  }
  return std::make_shared<const HarmonicTable>(std::make_shared<const SphericalGrid>(grid));
}

std::shared_ptr<const HarmonicTable> table_for(int b) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const HarmonicTable>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[b];
  if (!slot) slot = std::make_shared<const HarmonicTable>(grid_for(b));
  return slot;
}

}  // namespace sphcnn
