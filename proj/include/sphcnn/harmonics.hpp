#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "sphcnn/grid.hpp"

namespace sphcnn {

using Complex = std::complex<double>;

/// Associated Legendre function P_l^m(x) with the Condon-Shortley phase,
/// unnormalized. Overflows for large l; use normalized_legendre for tables.
double assoc_legendre(int l, int m, double x);

/// Orthonormal spherical harmonic Y_l^m(theta, phi) = q_l^m P_l^m(cos theta) e^{i m phi}.
Complex sph_harmonic(int l, int m, double theta, double phi);

/// q_l^m P_l^m(x) for all 0 <= m <= l < lmax + 1, packed at l (l + 1) / 2 + m.
/// Uses the normalized three-term recurrence, safe up to l of several thousand.
std::vector<double> normalized_legendre(int lmax, double x);

inline std::size_t tri_index(int l, int m) {
  return static_cast<std::size_t>(l) * (l + 1) / 2 + m;
}

class RowFft;

/// Precomputed q_l^m P_l^m(cos theta_j) for l < b, 0 <= m <= l, and the
/// longitude phases e^{-i m phi_k} for 0 <= m < b.
class HarmonicTable {
 public:
  explicit HarmonicTable(std::shared_ptr<const SphericalGrid> grid);
  ~HarmonicTable();
  HarmonicTable(const HarmonicTable&) = delete;
  HarmonicTable& operator=(const HarmonicTable&) = delete;

  Bandwidth bandwidth() const noexcept { return grid_->bandwidth; }
  const SphericalGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const SphericalGrid>& grid_ptr() const noexcept { return grid_; }

  /// Row-major (l - m, j) block for order m: b - m rows of 2b samples.
  std::span<const double> legendre_block(int m) const;
  double legendre(int l, int m, int j) const;
  Complex phase(int m, int k) const { return phases_[static_cast<std::size_t>(m) * n_ + k]; }

  /// Grid quadrature of L(l,m) L(l',m) over the whole sphere (both j and k),
  /// which equals delta_{ll'} for orthonormal harmonics.
  double column_inner(int l, int lp, int m) const;

  const RowFft& fft() const noexcept { return *fft_; }

 private:
  std::shared_ptr<const SphericalGrid> grid_;
  int b_;
  int n_;
  std::vector<std::size_t> block_offset_;
  std::vector<double> legendre_;
  std::vector<Complex> phases_;
  std::unique_ptr<RowFft> fft_;
};

/// Throws DomainError when b exceeds max_bandwidth.
std::shared_ptr<const HarmonicTable> build_table(const SphericalGrid& grid,
                                                 int max_bandwidth = kDefaultMaxBandwidth);

/// Cached table per bandwidth, safe for concurrent callers.
std::shared_ptr<const HarmonicTable> table_for(int b);

/// Length-2b real/complex FFTs along longitude rows (FFTW-backed, thread-safe execution).
class RowFft {
 public:
  explicit RowFft(int n);
  ~RowFft();
  RowFft(const RowFft&) = delete;
  RowFft& operator=(const RowFft&) = delete;

  int size() const noexcept { return n_; }
  /// out[m] = sum_k in[k] e^{-2 pi i m k / n}, m = 0..n/2.
  void forward_real(const double* in, Complex* out) const;
  /// out[k] = sum_m in[m] e^{2 pi i m k / n} over the Hermitian extension of
  /// in[0..n/2]; in is overwritten.
  void inverse_real(Complex* in, double* out) const;
  /// Unnormalized complex DFT, sign -1 (forward) or +1 (inverse).
  void complex(const Complex* in, Complex* out, int sign) const;

 private:
  int n_;
  void* r2c_;
  void* c2r_;
  void* fwd_;
  void* bwd_;
};

}  // namespace sphcnn
