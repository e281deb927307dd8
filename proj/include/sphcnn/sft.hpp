#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "sphcnn/grid.hpp"
#include "sphcnn/harmonics.hpp"

namespace sphcnn {

/// Multi-channel real function sampled on the 2b x 2b grid.
/// values are channel-major, then theta (row), then phi (column).
class SphericalSignal {
 public:
  SphericalSignal(std::shared_ptr<const SphericalGrid> grid, int channels);
  SphericalSignal(int b, int channels);
  /// Placeholder: one zero channel at b = 2.
  SphericalSignal() : SphericalSignal(2, 1) {}

  Bandwidth bandwidth() const noexcept { return grid_->bandwidth; }
  const SphericalGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const SphericalGrid>& grid_ptr() const noexcept { return grid_; }
  int channels() const noexcept { return channels_; }
  int side() const noexcept { return grid_->size(); }
  std::size_t channel_size() const noexcept {
    return static_cast<std::size_t>(side()) * side();
  }

  double& at(int c, int j, int k) { return values_[index(c, j, k)]; }
  double at(int c, int j, int k) const { return values_[index(c, j, k)]; }
  std::span<double> channel(int c) { return {values_.data() + c * channel_size(), channel_size()}; }
  std::span<const double> channel(int c) const {
    return {values_.data() + c * channel_size(), channel_size()};
  }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Throws NumericalError on NaN/Inf.
  void check_finite() const;

  std::size_t index(int c, int j, int k) const {
    return (static_cast<std::size_t>(c) * side() + j) * side() + k;
  }

 private:

  std::shared_ptr<const SphericalGrid> grid_;
  int channels_;
  std::vector<double> values_;
};

/// Harmonic coefficients f_l^m for l < b, -l <= m <= l, one b^2 block per channel,
/// packed at l^2 + l + m.
class SpectralCoeffs {
 public:
  SpectralCoeffs(Bandwidth b, int channels, bool real_origin = true);

  Bandwidth bandwidth() const noexcept { return b_; }
  int channels() const noexcept { return channels_; }
  bool real_origin() const noexcept { return real_origin_; }
  void set_real_origin(bool v) noexcept { real_origin_ = v; }

  static std::size_t lm_index(int l, int m) {
    return static_cast<std::size_t>(l) * l + l + m;
  }
  Complex& at(int c, int l, int m) { return coeffs_[c * block() + lm_index(l, m)]; }
  const Complex& at(int c, int l, int m) const { return coeffs_[c * block() + lm_index(l, m)]; }
  std::span<Complex> channel(int c) { return {coeffs_.data() + c * block(), block()}; }
  std::span<const Complex> channel(int c) const { return {coeffs_.data() + c * block(), block()}; }
  std::vector<Complex>& coeffs() noexcept { return coeffs_; }
  const std::vector<Complex>& coeffs() const noexcept { return coeffs_; }

  /// Overwrites m < 0 from m > 0 via f_{-m} = (-1)^m conj(f_m) and zeroes Im f_0.
  void enforce_real_symmetry();

 private:
  std::size_t block() const { return static_cast<std::size_t>(b_.num_coeffs()); }

  Bandwidth b_;
  int channels_;
  bool real_origin_;
  std::vector<Complex> coeffs_;
};

enum class SftMethod { Direct, SeparationOfVariables };

SpectralCoeffs sft_direct(const SphericalSignal& signal, const HarmonicTable& table);
SpectralCoeffs sft_sepvar(const SphericalSignal& signal, const HarmonicTable& table);
SpectralCoeffs sft(const SphericalSignal& signal, const HarmonicTable& table,
                   SftMethod method = SftMethod::SeparationOfVariables);

/// Inverse transform. Real-origin coefficients use the real expansion over
/// m >= 0; other coefficients go through complex synthesis and must describe
/// a real function (imaginary residue < 1e-9 relative), else DomainError.
SphericalSignal isft(const SpectralCoeffs& coeffs, const HarmonicTable& table);

/// Projects onto degrees < b (ISFT of SFT).
SphericalSignal bandlimit(const SphericalSignal& signal, const HarmonicTable& table);

/// Convenience overloads using the shared table for the signal bandwidth.
SpectralCoeffs sft(const SphericalSignal& signal, SftMethod method = SftMethod::SeparationOfVariables);
SphericalSignal isft(const SpectralCoeffs& coeffs);
SphericalSignal bandlimit(const SphericalSignal& signal);

// Half-spectrum kernels (m >= 0 only, packed tri_index(l, m)) used by the
// network layers and their adjoints.
namespace half {

inline std::size_t size(int b) { return static_cast<std::size_t>(b) * (b + 1) / 2; }

/// out[l,m] = sum_j row_weight[j] L(l,m,j) sum_k in[j,k] e^{-i m phi_k}.
void analyze(std::span<const double> in, std::span<const double> row_weight,
             const HarmonicTable& table, std::span<Complex> out);

/// out[j,k] = sum_{l,m>=0} m_scale[m] Re(in[l,m] L(l,m,j) e^{i m phi_k}).
void synthesize(std::span<const Complex> in, std::span<const double> m_scale,
                const HarmonicTable& table, std::span<double> out);

/// m_scale for the real expansion: 1 at m = 0, 2 above.
std::vector<double> real_expansion_scale(int b);

}  // namespace half

SpectralCoeffs expand_half(std::span<const Complex> half_coeffs, Bandwidth b, int channels);

}  // namespace sphcnn
