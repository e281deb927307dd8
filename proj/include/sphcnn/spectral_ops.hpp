#pragma once

#include <vector>

#include "sphcnn/grid.hpp"
#include "sphcnn/sft.hpp"

namespace sphcnn {

enum class FilterMode { Full, Anchored };

/// Learnable zonal filter given by its order-0 spectrum h_0^l, l < b.
/// Full stores every degree; Anchored stores values at a few degrees and
/// interpolates linearly in l between them.
struct ZonalFilterSpec {
  FilterMode mode = FilterMode::Full;
  int bandwidth = 2;
  std::vector<double> full_coeffs;
  std::vector<int> anchor_degrees;
  std::vector<double> anchor_values;

  static ZonalFilterSpec full(std::vector<double> coeffs);
  static ZonalFilterSpec anchored(int b, std::vector<int> degrees, std::vector<double> values);
  /// n anchors at round(i (b - 1) / (n - 1)).
  static ZonalFilterSpec uniform(int b, std::vector<double> values);

  /// Throws DomainError on malformed specs.
  void validate() const;
  int num_parameters() const;
};

std::vector<int> uniform_anchor_degrees(int b, int n);

/// Row-major b x n matrix W with realize = W * anchor_values.
std::vector<double> interpolation_matrix(int b, const std::vector<int>& degrees);

std::vector<double> realize_filter(const ZonalFilterSpec& spec);

/// Convolution theorem factor 2 pi sqrt(4 pi / (2l + 1)).
double conv_scale(int l);

/// y_l^m = conv_scale(l) f_l^m h_0^l, same filter for every channel.
SpectralCoeffs conv_spectral(const SpectralCoeffs& f, const ZonalFilterSpec& h);

/// Channel-mixing convolution: out_o = sum_i conv(f_i, bank[o * in + i]).
SpectralCoeffs conv_spectral(const SpectralCoeffs& f, const std::vector<ZonalFilterSpec>& bank,
                             int out_channels);

/// Drops degrees >= b/2. With pre_smooth the kept degrees are tapered by a
/// Hann window first to reduce ringing.
SpectralCoeffs spectral_pool(const SpectralCoeffs& f, bool pre_smooth = false);
std::vector<double> spectral_pool_taper(int b_out);

/// 2x2 blocks averaged with sin(theta) weights; output bandwidth b/2.
SphericalSignal weighted_avg_pool(const SphericalSignal& s);
SphericalSignal max_pool(const SphericalSignal& s);

enum class DescriptorKind { WGAP, MAGL };

struct InvariantDescriptor {
  DescriptorKind kind = DescriptorKind::WGAP;
  int channels = 0;
  int degrees = 1;  // b for MAGL, 1 for WGAP
  std::vector<double> values;

  double at(int c, int l = 0) const { return values[static_cast<std::size_t>(c) * degrees + l]; }
};

/// Per channel sum sin(theta_j) v / sum sin(theta_j).
InvariantDescriptor wgap(const SphericalSignal& s);

/// Per channel and degree, the Euclidean norm of (f_{-l}^l .. f_l^l).
InvariantDescriptor magl(const SpectralCoeffs& f);

enum class Nonlinearity { None, ReLU };

SphericalSignal pointwise_nonlinearity(const SphericalSignal& s, Nonlinearity kind);

/// Spatial realization of a filter: ISFT with h_0^l at m = 0.
SphericalSignal filter_signal(const ZonalFilterSpec& spec);

}  // namespace sphcnn
