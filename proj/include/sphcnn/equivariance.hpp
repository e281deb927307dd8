#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sphcnn/network.hpp"
#include "sphcnn/synth.hpp"

namespace sphcnn {

/// Produces an input signal at bandwidth b for the rotated source,
/// x_R(x) = x(R^{-1} x).
using SignalSource = std::function<SphericalSignal(int b, const RotationZYZ& r)>;

/// Random coefficients below b, rotated in the spectrum: exactly bandlimited.
SignalSource bandlimited_source(int b, std::uint64_t seed);

/// Random arrangement of 3 to 6 blobs sampled pointwise at rotated
/// positions. Degree-l energy falls off as exp(-2 (l / width)^2) up to lmax,
/// so it is not bandlimited at any grid bandwidth below lmax.
SignalSource pattern_source(std::uint64_t seed, int lmax = 96, double width = 6.0);

/// Ray-cast representation of a rotated mesh.
SignalSource mesh_source(TriangleMesh mesh, bool distance_only = false);

struct EquivarianceConfig {
  /// Grid side 2b of the network input.
  int resolution = 64;
  bool bandlimited = false;
  PoolKind pool = PoolKind::WAP;
  bool linear = false;
  bool trained = false;

  /// Short row label, e.g. "64/wap/nonlin" or "blim/64/sp/lin".
  std::string label() const;
};

/// Four-layer single-branch net (8, 16, 16, 16 channels, Full filters,
/// pooling in the second and third layers) used for the equivariance tables.
NetworkConfig equivariance_network(const EquivarianceConfig& config);

/// Untrained parameters whose filters are the same function of degree at
/// every resolution: random gains at degrees 0, 4, 8, 16, 32, ... joined
/// linearly and damped by exp(-l / decay_degree). Halving the resolution
/// then only truncates each filter.
ParameterStore equivariance_parameters(const NetworkConfig& net, std::uint64_t seed,
                                       double decay_degree = 4.0);

struct EquivarianceReport {
  EquivarianceConfig config;
  std::vector<std::string> layers;
  /// Mean relative error per layer over the included samples.
  std::vector<double> per_layer_error;
  /// Included (sample, rotation) pairs per layer.
  std::vector<int> per_layer_count;
  int samples = 0;
  int rotations_used = 0;
  std::uint64_t seed = 0;
  int network_seeds = 1;
  std::vector<std::string> warnings;

  std::string to_json() const;
};

/// Per tap: ||tap(x_R) - rotate(tap(x), R)|| / ||tap(x)||. Maps are compared
/// as spectra at the tap's bandwidth, so the norms are the quadrature
/// weighted L2 norms of their bandlimited projections. Averaged over sources and rotations_per_sample random
/// rotations each. Rotations are drawn from seed, so the report is
/// reproducible. Zero-norm maps are excluded and noted in warnings.
EquivarianceReport measure(const NetworkConfig& net, const ParameterStore& params,
                           const std::vector<SignalSource>& sources, int rotations_per_sample,
                           std::uint64_t seed, const EquivarianceConfig& config = {});

/// Count-weighted mean of reports for the same layers (e.g. several
/// network seeds).
EquivarianceReport average_reports(const std::vector<EquivarianceReport>& reports);

/// Aligned text table, one row per report and one column per layer.
std::string format_table(const std::vector<EquivarianceReport>& reports);

}  // namespace sphcnn
