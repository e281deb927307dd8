#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sphcnn/mesh.hpp"
#include "sphcnn/network.hpp"
#include "sphcnn/rotation.hpp"
#include "sphcnn/sft.hpp"

namespace sphcnn {

/// Coarse search over a rotation scheme, then (for equiangular grids)
/// refine_levels passes over a local grid of refine_points per axis whose
/// spacing is 3x finer, spanning one coarse cell either side of the best.
struct SearchOptions {
  RotationScheme coarse = EquiangularGrid{16, 16, 16};
  int refine_levels = 1;
  int refine_points = 7;
  /// Flag as degenerate when (max - median) / mean |score| over the coarse
  /// scores falls below this.
  double degenerate_threshold = 1e-3;
};

struct AlignmentResult {
  RotationZYZ rotation;
  double score = 0.0;
  bool degenerate = false;
  /// Scores over the coarse candidates, in sample_rotations order.
  std::vector<double> per_rotation_scores;
  std::optional<double> angular_error_deg;
};

/// score(r) = sum over layers and channels of Re <rotate_spectrum(a, r), b>.
/// Candidates sharing a beta share one Wigner evaluation.
std::vector<double> correlation_scores(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b,
                                       std::span<const RotationZYZ> rotations);

/// Rotation r maximising the summed correlation, i.e. rotate(a, r) ~ b.
/// Ties go to the lexicographically smallest (alpha, beta, gamma).
AlignmentResult so3_correlate(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b,
                              const SearchOptions& options = {});

struct AlignFeatures {
  /// Input bandwidth when no network is given.
  int bandwidth = 32;
  const NetworkConfig* net = nullptr;
  const ParameterStore* params = nullptr;
  /// Tap to correlate ("input", "conv3", ...); ignored without a network.
  std::string layer = "input";
};

/// Spectra used for alignment: the mesh representation itself, or the chosen
/// network tap. Single-channel networks get the distance channel only.
std::vector<SpectralCoeffs> alignment_features(const TriangleMesh& mesh, const AlignFeatures& features);

/// Estimates r with rotate_mesh(a, r) ~ b. With a ground truth, also reports
/// the geodesic error in degrees.
AlignmentResult align_shapes(const TriangleMesh& a, const TriangleMesh& b, const AlignFeatures& features,
                             const SearchOptions& options = {},
                             const std::optional<RotationZYZ>& truth = std::nullopt);

}  // namespace sphcnn
