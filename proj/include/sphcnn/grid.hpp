#pragma once

#include <memory>
#include <vector>

namespace sphcnn {

inline constexpr int kDefaultMaxBandwidth = 512;

/// Bandwidth b of a 2b x 2b equiangular grid. Degrees 0..b-1 are resolved.
class Bandwidth {
 public:
  /// Throws DomainError unless 2 <= b <= max_bandwidth.
  explicit Bandwidth(int b, int max_bandwidth = kDefaultMaxBandwidth);

  int value() const noexcept { return b_; }
  int samples() const noexcept { return 2 * b_; }
  /// Number of (l, m) pairs with l < b, i.e. b^2.
  int num_coeffs() const noexcept { return b_ * b_; }

  friend bool operator==(Bandwidth, Bandwidth) = default;

 private:
  int b_;
};

/// Equiangular sampling theta_j = pi j / 2b, phi_k = pi k / b.
///
/// quad_weights[j] is the full per-sample weight of the Driscoll-Healy
/// quadrature, including the pi / b longitude spacing, so that
/// sum_{j,k} quad_weights[j] g(theta_j, phi_k) = integral of g over S^2
/// for every g bandlimited below degree 2b. They sum to 4 pi over the grid.
struct SphericalGrid {
  Bandwidth bandwidth;
  std::vector<double> thetas;
  std::vector<double> phis;
  std::vector<double> quad_weights;
  std::vector<double> area_weights;

  int size() const noexcept { return bandwidth.samples(); }
};

SphericalGrid make_grid(Bandwidth b);

/// Shared immutable grid for bandwidth b, built once per process.
std::shared_ptr<const SphericalGrid> grid_for(int b);

}  // namespace sphcnn
