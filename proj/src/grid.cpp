#include "sphcnn/grid.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "sphcnn/errors.hpp"

namespace sphcnn {

Bandwidth::Bandwidth(int b, int max_bandwidth) : b_(b) {
  if (b < 2) throw DomainError("bandwidth must be >= 2, got " + std::to_string(b));
  if (b > max_bandwidth) {
    throw DomainError("bandwidth " + std::to_string(b) + " exceeds maximum " +
                      std::to_string(max_bandwidth));
  }
}

SphericalGrid make_grid(Bandwidth bw) {
  using std::numbers::pi;
  const int b = bw.value();
  const int n = bw.samples();
  SphericalGrid g{bw, {}, {}, {}, {}};
  g.thetas.resize(n);
  g.phis.resize(n);
  g.quad_weights.resize(n);
  g.area_weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const double theta = pi * j / n;
    g.thetas[j] = theta;
    g.phis[j] = pi * j / b;
    g.area_weights[j] = std::sin(theta);
    // Driscoll-Healy weight for the colatitude integral of g(theta) sin(theta).
    double series = 0.0;
    for (int k = 0; k < b; ++k) series += std::sin((2 * k + 1) * theta) / (2 * k + 1);
    const double a = (2.0 / b) * std::sin(theta) * series;
    // Longitude spacing folded in; the pole row is exactly zero.
    g.quad_weights[j] = j == 0 ? 0.0 : a * (pi / b);
  }
  return g;
}

std::shared_ptr<const SphericalGrid> grid_for(int b) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const SphericalGrid>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[b];
  if (!slot) slot = std::make_shared<const SphericalGrid>(make_grid(Bandwidth(b)));
  return slot;
}

}  // namespace sphcnn
