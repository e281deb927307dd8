#include "sphcnn/align.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include "sphcnn/errors.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

using std::numbers::pi;

namespace {

void check_shapes(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("feature lists must be non-empty and equal length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].bandwidth() != b[i].bandwidth() || a[i].channels() != b[i].channels()) {
      throw DomainError("feature " + std::to_string(i) + ": shape mismatch");
    }
  }
}

bool lex_less(const RotationZYZ& x, const RotationZYZ& y) {
  return std::tie(x.alpha, x.beta, x.gamma) < std::tie(y.alpha, y.beta, y.gamma);
}

// T(m, n) = sum over features, channels and l of conj(b_lm) d^l_mn(beta) a_ln,
// stored with offset L on both indices.
std::vector<Complex> t_matrix(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b, double beta,
                              int L) {
  const int side = 2 * L + 1;
  std::vector<Complex> t(static_cast<std::size_t>(side) * side, Complex{});
  std::map<int, std::vector<std::vector<double>>> small_d;
  for (std::size_t f = 0; f < a.size(); ++f) {
    const int bw = a[f].bandwidth().value();
    auto it = small_d.find(bw);
    if (it == small_d.end()) it = small_d.emplace(bw, wigner_small_d_all(bw, beta)).first;
    const auto& d = it->second;
    for (int c = 0; c < a[f].channels(); ++c) {
      for (int l = 0; l < bw; ++l) {
        const int w = 2 * l + 1;
        for (int m = -l; m <= l; ++m) {
          const Complex bc = std::conj(b[f].at(c, l, m));
          if (bc == Complex{}) continue;
          Complex* row = t.data() + static_cast<std::size_t>(m + L) * side + L;
          const double* drow = d[l].data() + static_cast<std::size_t>(m + l) * w + l;
          for (int n = -l; n <= l; ++n) row[n] += bc * (drow[n] * a[f].at(c, l, n));
        }
      }
    }
  }
  return t;
}

double evaluate_t(const std::vector<Complex>& t, int L, double alpha, double gamma) {
  const int side = 2 * L + 1;
  std::vector<Complex> eg(side), ea(side);
  for (int n = -L; n <= L; ++n) {
    eg[n + L] = std::polar(1.0, -n * gamma);
    ea[n + L] = std::polar(1.0, -n * alpha);
  }
  double acc = 0.0;
  for (int m = 0; m < side; ++m) {
    Complex row{};
    const Complex* tr = t.data() + static_cast<std::size_t>(m) * side;
    for (int n = 0; n < side; ++n) row += tr[n] * eg[n];
    acc += (ea[m] * row).real();
  }
  return acc;
}

struct Best {
  RotationZYZ rotation;
  double score = -std::numeric_limits<double>::infinity();
};

Best pick(std::span<const RotationZYZ> rots, const std::vector<double>& scores) {
  Best best;
  for (std::size_t i = 0; i < rots.size(); ++i) {
    if (scores[i] > best.score || (scores[i] == best.score && lex_less(rots[i], best.rotation))) {
      best = {rots[i], scores[i]};
    }
  }
  return best;
}

double wrap(double x) {
  x = std::fmod(x, 2.0 * pi);
  return x < 0.0 ? x + 2.0 * pi : x;
}

}  // namespace

std::vector<double> correlation_scores(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b,
                                       std::span<const RotationZYZ> rotations) {
  check_shapes(a, b);
  int L = 0;
  for (const auto& f : a) L = std::max(L, f.bandwidth().value() - 1);
  std::map<double, std::vector<std::size_t>> by_beta;
  for (std::size_t i = 0; i < rotations.size(); ++i) by_beta[rotations[i].beta].push_back(i);
  std::vector<std::pair<double, std::vector<std::size_t>>> groups(by_beta.begin(), by_beta.end());
  std::vector<double> scores(rotations.size());
  parallel_for(groups.size(), [&](std::size_t g) {
    const auto t = t_matrix(a, b, groups[g].first, L);
    for (std::size_t i : groups[g].second) scores[i] = evaluate_t(t, L, rotations[i].alpha, rotations[i].gamma);
  });
  return scores;
}

AlignmentResult so3_correlate(std::span<const SpectralCoeffs> a, std::span<const SpectralCoeffs> b,
                              const SearchOptions& options) {
  check_shapes(a, b);
  if (options.refine_levels < 0 || options.refine_points < 1) throw DomainError("bad refinement settings");
  const auto coarse = sample_rotations(options.coarse);
  AlignmentResult result;
  result.per_rotation_scores = correlation_scores(a, b, coarse);
  auto best = pick(coarse, result.per_rotation_scores);

  std::vector<double> sorted = result.per_rotation_scores;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double median = sorted[sorted.size() / 2];
  double mean_abs = 0.0;
  for (double s : result.per_rotation_scores) mean_abs += std::abs(s);
  mean_abs /= static_cast<double>(result.per_rotation_scores.size());
  result.degenerate = mean_abs == 0.0 || (best.score - median) / mean_abs < options.degenerate_threshold;

  if (const auto* grid = std::get_if<EquiangularGrid>(&options.coarse)) {
    double da = 2.0 * pi / grid->n_alpha;
    double db = pi / grid->n_beta;
    double dg = 2.0 * pi / grid->n_gamma;
    const int half = options.refine_points / 2;
    for (int level = 0; level < options.refine_levels; ++level) {
      // refine_points samples spanning +-1 current cell.
      const double step_a = half ? da / half : 0.0;
      const double step_b = half ? db / half : 0.0;
      const double step_g = half ? dg / half : 0.0;
      std::vector<RotationZYZ> local;
      for (int i = -half; i <= half; ++i) {
        for (int j = -half; j <= half; ++j) {
          const double beta = best.rotation.beta + j * step_b;
          if (beta < 0.0 || beta > pi) continue;
          for (int k = -half; k <= half; ++k) {
            local.push_back({wrap(best.rotation.alpha + i * step_a), beta, wrap(best.rotation.gamma + k * step_g)});
          }
        }
      }
      const auto scores = correlation_scores(a, b, local);
      const auto refined = pick(local, scores);
      if (refined.score > best.score) best = refined;
      da = step_a;
      db = step_b;
      dg = step_g;
    }
  }
  result.rotation = best.rotation;
  result.score = best.score;
  return result;
}

std::vector<SpectralCoeffs> alignment_features(const TriangleMesh& mesh, const AlignFeatures& features) {
  if (!features.net) {
    return {sft(mesh_to_sphere(mesh, features.bandwidth).signal)};
  }
  if (!features.params) throw DomainError("network given without parameters");
  const auto& net = *features.net;
  auto rep = mesh_to_sphere(mesh, net.input_bandwidth).signal;
  if (net.input_channels() == 1) {
    SphericalSignal d(rep.grid_ptr(), 1);
    std::copy(rep.channel(0).begin(), rep.channel(0).end(), d.values().begin());
    rep = std::move(d);
  } else if (net.input_channels() != 2) {
    throw DomainError("network must take 1 or 2 input channels for mesh alignment");
  }
  const auto r = forward(net, *features.params, rep);
  return {sft(r.tap(features.layer))};
}

AlignmentResult align_shapes(const TriangleMesh& a, const TriangleMesh& b, const AlignFeatures& features,
                             const SearchOptions& options, const std::optional<RotationZYZ>& truth) {
  const auto fa = alignment_features(a, features);
  const auto fb = alignment_features(b, features);
  auto result = so3_correlate(fa, fb, options);
  if (truth) result.angular_error_deg = geodesic_distance_deg(result.rotation, *truth);
  return result;
}

}  // namespace sphcnn
