#include "sphcnn/equivariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "sphcnn/errors.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

using std::numbers::pi;

SignalSource bandlimited_source(int b, std::uint64_t seed) {
  auto coeffs = std::make_shared<const SpectralCoeffs>(random_coeffs(Bandwidth(b), 1, seed, 1.0));
  return [coeffs](int bw, const RotationZYZ& r) {
    if (bw != coeffs->bandwidth().value()) throw DomainError("bandlimited source sampled at a different bandwidth");
    return isft(rotate_spectrum(*coeffs, r));
  };
}

SignalSource pattern_source(std::uint64_t seed, int lmax, double width) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> count(3, 6);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  BlobPattern p;
  p.lmax = lmax;
  p.width = width;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    Vec3 c(normal(rng), normal(rng), normal(rng));
    p.blobs.push_back({c.normalized(), amp(rng)});
  }
  return [p](int b, const RotationZYZ& r) { return p.sample(b, r); };
}

SignalSource mesh_source(TriangleMesh mesh, bool distance_only) {
  auto shared = std::make_shared<const TriangleMesh>(std::move(mesh));
  return [shared, distance_only](int b, const RotationZYZ& r) {
    auto rep = mesh_to_sphere(rotate_mesh(*shared, r), b).signal;
    if (!distance_only) return rep;
    SphericalSignal d(rep.grid_ptr(), 1);
    std::copy(rep.channel(0).begin(), rep.channel(0).end(), d.values().begin());
    return d;
  };
}

namespace {

const char* pool_name(PoolKind p) {
  static const char* names[] = {"none", "sp", "wap", "max"};
  return names[static_cast<int>(p)];
}

}  // namespace

std::string EquivarianceConfig::label() const {
  std::string s = bandlimited ? "blim/" : "";
  s += std::to_string(resolution) + "/" + pool_name(pool) + (linear ? "/lin" : "/nonlin");
  if (trained) s += "/trained";
  return s;
}

NetworkConfig equivariance_network(const EquivarianceConfig& config) {
  if (config.resolution < 16 || config.resolution % 8 != 0) {
    throw DomainError("equivariance resolution must be a multiple of 8, at least 16");
  }
  const Nonlinearity nl = config.linear ? Nonlinearity::None : Nonlinearity::ReLU;
  NetworkConfig net;
  net.input_bandwidth = config.resolution / 2;
  net.layers = {
      {1, 8, FilterMode::Full, 0, PoolKind::None, nl},
      {8, 16, FilterMode::Full, 0, config.pool, nl},
      {16, 16, FilterMode::Full, 0, config.pool, nl},
      {16, 16, FilterMode::Full, 0, PoolKind::None, nl},
  };
  net.head = DescriptorKind::WGAP;
  net.num_classes = 3;
  net.validate();
  return net;
}

ParameterStore equivariance_parameters(const NetworkConfig& net, std::uint64_t seed, double decay_degree) {
  if (!(decay_degree > 0.0)) throw DomainError("decay degree must be positive");
  auto params = init_parameters(net, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  for (int br = 0; br < net.branches; ++br) {
    const auto& layers = net.branch(br);
    for (std::size_t li = 0; li < layers.size(); ++li) {
      if (layers[li].filter_mode != FilterMode::Full) throw DomainError("smooth parameters need Full filters");
      auto& t = params[(br ? "b1" : "b0") + std::string(".conv") + std::to_string(li + 1) + ".filter"];
      const int out = t.shape[0];
      const int in = t.shape[1];
      const int nb = t.shape[2];
      // Anchors at 0, 4, 8, 16, 32, ... in absolute degree.
      std::vector<int> anchors{0, 4};
      while (anchors.back() < nb) anchors.push_back(anchors.back() * 2);
      std::vector<double> w(anchors.size());
      for (int o = 0; o < out; ++o) {
        for (int i = 0; i < in; ++i) {
          for (auto& v : w) v = normal(rng) * std::sqrt(2.0 / in);
          std::size_t a = 0;
          for (int l = 0; l < nb; ++l) {
            while (anchors[a + 1] < l) ++a;
            const double f = static_cast<double>(l - anchors[a]) / (anchors[a + 1] - anchors[a]);
            t.data[(static_cast<std::size_t>(o) * in + i) * nb + l] =
                std::exp(-l / decay_degree) * ((1.0 - f) * w[a] + f * w[a + 1]);
          }
        }
      }
    }
  }
  return params;
}

EquivarianceReport average_reports(const std::vector<EquivarianceReport>& reports) {
  if (reports.empty()) throw DomainError("nothing to average");
  EquivarianceReport out = reports.front();
  for (std::size_t r = 1; r < reports.size(); ++r) {
    if (reports[r].layers != out.layers) throw DomainError("reports have different layers");
  }
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    double acc = 0.0;
    int count = 0;
    for (const auto& r : reports) {
      if (std::isnan(r.per_layer_error[l])) continue;
      acc += r.per_layer_error[l] * r.per_layer_count[l];
      count += r.per_layer_count[l];
    }
    out.per_layer_error[l] = count ? acc / count : std::numeric_limits<double>::quiet_NaN();
    out.per_layer_count[l] = count;
  }
  out.samples = 0;
  out.rotations_used = 0;
  out.warnings.clear();
  for (const auto& r : reports) {
    out.samples += r.samples;
    out.rotations_used += r.rotations_used;
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  out.network_seeds = static_cast<int>(reports.size());
  return out;
}

namespace {

// ||SFT(moved) - D(r) ref|| / ||ref||, NaN when ref is zero. By Parseval
// this is the quadrature-weighted L2 error of the bandlimited projections.
double relative_spectral_error(const SphericalSignal& moved, const SpectralCoeffs& ref, const RotationZYZ& r) {
  const auto got = sft(moved);
  const auto want = rotate_spectrum(ref, r);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t q = 0; q < got.coeffs().size(); ++q) {
    num += std::norm(got.coeffs()[q] - want.coeffs()[q]);
    den += std::norm(ref.coeffs()[q]);
  }
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return std::sqrt(num / den);
}

}  // namespace

EquivarianceReport measure(const NetworkConfig& net, const ParameterStore& params,
                           const std::vector<SignalSource>& sources, int rotations_per_sample,
                           std::uint64_t seed, const EquivarianceConfig& config) {
  net.validate();
  check_parameters(net, params);
  if (sources.empty()) throw DomainError("equivariance needs at least one signal");
  if (rotations_per_sample < 1) throw DomainError("rotations per sample must be positive");

  const int b = net.input_bandwidth;
  const std::size_t n_pairs = sources.size() * static_cast<std::size_t>(rotations_per_sample);
  const auto rotations = sample_rotations(RandomUniform{seed, static_cast<int>(n_pairs)});

  // errors[pair][layer], NaN when excluded.
  std::vector<std::vector<double>> errors(n_pairs);
  std::vector<std::string> names;
  {
    const auto probe = forward(net, params, sources[0](b, {}));
    for (const auto& t : probe.taps) names.push_back(t.name);
  }
  // Spectra of the unrotated taps, indexed [source][layer].
  std::vector<std::vector<SpectralCoeffs>> base_spec(sources.size());
  parallel_for(sources.size(), [&](std::size_t s) {
    for (const auto& t : forward(net, params, sources[s](b, {})).taps) base_spec[s].push_back(sft(t.signal));
  });
  parallel_for(n_pairs, [&](std::size_t p) {
    const std::size_t s = p / rotations_per_sample;
    const auto& r = rotations[p];
    const auto moved = forward(net, params, sources[s](b, r));
    errors[p].resize(names.size());
    for (std::size_t l = 0; l < names.size(); ++l) {
      errors[p][l] = relative_spectral_error(moved.taps[l].signal, base_spec[s][l], r);
    }
  });

  EquivarianceReport report;
  report.config = config;
  report.layers = names;
  report.samples = static_cast<int>(sources.size());
  report.rotations_used = static_cast<int>(n_pairs);
  report.seed = seed;
  report.per_layer_error.assign(names.size(), 0.0);
  report.per_layer_count.assign(names.size(), 0);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    for (std::size_t l = 0; l < names.size(); ++l) {
      if (std::isnan(errors[p][l])) {
        report.warnings.push_back("sample " + std::to_string(p / rotations_per_sample) + ": zero " + names[l] +
                                  " map excluded");
        continue;
      }
      report.per_layer_error[l] += errors[p][l];
      ++report.per_layer_count[l];
    }
  }
  for (std::size_t l = 0; l < names.size(); ++l) {
    if (report.per_layer_count[l] > 0) {
      report.per_layer_error[l] /= report.per_layer_count[l];
    } else {
      report.per_layer_error[l] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return report;
}

std::string EquivarianceReport::to_json() const {
  nlohmann::ordered_json j;
  j["config"] = {{"label", config.label()},
                 {"resolution", config.resolution},
                 {"bandlimited", config.bandlimited},
                 {"pool", pool_name(config.pool)},
                 {"linear", config.linear},
                 {"trained", config.trained}};
  j["norm"] = "quadrature-weighted L2 of bandlimited projections (spectral L2)";
  j["layers"] = layers;
  auto errs = nlohmann::ordered_json::array();
  for (double e : per_layer_error) errs.push_back(std::isnan(e) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e));
  j["per_layer_error"] = errs;
  j["per_layer_count"] = per_layer_count;
  j["samples"] = samples;
  j["rotations_used"] = rotations_used;
  j["seed"] = seed;
  j["network_seeds"] = network_seeds;
  j["warnings"] = warnings;
  return j.dump(2);
}

std::string format_table(const std::vector<EquivarianceReport>& reports) {
  std::vector<std::string> columns;
  for (const auto& r : reports) {
    for (const auto& l : r.layers) {
      if (std::find(columns.begin(), columns.end(), l) == columns.end()) columns.push_back(l);
    }
  }
  std::size_t label_width = 6;
  for (const auto& r : reports) label_width = std::max(label_width, r.config.label().size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width)) << "config";
  for (const auto& c : columns) out << "  " << std::right << std::setw(9) << c;
  out << '\n';
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(label_width)) << r.config.label();
    for (const auto& c : columns) {
      const auto it = std::find(r.layers.begin(), r.layers.end(), c);
      out << "  " << std::right << std::setw(9);
      if (it == r.layers.end() || std::isnan(r.per_layer_error[it - r.layers.begin()])) {
        out << "-";
      } else {
        out << std::fixed << std::setprecision(4) << r.per_layer_error[it - r.layers.begin()];
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace sphcnn
