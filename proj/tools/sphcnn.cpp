// Command-line front end. Machine-readable results go to files or stdout as
// JSON; diagnostics go to stderr. Exit codes: 0 ok, 1 usage, 2 data error,
// 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sphcnn/align.hpp"
#include "sphcnn/bench.hpp"
#include "sphcnn/config.hpp"
#include "sphcnn/equivariance.hpp"
#include "sphcnn/errors.hpp"
#include "sphcnn/io.hpp"
#include "sphcnn/mesh.hpp"
#include "sphcnn/network.hpp"
#include "sphcnn/parallel.hpp"
#include "sphcnn/spectral_ops.hpp"
#include "sphcnn/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sphcnn;

namespace {

// ---------------------------------------------------------------------------
// Helpers

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Dtype parse_dtype(const std::string& s) { return s == "f32" ? Dtype::F32 : Dtype::F64; }

RotationMode parse_rotation_mode(const std::string& s) {
  if (s == "z") return RotationMode::Z;
  if (s == "so3") return RotationMode::SO3;
  return RotationMode::None;
}

ordered_json rotation_json(const RotationZYZ& r) { return {r.alpha, r.beta, r.gamma}; }

void emit(const ordered_json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

bool is_mesh_path(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".off" || ext == ".obj";
}

std::string file_magic(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

SphericalSignal select_channels(const SphericalSignal& s, int channels) {
  if (s.channels() == channels) return s;
  if (channels > s.channels()) {
    throw DataError("input has " + std::to_string(s.channels()) + " channels, network needs " +
                    std::to_string(channels));
  }
  SphericalSignal out(s.grid_ptr(), channels);
  for (int c = 0; c < channels; ++c) std::copy(s.channel(c).begin(), s.channel(c).end(), out.channel(c).begin());
  return out;
}

/// Network input from a mesh (projected at the network bandwidth) or SPH1 file.
SphericalSignal load_input(const fs::path& p, const NetworkConfig& net) {
  SphericalSignal s = is_mesh_path(p) ? mesh_to_sphere(read_mesh(p), net.input_bandwidth).signal : read_signal(p);
  if (s.bandwidth().value() != net.input_bandwidth) {
    throw DataError(p.string() + ": bandwidth " + std::to_string(s.bandwidth().value()) + ", network expects " +
                    std::to_string(net.input_bandwidth));
  }
  return select_channels(s, net.input_channels());
}

struct Dataset {
  std::vector<std::string> classes;
  std::vector<fs::path> files;
  std::vector<Sample> samples;
};

/// dir/<class>/<file>, classes and files in lexicographic order.
Dataset load_dataset(const fs::path& dir, const NetworkConfig& net) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
  Dataset d;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) d.classes.push_back(e.path().filename().string());
  }
  std::sort(d.classes.begin(), d.classes.end());
  if (d.classes.empty()) throw DataError(dir.string() + " has no class subdirectories");
  if (static_cast<int>(d.classes.size()) > net.num_classes) {
    throw DataError(std::to_string(d.classes.size()) + " classes but the network has " +
                    std::to_string(net.num_classes));
  }
  for (std::size_t c = 0; c < d.classes.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / d.classes[c])) {
      if (!e.is_regular_file()) continue;
      const auto ext = e.path().extension().string();
      if (ext == ".sph" || is_mesh_path(e.path())) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      d.files.push_back(f);
      d.samples.push_back({load_input(f, net), static_cast<int>(c)});
    }
  }
  if (d.samples.empty()) throw DataError(dir.string() + " contains no .sph/.off/.obj files");
  return d;
}

NetworkConfig load_network(const std::string& path) {
  const auto text = read_text(path);
  // Accept either a bare network config or a training config.
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (!j.is_discarded() && j.is_object() && j.contains("network")) return train_from_json(text).network;
  return network_from_json(text);
}

ParameterStore load_params(const std::string& path, const NetworkConfig& net) {
  auto params = ParameterStore::from_named(read_checkpoint(path));
  check_parameters(net, params);
  return params;
}

// ---------------------------------------------------------------------------
// Subcommands

struct Mesh2SphereArgs {
  std::string mesh, out, dtype = "f64";
  int b = 32;
  double jitter = 0.0;
  std::optional<std::uint64_t> rotate;
  std::uint64_t seed = 0;
};

void run_mesh2sphere(const Mesh2SphereArgs& a) {
  auto mesh = read_mesh(a.mesh);
  RotationZYZ r;
  if (a.rotate) {
    r = draw_rotation(RotationMode::SO3, *a.rotate);
    mesh = rotate_mesh(mesh, r);
  }
  Vec3 offset = Vec3::Zero();
  if (a.jitter > 0.0) offset = jitter_offset(a.seed, a.jitter * bounding_sphere(mesh).radius);
  const auto rep = mesh_to_sphere(mesh, a.b, offset);
  write_signal(a.out, rep.signal, parse_dtype(a.dtype));
  ordered_json j;
  j["output"] = a.out;
  j["bandwidth"] = a.b;
  j["channels"] = rep.signal.channels();
  j["center"] = {rep.center.x(), rep.center.y(), rep.center.z()};
  j["radius"] = rep.radius;
  j["center_offset"] = {offset.x(), offset.y(), offset.z()};
  j["rotation_zyz"] = rotation_json(r);
  emit(j, "");
}

void run_sft(const std::string& in, const std::string& out, const std::string& method) {
  const auto s = read_signal(in);
  write_coeffs(out, sft(s, method == "direct" ? SftMethod::Direct : SftMethod::SeparationOfVariables));
}

void run_isft(const std::string& in, const std::string& out, const std::string& dtype) {
  write_signal(out, isft(read_coeffs(in)), parse_dtype(dtype));
}

void run_conv(const std::string& in, const std::string& filter, const std::string& out) {
  const auto f = read_coeffs(in);
  const auto cfg = filter_from_json(read_text(filter));
  for (const auto& spec : cfg.filters) {
    if (spec.bandwidth != f.bandwidth().value()) {
      throw DataError("filter bandwidth " + std::to_string(spec.bandwidth) + " does not match input " +
                      std::to_string(f.bandwidth().value()));
    }
  }
  if (cfg.out_channels == 0) {
    write_coeffs(out, conv_spectral(f, cfg.filters.front()));
    return;
  }
  if (static_cast<int>(cfg.filters.size()) != cfg.out_channels * f.channels()) {
    throw DataError("bank needs out_channels * input channels filters");
  }
  write_coeffs(out, conv_spectral(f, cfg.filters, cfg.out_channels));
}

void run_pool(const std::string& in, const std::string& out, const std::string& kind, bool smooth,
              const std::string& dtype) {
  const bool spectral_input = file_magic(in) == "SPEC";
  if (kind == "sp") {
    if (spectral_input) {
      write_coeffs(out, spectral_pool(read_coeffs(in), smooth));
    } else {
      write_signal(out, isft(spectral_pool(sft(read_signal(in)), smooth)), parse_dtype(dtype));
    }
    return;
  }
  if (spectral_input) throw DataError("wap and max pooling need a SPH1 signal");
  const auto s = read_signal(in);
  if (s.bandwidth().value() % 2 != 0) throw DataError("pooling needs an even bandwidth");
  write_signal(out, kind == "wap" ? weighted_avg_pool(s) : max_pool(s), parse_dtype(dtype));
}

struct TrainArgs {
  std::string config, data, out, log;
  std::uint64_t seed = 0;
};

void run_train(const TrainArgs& a) {
  const auto cfg = train_from_json(read_text(a.config));
  if (cfg.augment.center_jitter > 0.0) {
    throw DomainError("center_jitter applies at mesh projection; build jittered copies with mesh2sphere --jitter");
  }
  const auto data = load_dataset(a.data, cfg.network);
  std::cerr << "training on " << data.samples.size() << " samples, " << data.classes.size() << " classes\n";
  TrainOptions opts;
  opts.schedule = cfg.schedule;
  opts.augment = cfg.augment;
  opts.seed = a.seed;
  opts.on_epoch = [](const EpochLog& e) {
    std::cerr << "epoch " << e.epoch << " lr " << e.learning_rate << " loss " << e.mean_loss << " acc "
              << e.accuracy << '\n';
  };
  const auto result = train(cfg.network, init_parameters(cfg.network, a.seed), data.samples, opts);
  write_checkpoint(a.out, result.params.to_named());
  const auto eval = evaluate(cfg.network, result.params, data.samples);
  ordered_json j;
  j["checkpoint"] = a.out;
  j["classes"] = data.classes;
  j["parameters"] = result.params.total_size();
  j["seed"] = a.seed;
  j["train_accuracy"] = eval.accuracy;
  j["train_loss"] = eval.mean_loss;
  auto hist = ordered_json::array();
  for (const auto& e : result.history) {
    hist.push_back({{"epoch", e.epoch}, {"lr", e.learning_rate}, {"loss", e.mean_loss}, {"accuracy", e.accuracy}});
  }
  j["history"] = hist;
  emit(j, a.log);
}

struct InferArgs {
  std::string config, checkpoint, data, out, rotate = "none";
  std::vector<std::string> inputs;
  std::uint64_t seed = 0;
};

void run_infer(const InferArgs& a) {
  const auto net = load_network(a.config);
  const auto params = load_params(a.checkpoint, net);
  std::vector<fs::path> files;
  std::vector<Sample> samples;
  std::vector<std::string> classes;
  if (!a.data.empty()) {
    auto d = load_dataset(a.data, net);
    files = std::move(d.files);
    samples = std::move(d.samples);
    classes = std::move(d.classes);
  }
  for (const auto& f : a.inputs) {
    files.emplace_back(f);
    samples.push_back({load_input(f, net), -1});
  }
  if (samples.empty()) throw DomainError("nothing to infer: give inputs or --data");
  const RotationMode mode = parse_rotation_mode(a.rotate);
  std::vector<ForwardResult> results(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const auto x = augment(samples[i].signal, {mode, 0.0}, mix(a.seed, i));
    results[i] = forward(net, params, x);
  });
  ordered_json j;
  auto preds = ordered_json::array();
  int correct = 0;
  int labelled = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& logits = results[i].logits;
    const int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    ordered_json p{{"file", files[i].string()}, {"prediction", pred}};
    if (samples[i].label >= 0) {
      p["label"] = samples[i].label;
      ++labelled;
      correct += pred == samples[i].label;
    }
    p["logits"] = logits;
    preds.push_back(p);
  }
  if (!classes.empty()) j["classes"] = classes;
  j["rotation"] = a.rotate;
  j["predictions"] = preds;
  if (labelled > 0) j["accuracy"] = static_cast<double>(correct) / labelled;
  emit(j, a.out);
}

struct AlignArgs {
  std::string a, b, config, checkpoint, layer, out, truth;
  int bandwidth = 32;
  int grid = 16;
  int refine = 1;
};

std::vector<SpectralCoeffs> features_of(const fs::path& p, const AlignFeatures& f) {
  if (is_mesh_path(p)) return alignment_features(read_mesh(p), f);
  auto s = read_signal(p);
  if (!f.net) return {sft(s)};
  const auto r = forward(*f.net, *f.params, load_input(p, *f.net));
  return {sft(r.tap(f.layer))};
}

void run_align(const AlignArgs& a) {
  AlignFeatures feats;
  feats.bandwidth = a.bandwidth;
  std::optional<NetworkConfig> net;
  std::optional<ParameterStore> params;
  if (!a.checkpoint.empty()) {
    if (a.config.empty()) throw DomainError("--net needs --config");
    net = load_network(a.config);
    params = load_params(a.checkpoint, *net);
    feats.net = &*net;
    feats.params = &*params;
    feats.layer = a.layer.empty() ? "conv" + std::to_string(net->layers.size()) : a.layer;
  } else if (!a.layer.empty() && a.layer != "input") {
    throw DomainError("--layer needs --net");
  }
  SearchOptions search;
  search.coarse = EquiangularGrid{a.grid, a.grid, a.grid};
  search.refine_levels = a.refine;
  auto result = so3_correlate(features_of(a.a, feats), features_of(a.b, feats), search);
  ordered_json j;
  j["rotation_zyz"] = rotation_json(result.rotation);
  j["score"] = result.score;
  j["degenerate"] = result.degenerate;
  if (!a.truth.empty()) {
    std::vector<double> v;
    std::stringstream ss(a.truth);
    for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
    if (v.size() != 3) throw DomainError("--truth takes alpha,beta,gamma");
    j["angular_error"] = geodesic_distance_deg(result.rotation, {v[0], v[1], v[2]});
  }
  j["layer"] = feats.net ? feats.layer : "input";
  emit(j, a.out);
}

EquivarianceConfig row_from(const nlohmann::json& r) {
  EquivarianceConfig c;
  c.resolution = r.value("resolution", 64);
  c.bandlimited = r.value("bandlimited", false);
  const auto pool = r.value("pool", std::string("wap"));
  c.pool = pool == "sp" ? PoolKind::SP : pool == "max" ? PoolKind::Max : pool == "none" ? PoolKind::None : PoolKind::WAP;
  if (pool != "sp" && pool != "max" && pool != "none" && pool != "wap") throw DataError("unknown pool " + pool);
  c.linear = r.value("linear", false);
  return c;
}

void run_equiv_report(const std::string& config, std::uint64_t seed, const std::string& format,
                      const std::string& out) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!config.empty()) {
    cfg = nlohmann::json::parse(read_text(config), nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) throw DataError(config + ": invalid JSON object");
  }
  const int samples = cfg.value("samples", 20);
  const int rotations = cfg.value("rotations", 1);
  const int seeds = cfg.value("network_seeds", 4);
  const double decay = cfg.value("decay_degree", 4.0);
  const double width = cfg.value("pattern_width", 6.0);
  if (samples < 1 || rotations < 1 || seeds < 1) throw DataError("samples, rotations and network_seeds must be positive");
  nlohmann::json rows = cfg.value("rows", nlohmann::json::array());
  if (rows.empty()) {
    rows = nlohmann::json::parse(R"([
      {"resolution": 64, "pool": "wap"}, {"resolution": 64, "pool": "max"},
      {"resolution": 64, "pool": "sp"}, {"resolution": 64, "pool": "wap", "linear": true},
      {"resolution": 32, "pool": "wap"}, {"resolution": 64, "pool": "wap", "bandlimited": true},
      {"resolution": 64, "pool": "sp", "bandlimited": true, "linear": true}])");
  }
  std::vector<EquivarianceReport> reports;
  for (const auto& r : rows) {
    auto c = row_from(r);
    std::vector<EquivarianceReport> per_seed;
    if (r.contains("checkpoint")) {
      // A trained network: its own config, one parameter set.
      const auto net = load_network(r.at("network").get<std::string>());
      const auto params = load_params(r.at("checkpoint").get<std::string>(), net);
      c.resolution = 2 * net.input_bandwidth;
      c.trained = true;
      std::vector<SignalSource> src;
      for (int i = 0; i < samples; ++i) {
        src.push_back(c.bandlimited ? bandlimited_source(net.input_bandwidth, mix(seed, i))
                                    : pattern_source(mix(seed, i), 96, width));
      }
      per_seed.push_back(measure(net, params, src, rotations, seed, c));
    } else {
      const auto net = equivariance_network(c);
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t ns = mix(seed, 1000 + s);
        std::vector<SignalSource> src;
        for (int i = 0; i < samples; ++i) {
          src.push_back(c.bandlimited ? bandlimited_source(net.input_bandwidth, mix(ns, i))
                                      : pattern_source(mix(ns, i), 96, width));
        }
        per_seed.push_back(measure(net, equivariance_parameters(net, ns, decay), src, rotations, ns, c));
      }
    }
    auto avg = average_reports(per_seed);
    avg.seed = seed;
    for (const auto& w : avg.warnings) std::cerr << c.label() << ": " << w << '\n';
    reports.push_back(std::move(avg));
  }
  if (format == "table") {
    const auto table = format_table(reports);
    if (out.empty() || out == "-") {
      std::cout << table;
    } else {
      std::ofstream(out) << table;
    }
    return;
  }
  ordered_json j;
  j["norm"] = "quadrature-weighted L2 of bandlimited projections";
  j["seed"] = seed;
  j["samples_per_seed"] = samples;
  j["rotations_per_sample"] = rotations;
  j["network_seeds"] = seeds;
  auto arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(ordered_json::parse(r.to_json()));
  j["reports"] = arr;
  emit(j, out);
}

void run_bench_sft(const std::vector<int>& bandwidths, int reps, std::uint64_t seed, const std::string& out) {
  ordered_json j;
  auto arr = ordered_json::array();
  for (int b : bandwidths) {
    const auto t = time_sft(b, reps, seed);
    std::cerr << "b=" << b << " direct " << t.median_direct() << " s, sepvar " << t.median_sepvar() << " s\n";
    arr.push_back({{"bandwidth", b},
                   {"reps", reps},
                   {"direct_median_s", t.median_direct()},
                   {"sepvar_median_s", t.median_sepvar()},
                   {"speedup", t.median_direct() / t.median_sepvar()},
                   {"sepvar_faster", t.median_sepvar() < t.median_direct()},
                   {"max_deviation", t.max_deviation}});
  }
  j["results"] = arr;
  emit(j, out);
}

struct SynthArgs {
  std::string kind = "blobs", out, rotate = "none", dtype = "f64";
  int classes = 3, count = 100, b = 16;
  double jitter = 0.15;
  std::uint64_t seed = 0;
};

/// Class c puts its energy in degree c + 1 with random orders, plus weak
/// broadband noise; the power spectrum identifies the class at any rotation.
SphericalSignal harmonic_sample(int label, int b, std::uint64_t seed) {
  auto c = random_coeffs(Bandwidth(b), 1, seed);
  const int l0 = label + 1;
  for (int l = 0; l < b; ++l) {
    const double scale = l == l0 ? 1.0 : 0.05;
    for (int m = -l; m <= l; ++m) c.at(0, l, m) *= scale;
  }
  return isft(c);
}

void run_synth(const SynthArgs& a) {
  if (a.classes < 1 || a.count < 1) throw DomainError("classes and count must be positive");
  if (a.kind == "blobs" && a.classes > 3) throw DomainError("blobs has 3 classes");
  if (a.kind == "harmonics" && a.classes + 1 >= a.b) throw DomainError("harmonics needs classes + 1 < b");
  const RotationMode mode = parse_rotation_mode(a.rotate);
  ordered_json manifest;
  manifest["kind"] = a.kind;
  manifest["bandwidth"] = a.b;
  manifest["seed"] = a.seed;
  manifest["rotate"] = a.rotate;
  auto files = ordered_json::array();
  for (int label = 0; label < a.classes; ++label) {
    const fs::path dir = fs::path(a.out) / ("class" + std::to_string(label));
    fs::create_directories(dir);
    std::vector<SphericalSignal> made(a.count);
    parallel_for(static_cast<std::size_t>(a.count), [&](std::size_t i) {
      const std::uint64_t s = mix(mix(a.seed, label), i);
      const auto r = draw_rotation(mode, mix(s, 7));
      if (a.kind == "blobs") {
        made[i] = jittered_pattern(label, s, a.jitter).sample(a.b, r);
      } else {
        made[i] = rotate_signal(harmonic_sample(label, a.b, s), r);
      }
    });
    for (int i = 0; i < a.count; ++i) {
      std::ostringstream name;
      name << std::setw(5) << std::setfill('0') << i << ".sph";
      write_signal(dir / name.str(), made[i], parse_dtype(a.dtype));
      files.push_back({{"file", (fs::path("class" + std::to_string(label)) / name.str()).string()}, {"label", label}});
    }
  }
  manifest["files"] = files;
  std::ofstream(fs::path(a.out) / "manifest.json") << manifest.dump(2) << '\n';
  ordered_json j{{"output", a.out}, {"classes", a.classes}, {"count", a.count}};
  emit(j, "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spherical CNN toolkit: transforms, zonal convolution, training, alignment"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = available parallelism)");

  Mesh2SphereArgs m2s;
  auto* c_m2s = app.add_subcommand("mesh2sphere", "Ray-cast a mesh onto the sphere (distance, sin of normal angle)");
  c_m2s->add_option("mesh", m2s.mesh, "OFF or OBJ mesh")->required();
  c_m2s->add_option("-b,--bandwidth", m2s.b, "Bandwidth")->check(CLI::Range(1, 512));
  c_m2s->add_option("-o,--output", m2s.out, "Output SPH1 file")->required();
  c_m2s->add_option("--jitter", m2s.jitter, "Projection-centre jitter, fraction of bounding radius")
      ->check(CLI::NonNegativeNumber);
  c_m2s->add_option("--rotate", m2s.rotate, "Apply a random SO(3) rotation drawn from this seed");
  c_m2s->add_option("--seed", m2s.seed, "Seed for the jitter offset");
  c_m2s->add_option("--dtype", m2s.dtype, "Payload type")->check(CLI::IsMember({"f32", "f64"}));

  std::string in, out, method = "sepvar", dtype = "f64", filter, kind, config, format = "json";
  bool smooth = false;
  std::uint64_t seed = 0;
  auto* c_sft = app.add_subcommand("sft", "Forward spherical Fourier transform");
  c_sft->add_option("input", in, "SPH1 signal")->required();
  c_sft->add_option("-o,--output", out, "Output SPEC1 file")->required();
  c_sft->add_option("--method", method, "Transform")->check(CLI::IsMember({"direct", "sepvar"}));

  auto* c_isft = app.add_subcommand("isft", "Inverse spherical Fourier transform");
  c_isft->add_option("input", in, "SPEC1 coefficients")->required();
  c_isft->add_option("-o,--output", out, "Output SPH1 file")->required();
  c_isft->add_option("--dtype", dtype, "Payload type")->check(CLI::IsMember({"f32", "f64"}));

  auto* c_conv = app.add_subcommand("conv", "Zonal spherical convolution in the spectral domain");
  c_conv->add_option("input", in, "SPEC1 coefficients")->required();
  c_conv->add_option("--filter", filter, "Filter JSON")->required();
  c_conv->add_option("-o,--output", out, "Output SPEC1 file")->required();

  auto* c_pool = app.add_subcommand("pool", "Halve the bandwidth");
  c_pool->add_option("input", in, "SPH1 signal, or SPEC1 for --kind sp")->required();
  c_pool->add_option("--kind", kind, "Pooling")->required()->check(CLI::IsMember({"sp", "wap", "max"}));
  c_pool->add_option("-o,--output", out, "Output file")->required();
  c_pool->add_flag("--smooth", smooth, "Taper kept degrees before spectral pooling");
  c_pool->add_option("--dtype", dtype, "Payload type for SPH1 output")->check(CLI::IsMember({"f32", "f64"}));

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a network on dir/<class>/ files");
  c_train->add_option("--config", tr.config, "Training config JSON")->required();
  c_train->add_option("--data", tr.data, "Dataset directory")->required();
  c_train->add_option("--seed", tr.seed, "Seed for initialisation, shuffling and augmentation");
  c_train->add_option("-o,--output", tr.out, "Output checkpoint")->required();
  c_train->add_option("--log", tr.log, "Write the JSON log here instead of stdout");

  InferArgs inf;
  auto* c_infer = app.add_subcommand("infer", "Classify signals or meshes with a checkpoint");
  c_infer->add_option("inputs", inf.inputs, "SPH1 or mesh files");
  c_infer->add_option("--config", inf.config, "Network or training config JSON")->required();
  c_infer->add_option("--net,--checkpoint", inf.checkpoint, "Checkpoint")->required();
  c_infer->add_option("--data", inf.data, "Labelled dataset directory");
  c_infer->add_option("--rotate", inf.rotate, "Rotate inputs first")->check(CLI::IsMember({"none", "z", "so3"}));
  c_infer->add_option("--seed", inf.seed, "Seed for input rotations");
  c_infer->add_option("-o,--output", inf.out, "Output JSON file");

  AlignArgs al;
  auto* c_align = app.add_subcommand("align", "Rotation aligning a to b by SO(3) correlation");
  c_align->add_option("source", al.a, "Mesh or SPH1 signal to rotate")->required();
  c_align->add_option("target", al.b, "Mesh or SPH1 signal to match")->required();
  c_align->add_option("-b,--bandwidth", al.bandwidth, "Projection bandwidth without a network")
      ->check(CLI::Range(2, 512));
  c_align->add_option("--config", al.config, "Network config JSON");
  c_align->add_option("--net", al.checkpoint, "Checkpoint; correlate learned features");
  c_align->add_option("--layer", al.layer, "Tap to correlate (default: last layer)");
  c_align->add_option("--grid", al.grid, "Coarse samples per Euler angle")->check(CLI::Range(1, 256));
  c_align->add_option("--refine", al.refine, "Refinement passes")->check(CLI::Range(0, 8));
  c_align->add_option("--truth", al.truth, "Ground truth alpha,beta,gamma (radians)");
  c_align->add_option("-o,--output", al.out, "Output JSON file");

  auto* c_equiv = app.add_subcommand("equiv-report", "Per-layer equivariance error table");
  c_equiv->add_option("--config", config, "Report config JSON (rows, samples, ...)");
  c_equiv->add_option("--seed", seed, "Seed");
  c_equiv->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "table"}));
  c_equiv->add_option("-o,--output", out, "Output file");

  std::vector<int> bandwidths{8, 16, 32, 64};
  int reps = 10;
  auto* c_bench = app.add_subcommand("bench-sft", "Time direct vs separation-of-variables SFT");
  c_bench->add_option("--bandwidths", bandwidths, "Bandwidths")->delimiter(',')->check(CLI::Range(1, 512));
  c_bench->add_option("--reps", reps, "Repetitions")->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", seed, "Seed");
  c_bench->add_option("-o,--output", out, "Output JSON file");

  SynthArgs sy;
  auto* c_synth = app.add_subcommand("synth", "Write a labelled toy dataset as dir/classK/NNNNN.sph");
  c_synth->add_option("--kind", sy.kind, "Dataset")->check(CLI::IsMember({"harmonics", "blobs"}));
  c_synth->add_option("--classes", sy.classes, "Classes");
  c_synth->add_option("--count", sy.count, "Samples per class");
  c_synth->add_option("--seed", sy.seed, "Seed");
  c_synth->add_option("-b,--bandwidth", sy.b, "Bandwidth")->check(CLI::Range(2, 512));
  c_synth->add_option("--rotate", sy.rotate, "Rotation per sample")->check(CLI::IsMember({"none", "z", "so3"}));
  c_synth->add_option("--jitter", sy.jitter, "Blob direction jitter (radians)")->check(CLI::NonNegativeNumber);
  c_synth->add_option("--dtype", sy.dtype, "Payload type")->check(CLI::IsMember({"f32", "f64"}));
  c_synth->add_option("-o,--output", sy.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    set_thread_count(threads);
    if (*c_m2s) run_mesh2sphere(m2s);
    if (*c_sft) run_sft(in, out, method);
    if (*c_isft) run_isft(in, out, dtype);
    if (*c_conv) run_conv(in, filter, out);
    if (*c_pool) run_pool(in, out, kind, smooth, dtype);
    if (*c_train) run_train(tr);
    if (*c_infer) run_infer(inf);
    if (*c_align) run_align(al);
    if (*c_equiv) run_equiv_report(config, seed, format, out);
    if (*c_bench) run_bench_sft(bandwidths, reps, seed, out);
    if (*c_synth) run_synth(sy);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::logic_error& e) {
    std::cerr << "usage: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
