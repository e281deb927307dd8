#include "sphcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sphcnn/errors.hpp"
#include "sphcnn/harmonics.hpp"
#include "sphcnn/parallel.hpp"

namespace sphcnn {

// ---------------------------------------------------------------------------
// Configuration

int NetworkConfig::input_channels() const {
  return branches == 2 ? 2 : (layers.empty() ? 0 : layers.front().in_channels);
}

std::vector<int> NetworkConfig::layer_bandwidths(int br) const {
  std::vector<int> out;
  int b = input_bandwidth;
  for (const auto& layer : branch(br)) {
    out.push_back(b);
    if (layer.pool != PoolKind::None) b /= 2;
  }
  return out;
}

int NetworkConfig::output_bandwidth(int br) const {
  int b = input_bandwidth;
  for (const auto& layer : branch(br)) {
    if (layer.pool != PoolKind::None) b /= 2;
  }
  return b;
}

int NetworkConfig::descriptor_size() const {
  int d = 0;
  for (int br = 0; br < branches; ++br) {
    const int c = branch(br).back().out_channels;
    d += head == DescriptorKind::WGAP ? c : c * output_bandwidth(br);
  }
  return d;
}

int NetworkConfig::filter_size(int br, int layer) const {
  const auto& l = branch(br)[layer];
  const int b = layer_bandwidths(br)[layer];
  return l.filter_mode == FilterMode::Full ? b : std::min(l.anchors, b);
}

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw DomainError("network config: " + msg); };
  Bandwidth check(input_bandwidth);
  if (branches != 1 && branches != 2) fail("branches must be 1 or 2");
  if (layers.empty()) fail("no layers");
  if (num_classes < 1) fail("num_classes must be positive");
  if (branches == 1 && (!branch_layers.empty() || !concat_at.empty())) {
    fail("branch_layers/concat_at need branches = 2");
  }
  if (branches == 2 && branch_layers.size() != layers.size()) {
    fail("both branches need the same number of layers");
  }
  for (int br = 0; br < branches; ++br) {
    int b = input_bandwidth;
    for (std::size_t i = 0; i < branch(br).size(); ++i) {
      const auto& l = branch(br)[i];
      if (l.in_channels < 1 || l.out_channels < 1) fail("channel counts must be positive");
      if (l.filter_mode == FilterMode::Anchored && l.anchors < 2) fail("need at least 2 anchors");
      if (l.pool != PoolKind::None) {
        if (b % 2 || b / 2 < 2) fail("pooling needs an even bandwidth >= 4");
        b /= 2;
      }
    }
  }
  if (branches == 2) {
    if (layers.front().in_channels != 1 || branch_layers.front().in_channels != 1) {
      fail("each branch takes one input channel");
    }
    if (layer_bandwidths(0) != layer_bandwidths(1)) fail("branches must pool identically");
  }
  for (int i : concat_at) {
    if (i < 1 || i >= static_cast<int>(layers.size())) fail("concat index out of range");
  }
  for (std::size_t i = 1; i < layers.size(); ++i) {
    int expect = layers[i - 1].out_channels;
    if (std::find(concat_at.begin(), concat_at.end(), static_cast<int>(i)) != concat_at.end()) {
      expect += branch_layers[i - 1].out_channels;
    }
    if (layers[i].in_channels != expect) {
      fail("layer " + std::to_string(i + 1) + " expects " + std::to_string(expect) + " input channels");
    }
  }
  for (std::size_t i = 1; i < branch_layers.size(); ++i) {
    if (branch_layers[i].in_channels != branch_layers[i - 1].out_channels) {
      fail("branch 1 layer " + std::to_string(i + 1) + " channel mismatch");
    }
  }
}

NetworkConfig NetworkConfig::toy(int b, int num_classes, PoolKind pool, int anchors) {
  NetworkConfig n;
  n.input_bandwidth = b;
  n.num_classes = num_classes;
  n.layers = {
      {1, 8, FilterMode::Anchored, anchors, PoolKind::None, Nonlinearity::ReLU},
      {8, 16, FilterMode::Anchored, anchors, pool, Nonlinearity::ReLU},
      {16, 16, FilterMode::Anchored, anchors, PoolKind::None, Nonlinearity::ReLU},
  };
  n.validate();
  return n;
}

NetworkConfig NetworkConfig::two_branch(int b, int anchors, int num_classes, PoolKind pool) {
  NetworkConfig n;
  n.input_bandwidth = b;
  n.num_classes = num_classes;
  n.branches = 2;
  n.concat_at = {2, 4, 6};
  const int widths[] = {16, 16, 32, 32, 64, 64, 128, 128};
  int in0 = 1, in1 = 1;
  for (int i = 0; i < 8; ++i) {
    const bool grows = i > 0 && widths[i] > widths[i - 1];
    const PoolKind p = grows ? pool : PoolKind::None;
    if (grows) in0 += in1;
    n.layers.push_back({in0, widths[i], FilterMode::Anchored, anchors, p, Nonlinearity::ReLU});
    n.branch_layers.push_back({in1, widths[i], FilterMode::Anchored, anchors, p, Nonlinearity::ReLU});
    in0 = in1 = widths[i];
  }
  n.validate();
  return n;
}

// ---------------------------------------------------------------------------
// Parameters

Tensor& ParameterStore::add(const std::string& name, std::vector<int> shape) {
  if (index_.contains(name)) throw DomainError("duplicate parameter " + name);
  std::size_t size = 1;
  for (int d : shape) size *= static_cast<std::size_t>(d);
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.push_back({std::move(shape), std::vector<double>(size, 0.0)});
  return tensors_.back();
}

Tensor& ParameterStore::operator[](const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw DomainError("unknown parameter " + name);
  return tensors_[it->second];
}

const Tensor& ParameterStore::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DomainError("unknown parameter " + name);
  return tensors_[it->second];
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.data.size();
  return n;
}

ParameterStore ParameterStore::zeros_like() const {
  ParameterStore out;
  for (std::size_t i = 0; i < names_.size(); ++i) out.add(names_[i], tensors_[i].shape);
  return out;
}

void ParameterStore::axpy(double scale, const ParameterStore& other) {
  if (other.names_ != names_) throw DomainError("parameter layouts differ");
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    auto& a = tensors_[i].data;
    const auto& b = other.tensors_[i].data;
    for (std::size_t k = 0; k < a.size(); ++k) a[k] += scale * b[k];
  }
}

std::vector<NamedTensor> ParameterStore::to_named() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    NamedTensor t{names_[i], {}, tensors_[i].data};
    for (int d : tensors_[i].shape) t.shape.push_back(static_cast<std::uint32_t>(d));
    out.push_back(std::move(t));
  }
  return out;
}

ParameterStore ParameterStore::from_named(const std::vector<NamedTensor>& tensors) {
  ParameterStore out;
  for (const auto& t : tensors) {
    std::vector<int> shape(t.shape.begin(), t.shape.end());
    out.add(t.name, shape).data = t.data;
  }
  return out;
}

namespace {

std::string layer_prefix(int br, int layer) {
  return "b" + std::to_string(br) + ".conv" + std::to_string(layer + 1);
}

}  // namespace

ParameterStore init_parameters(const NetworkConfig& net, std::uint64_t seed) {
  net.validate();
  ParameterStore p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int br = 0; br < net.branches; ++br) {
    for (std::size_t i = 0; i < net.branch(br).size(); ++i) {
      const auto& l = net.branch(br)[i];
      const int n = net.filter_size(br, static_cast<int>(i));
      auto& f = p.add(layer_prefix(br, static_cast<int>(i)) + ".filter", {l.out_channels, l.in_channels, n});
      // Parameters are gains (see realize_layers), so He scaling applies directly.
      const double gain = std::sqrt(2.0 / l.in_channels);
      for (double& v : f.data) v = gain * normal(rng);
      p.add(layer_prefix(br, static_cast<int>(i)) + ".bias", {l.out_channels});
    }
  }
  const int d = net.descriptor_size();
  auto& w = p.add("head.weight", {net.num_classes, d});
  for (double& v : w.data) v = normal(rng) / std::sqrt(static_cast<double>(d));
  p.add("head.bias", {net.num_classes});
  return p;
}

void check_parameters(const NetworkConfig& net, const ParameterStore& params) {
  const auto expect = init_parameters(net, 0);
  for (const auto& name : expect.names()) {
    if (!params.contains(name)) throw DataError("missing parameter " + name);
    if (params[name].shape != expect[name].shape) throw DataError("shape mismatch for " + name);
  }
  if (params.names().size() != expect.names().size()) throw DataError("unexpected extra parameters");
}

// ---------------------------------------------------------------------------
// Forward and backward passes

namespace {

}  // namespace

std::vector<int> anchor_degrees(const NetworkConfig& net, int br, int layer) {
  const int b = net.layer_bandwidths(br)[layer];
  const int n = net.filter_size(br, layer);
  if (net.branch(br)[layer].filter_mode == FilterMode::Full) {
    std::vector<int> d(n);
    std::iota(d.begin(), d.end(), 0);
    return d;
  }
  return uniform_anchor_degrees(b, n);
}

std::vector<ZonalFilterSpec> layer_filters(const NetworkConfig& net, const ParameterStore& params, int br,
                                           int layer) {
  const auto& l = net.branch(br).at(layer);
  const int b = net.layer_bandwidths(br)[layer];
  const int n = net.filter_size(br, layer);
  const auto degrees = anchor_degrees(net, br, layer);
  const auto& theta = params[layer_prefix(br, layer) + ".filter"].data;
  std::vector<ZonalFilterSpec> out;
  for (int pair = 0; pair < l.out_channels * l.in_channels; ++pair) {
    std::vector<double> values(n);
    for (int a = 0; a < n; ++a) values[a] = theta[static_cast<std::size_t>(pair) * n + a] / conv_scale(degrees[a]);
    out.push_back(l.filter_mode == FilterMode::Full ? ZonalFilterSpec::full(std::move(values))
                                                    : ZonalFilterSpec::anchored(b, degrees, std::move(values)));
  }
  return out;
}

namespace {

struct LayerWeights {
  int in = 0, out = 0, b = 0, b_spec = 0, n = 0;
  std::vector<double> interp;  // b x n
  std::vector<double> h;       // [out][in][l], conv_scale folded in
  std::vector<double> bias;
};

std::vector<LayerWeights> realize_layers(const NetworkConfig& net, const ParameterStore& params, int br) {
  std::vector<LayerWeights> out;
  const auto bws = net.layer_bandwidths(br);
  for (std::size_t i = 0; i < net.branch(br).size(); ++i) {
    const auto& l = net.branch(br)[i];
    LayerWeights w;
    w.in = l.in_channels;
    w.out = l.out_channels;
    w.b = bws[i];
    w.b_spec = l.pool == PoolKind::SP ? w.b / 2 : w.b;
    w.n = net.filter_size(br, static_cast<int>(i));
    const auto degrees = anchor_degrees(net, br, static_cast<int>(i));
    // Stored value theta_a is the gain conv_scale(l_a) * h(l_a) at its anchor;
    // h itself is interpolated linearly between anchors. Folding 1/conv_scale
    // into the interpolation weights keeps that and gives unit-scale parameters.
    const auto base = interpolation_matrix(w.b, degrees);
    w.interp.resize(base.size());
    for (int k = 0; k < w.b; ++k) {
      for (int a = 0; a < w.n; ++a) {
        const std::size_t idx = static_cast<std::size_t>(k) * w.n + a;
        w.interp[idx] = base[idx] / conv_scale(degrees[a]);
      }
    }
    const auto& theta = params[layer_prefix(br, static_cast<int>(i)) + ".filter"].data;
    w.h.assign(static_cast<std::size_t>(w.out) * w.in * w.b, 0.0);
    for (int pair = 0; pair < w.out * w.in; ++pair) {
      for (int k = 0; k < w.b; ++k) {
        double acc = 0.0;
        for (int a = 0; a < w.n; ++a) {
          acc += w.interp[static_cast<std::size_t>(k) * w.n + a] *
                 theta[static_cast<std::size_t>(pair) * w.n + a];
        }
        w.h[static_cast<std::size_t>(pair) * w.b + k] = conv_scale(k) * acc;
      }
    }
    w.bias = params[layer_prefix(br, static_cast<int>(i)) + ".bias"].data;
    out.push_back(std::move(w));
  }
  return out;
}

struct LayerCache {
  std::vector<Complex> F;  // in * half(b)
  SphericalSignal pre_pool;
  std::vector<std::uint32_t> argmax;  // Max pool: flat source index per output sample
  SphericalSignal pre_act;
  SphericalSignal output;
};

struct BranchCache {
  std::vector<SphericalSignal> inputs;  // per layer, after concatenation
  std::vector<LayerCache> layers;
};

SphericalSignal concat(const SphericalSignal& a, const SphericalSignal& b) {
  SphericalSignal out(a.bandwidth().value(), a.channels() + b.channels());
  std::copy(a.values().begin(), a.values().end(), out.values().begin());
  std::copy(b.values().begin(), b.values().end(), out.values().begin() + a.values().size());
  return out;
}

SphericalSignal slice_channels(const SphericalSignal& s, int first, int count) {
  SphericalSignal out(s.bandwidth().value(), count);
  const auto n = s.channel_size();
  std::copy_n(s.values().begin() + first * n, count * n, out.values().begin());
  return out;
}

void layer_forward(const LayerConfig& cfg, const LayerWeights& w, const SphericalSignal& x,
                   LayerCache& cache) {
  const auto& table = *table_for(w.b);
  const std::size_t hs = half::size(w.b);
  cache.F.assign(static_cast<std::size_t>(w.in) * hs, Complex{});
  for (int i = 0; i < w.in; ++i) {
    half::analyze(x.channel(i), table.grid().quad_weights, table,
                  std::span(cache.F).subspan(i * hs, hs));
  }
  const auto& table_out = *table_for(w.b_spec);
  const std::size_t hs_out = half::size(w.b_spec);
  const auto scale = half::real_expansion_scale(w.b_spec);
  cache.pre_pool = SphericalSignal(table_out.grid_ptr(), w.out);
  std::vector<Complex> y(hs_out);
  for (int o = 0; o < w.out; ++o) {
    std::fill(y.begin(), y.end(), Complex{});
    for (int i = 0; i < w.in; ++i) {
      const double* h = w.h.data() + (static_cast<std::size_t>(o) * w.in + i) * w.b;
      const Complex* f = cache.F.data() + i * hs;
      for (int l = 0; l < w.b_spec; ++l) {
        for (int m = 0; m <= l; ++m) y[tri_index(l, m)] += h[l] * f[tri_index(l, m)];
      }
    }
    auto out = cache.pre_pool.channel(o);
    half::synthesize(y, scale, table_out, out);
    for (double& v : out) v += w.bias[o];
  }
  switch (cfg.pool) {
    case PoolKind::None:
    case PoolKind::SP:
      cache.pre_act = cache.pre_pool;
      break;
    case PoolKind::WAP:
      cache.pre_act = weighted_avg_pool(cache.pre_pool);
      break;
    case PoolKind::Max: {
      const auto& src = cache.pre_pool;
      SphericalSignal out(w.b / 2, w.out);
      cache.argmax.assign(out.values().size(), 0);
      const int half_n = out.side();
      for (int c = 0; c < w.out; ++c) {
        for (int j = 0; j < half_n; ++j) {
          for (int k = 0; k < half_n; ++k) {
            std::size_t best = src.index(c, 2 * j, 2 * k);
            for (int dj = 0; dj < 2; ++dj) {
              for (int dk = 0; dk < 2; ++dk) {
                const std::size_t idx = src.index(c, 2 * j + dj, 2 * k + dk);
                if (src.values()[idx] > src.values()[best]) best = idx;
              }
            }
            out.at(c, j, k) = src.values()[best];
            cache.argmax[out.index(c, j, k)] = static_cast<std::uint32_t>(best);
          }
        }
      }
      cache.pre_act = std::move(out);
      break;
    }
  }
  cache.output = pointwise_nonlinearity(cache.pre_act, cfg.nonlinearity);
}

// Returns the gradient with respect to the layer input and accumulates
// parameter gradients into g_theta / g_bias.
SphericalSignal layer_backward(const LayerConfig& cfg, const LayerWeights& w, const LayerCache& cache,
                               const SphericalSignal& g_out, std::vector<double>& g_theta,
                               std::vector<double>& g_bias) {
  SphericalSignal g_act = g_out;
  if (cfg.nonlinearity == Nonlinearity::ReLU) {
    for (std::size_t i = 0; i < g_act.values().size(); ++i) {
      if (!(cache.pre_act.values()[i] > 0.0)) g_act.values()[i] = 0.0;
    }
  }
  SphericalSignal g_pre(cache.pre_pool.bandwidth().value(), w.out);
  switch (cfg.pool) {
    case PoolKind::None:
    case PoolKind::SP:
      g_pre = std::move(g_act);
      break;
    case PoolKind::WAP: {
      const auto& area = cache.pre_pool.grid().area_weights;
      for (int c = 0; c < w.out; ++c) {
        for (int j = 0; j < g_act.side(); ++j) {
          const double w0 = area[2 * j], w1 = area[2 * j + 1];
          const double total = 2.0 * (w0 + w1);
          const double a0 = total > 0.0 ? w0 / total : 0.25;
          const double a1 = total > 0.0 ? w1 / total : 0.25;
          for (int k = 0; k < g_act.side(); ++k) {
            const double g = g_act.at(c, j, k);
            g_pre.at(c, 2 * j, 2 * k) = a0 * g;
            g_pre.at(c, 2 * j, 2 * k + 1) = a0 * g;
            g_pre.at(c, 2 * j + 1, 2 * k) = a1 * g;
            g_pre.at(c, 2 * j + 1, 2 * k + 1) = a1 * g;
          }
        }
      }
      break;
    }
    case PoolKind::Max:
      for (std::size_t i = 0; i < g_act.values().size(); ++i) {
        g_pre.values()[cache.argmax[i]] += g_act.values()[i];
      }
      break;
  }

  const auto& table = *table_for(w.b);
  const auto& table_out = *table_for(w.b_spec);
  const std::size_t hs = half::size(w.b);
  const std::size_t hs_out = half::size(w.b_spec);
  const auto scale = half::real_expansion_scale(w.b_spec);
  const std::vector<double> ones_out(g_pre.side(), 1.0);

  std::vector<Complex> gY(static_cast<std::size_t>(w.out) * hs_out);
  for (int o = 0; o < w.out; ++o) {
    const auto ch = g_pre.channel(o);
    g_bias[o] += std::accumulate(ch.begin(), ch.end(), 0.0);
    auto dst = std::span(gY).subspan(o * hs_out, hs_out);
    half::analyze(ch, ones_out, table_out, dst);
    for (int l = 0; l < w.b_spec; ++l) {
      for (int m = 0; m <= l; ++m) dst[tri_index(l, m)] *= scale[m];
    }
  }

  std::vector<Complex> gF(static_cast<std::size_t>(w.in) * hs, Complex{});
  std::vector<double> gh(w.b);
  for (int o = 0; o < w.out; ++o) {
    const Complex* gy = gY.data() + o * hs_out;
    for (int i = 0; i < w.in; ++i) {
      const std::size_t pair = static_cast<std::size_t>(o) * w.in + i;
      const double* h = w.h.data() + pair * w.b;
      const Complex* f = cache.F.data() + i * hs;
      Complex* gf = gF.data() + i * hs;
      std::fill(gh.begin(), gh.end(), 0.0);
      for (int l = 0; l < w.b_spec; ++l) {
        double acc = 0.0;
        for (int m = 0; m <= l; ++m) {
          const std::size_t t = tri_index(l, m);
          acc += gy[t].real() * f[t].real() + gy[t].imag() * f[t].imag();
          gf[t] += h[l] * gy[t];
        }
        gh[l] = conv_scale(l) * acc;
      }
      double* gt = g_theta.data() + pair * w.n;
      for (int l = 0; l < w.b_spec; ++l) {
        for (int a = 0; a < w.n; ++a) gt[a] += w.interp[static_cast<std::size_t>(l) * w.n + a] * gh[l];
      }
    }
  }

  SphericalSignal g_in(table.grid_ptr(), w.in);
  const std::vector<double> ones(w.b, 1.0);
  const auto& qw = table.grid().quad_weights;
  for (int i = 0; i < w.in; ++i) {
    auto dst = g_in.channel(i);
    half::synthesize(std::span(gF).subspan(i * hs, hs), ones, table, dst);
    for (int j = 0; j < g_in.side(); ++j) {
      for (int k = 0; k < g_in.side(); ++k) dst[static_cast<std::size_t>(j) * g_in.side() + k] *= qw[j];
    }
  }
  return g_in;
}

struct Pass {
  std::vector<std::vector<LayerWeights>> weights;  // per branch
};

Pass prepare(const NetworkConfig& net, const ParameterStore& params) {
  net.validate();
  Pass p;
  for (int br = 0; br < net.branches; ++br) p.weights.push_back(realize_layers(net, params, br));
  return p;
}

bool is_concat(const NetworkConfig& net, int layer) {
  return std::find(net.concat_at.begin(), net.concat_at.end(), layer) != net.concat_at.end();
}

struct FullForward {
  std::vector<BranchCache> branches;
  std::vector<double> descriptor;
  std::vector<std::vector<Complex>> head_spectra;  // MAGL: half spectrum per branch
  std::vector<double> logits;
};

void check_input(const NetworkConfig& net, const SphericalSignal& s) {
  if (s.bandwidth().value() != net.input_bandwidth) {
    throw DomainError("input bandwidth " + std::to_string(s.bandwidth().value()) +
                      " does not match network bandwidth " + std::to_string(net.input_bandwidth));
  }
  if (s.channels() != net.input_channels()) {
    throw DomainError("input has " + std::to_string(s.channels()) + " channels, network expects " +
                      std::to_string(net.input_channels()));
  }
}

FullForward run_forward(const NetworkConfig& net, const Pass& pass, const ParameterStore& params,
                        const SphericalSignal& signal) {
  check_input(net, signal);
  FullForward ff;
  ff.branches.resize(net.branches);
  const std::size_t depth = net.layers.size();
  for (int br = 0; br < net.branches; ++br) {
    ff.branches[br].inputs.resize(depth);
    ff.branches[br].layers.resize(depth);
  }
  // Branch 1 never reads branch 0, so run it first at each depth.
  for (std::size_t i = 0; i < depth; ++i) {
    for (int br = net.branches - 1; br >= 0; --br) {
      auto& bc = ff.branches[br];
      if (i == 0) {
        bc.inputs[0] = net.branches == 2 ? slice_channels(signal, br, 1) : signal;
      } else if (br == 0 && is_concat(net, static_cast<int>(i))) {
        bc.inputs[i] = concat(bc.layers[i - 1].output, ff.branches[1].layers[i - 1].output);
      } else {
        bc.inputs[i] = bc.layers[i - 1].output;
      }
      layer_forward(net.branch(br)[i], pass.weights[br][i], bc.inputs[i], bc.layers[i]);
    }
  }
  ff.head_spectra.resize(net.branches);
  for (int br = 0; br < net.branches; ++br) {
    const auto& out = ff.branches[br].layers.back().output;
    if (net.head == DescriptorKind::WGAP) {
      const auto d = wgap(out);
      ff.descriptor.insert(ff.descriptor.end(), d.values.begin(), d.values.end());
    } else {
      const int b = out.bandwidth().value();
      const auto& table = *table_for(b);
      const std::size_t hs = half::size(b);
      auto& spec = ff.head_spectra[br];
      spec.assign(out.channels() * hs, Complex{});
      for (int c = 0; c < out.channels(); ++c) {
        half::analyze(out.channel(c), table.grid().quad_weights, table, std::span(spec).subspan(c * hs, hs));
        for (int l = 0; l < b; ++l) {
          double acc = std::norm(spec[c * hs + tri_index(l, 0)]);
          for (int m = 1; m <= l; ++m) acc += 2.0 * std::norm(spec[c * hs + tri_index(l, m)]);
          ff.descriptor.push_back(std::sqrt(acc));
        }
      }
    }
  }
  const auto& W = params["head.weight"].data;
  const auto& c = params["head.bias"].data;
  const std::size_t d = ff.descriptor.size();
  ff.logits.assign(net.num_classes, 0.0);
  for (int k = 0; k < net.num_classes; ++k) {
    double acc = c[k];
    for (std::size_t i = 0; i < d; ++i) acc += W[k * d + i] * ff.descriptor[i];
    ff.logits[k] = acc;
  }
  return ff;
}

double cross_entropy(const std::vector<double>& logits, int label, std::vector<double>* grad) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  if (grad) {
    grad->resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k) (*grad)[k] = std::exp(logits[k] - lse);
    (*grad)[label] -= 1.0;
  }
  return lse - logits[label];
}

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_label(const NetworkConfig& net, int label) {
  if (label < 0 || label >= net.num_classes) throw DomainError("label out of range");
}

double sample_backward(const NetworkConfig& net, const Pass& pass, const ParameterStore& params,
                       const Sample& s, ParameterStore& grad, bool& correct) {
  check_label(net, s.label);
  const auto ff = run_forward(net, pass, params, s.signal);
  std::vector<double> g_logits;
  const double loss = cross_entropy(ff.logits, s.label, &g_logits);
  if (!std::isfinite(loss)) throw NumericalError("non-finite loss");
  correct = argmax(ff.logits) == s.label;

  const auto& W = params["head.weight"].data;
  const std::size_t d = ff.descriptor.size();
  auto& gW = grad["head.weight"].data;
  auto& gc = grad["head.bias"].data;
  std::vector<double> g_desc(d, 0.0);
  for (int k = 0; k < net.num_classes; ++k) {
    gc[k] += g_logits[k];
    for (std::size_t i = 0; i < d; ++i) {
      gW[k * d + i] += g_logits[k] * ff.descriptor[i];
      g_desc[i] += g_logits[k] * W[k * d + i];
    }
  }

  // Gradient arriving at the final map of each branch.
  std::vector<SphericalSignal> g_final;
  std::size_t offset = 0;
  for (int br = 0; br < net.branches; ++br) {
    const auto& out = ff.branches[br].layers.back().output;
    SphericalSignal g(out.bandwidth().value(), out.channels());
    const int side = out.side();
    if (net.head == DescriptorKind::WGAP) {
      const auto& area = out.grid().area_weights;
      double norm = 0.0;
      for (int j = 0; j < side; ++j) norm += area[j] * side;
      for (int c = 0; c < out.channels(); ++c) {
        for (int j = 0; j < side; ++j) {
          for (int k = 0; k < side; ++k) g.at(c, j, k) = g_desc[offset + c] * area[j] / norm;
        }
      }
      offset += out.channels();
    } else {
      const int b = out.bandwidth().value();
      const auto& table = *table_for(b);
      const std::size_t hs = half::size(b);
      const auto& spec = ff.head_spectra[br];
      std::vector<Complex> gs(hs);
      const std::vector<double> ones(b, 1.0);
      const auto& qw = table.grid().quad_weights;
      for (int c = 0; c < out.channels(); ++c) {
        std::fill(gs.begin(), gs.end(), Complex{});
        for (int l = 0; l < b; ++l) {
          const double mag = ff.descriptor[offset + c * b + l];
          if (mag == 0.0) continue;
          const double gd = g_desc[offset + c * b + l] / mag;
          gs[tri_index(l, 0)] = gd * spec[c * hs + tri_index(l, 0)];
          for (int m = 1; m <= l; ++m) gs[tri_index(l, m)] = 2.0 * gd * spec[c * hs + tri_index(l, m)];
        }
        auto dst = g.channel(c);
        half::synthesize(gs, ones, table, dst);
        for (int j = 0; j < side; ++j) {
          for (int k = 0; k < side; ++k) dst[static_cast<std::size_t>(j) * side + k] *= qw[j];
        }
      }
      offset += static_cast<std::size_t>(out.channels()) * b;
    }
    g_final.push_back(std::move(g));
  }

  // Walk back through the layers, branch 0 first at each depth so that
  // concatenation gradients reach branch 1 before it is processed.
  std::vector<SphericalSignal> g_cur = std::move(g_final);
  const int depth = static_cast<int>(net.layers.size());
  for (int i = depth - 1; i >= 0; --i) {
    for (int br = 0; br < net.branches; ++br) {
      const auto prefix = layer_prefix(br, i);
      auto g_in = layer_backward(net.branch(br)[i], pass.weights[br][i], ff.branches[br].layers[i], g_cur[br],
                                 grad[prefix + ".filter"].data, grad[prefix + ".bias"].data);
      if (br == 0 && net.branches == 2 && is_concat(net, i)) {
        const int own = net.layers[i - 1].out_channels;
        const int other = net.branch_layers[i - 1].out_channels;
        auto extra = slice_channels(g_in, own, other);
        g_cur[0] = slice_channels(g_in, 0, own);
        // Branch 1 at this depth has not been processed yet; stash the extra
        // gradient and add it once branch 1's own input gradient is known.
        g_cur.push_back(std::move(extra));
      } else {
        g_cur[br] = std::move(g_in);
      }
    }
    if (g_cur.size() == 3) {
      for (std::size_t k = 0; k < g_cur[1].values().size(); ++k) g_cur[1].values()[k] += g_cur[2].values()[k];
      g_cur.pop_back();
    }
  }
  return loss;
}

}  // namespace

const SphericalSignal& ForwardResult::tap(const std::string& name) const {
  for (const auto& t : taps) {
    if (t.name == name) return t.signal;
  }
  throw DomainError("unknown tap " + name);
}

ForwardResult forward(const NetworkConfig& net, const ParameterStore& params, const SphericalSignal& signal) {
  const auto pass = prepare(net, params);
  auto ff = run_forward(net, pass, params, signal);
  ForwardResult r;
  r.logits = std::move(ff.logits);
  r.descriptor = std::move(ff.descriptor);
  r.taps.push_back({"input", signal});
  for (int br = 0; br < net.branches; ++br) {
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      r.taps.push_back({(br ? "b1.conv" : "conv") + std::to_string(i + 1), ff.branches[br].layers[i].output});
    }
  }
  return r;
}

LossAndGrad backward(const NetworkConfig& net, const ParameterStore& params, std::span<const Sample> batch) {
  const auto pass = prepare(net, params);
  const auto zero = params.zeros_like();
  std::vector<ParameterStore> grads(batch.size(), zero);
  std::vector<double> losses(batch.size());
  std::vector<char> correct(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    bool ok = false;
    losses[i] = sample_backward(net, pass, params, batch[i], grads[i], ok);
    correct[i] = ok;
  });
  LossAndGrad out{0.0, 0, zero};
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += losses[i];
    out.correct += correct[i];
    out.grad.axpy(1.0, grads[i]);
  }
  return out;
}

double batch_loss(const NetworkConfig& net, const ParameterStore& params, std::span<const Sample> batch) {
  const auto pass = prepare(net, params);
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), [&](std::size_t i) {
    check_label(net, batch[i].label);
    losses[i] = cross_entropy(run_forward(net, pass, params, batch[i].signal).logits, batch[i].label, nullptr);
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0);
}

Evaluation evaluate(const NetworkConfig& net, const ParameterStore& params, std::span<const Sample> data) {
  const auto pass = prepare(net, params);
  std::vector<double> losses(data.size());
  std::vector<char> correct(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    check_label(net, data[i].label);
    const auto logits = run_forward(net, pass, params, data[i].signal).logits;
    losses[i] = cross_entropy(logits, data[i].label, nullptr);
    correct[i] = argmax(logits) == data[i].label;
  });
  Evaluation e;
  if (data.empty()) return e;
  e.mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / data.size();
  e.accuracy = static_cast<double>(std::count(correct.begin(), correct.end(), 1)) / data.size();
  return e;
}

// ---------------------------------------------------------------------------
// Training

double Schedule::lr_at(int epoch) const {
  double lr = learning_rate;
  for (int m : milestones) {
    if (epoch > m) lr /= decay_factor;
  }
  return lr;
}

namespace {

RotationZYZ draw_rotation(RotationMode mode, std::mt19937_64& rng) {
  switch (mode) {
    case RotationMode::None:
      return {};
    case RotationMode::Z:
      return RotationZYZ::about_z(2.0 * std::numbers::pi * (static_cast<double>(rng() >> 11) * 0x1.0p-53));
    case RotationMode::SO3:
      return random_rotation(rng);
  }
  return {};
}

}  // namespace

RotationZYZ draw_rotation(RotationMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return draw_rotation(mode, rng);
}

SphericalSignal augment(const SphericalSignal& signal, const AugmentOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (options.rotate == RotationMode::None) return signal;
  return rotate_signal(signal, draw_rotation(options.rotate, rng));
}

AugmentedMesh augment(const TriangleMesh& mesh, const AugmentOptions& options, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AugmentedMesh out{options.rotate == RotationMode::None ? mesh
                                                          : rotate_mesh(mesh, draw_rotation(options.rotate, rng)),
                    Vec3::Zero()};
  if (options.center_jitter > 0.0) {
    const double r = bounding_sphere(out.mesh).radius;
    out.center_offset = jitter_offset(rng(), options.center_jitter * r);
  }
  return out;
}

TrainResult train(const NetworkConfig& net, ParameterStore params, std::span<const Sample> data,
                  const TrainOptions& options) {
  net.validate();
  check_parameters(net, params);
  if (data.empty()) throw DomainError("empty training set");
  const auto& sch = options.schedule;
  if (sch.batch_size < 1 || sch.epochs < 0) throw DomainError("bad schedule");

  std::mt19937_64 rng(options.seed);
  auto m = params.zeros_like();
  auto v = params.zeros_like();
  long step = 0;
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= sch.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = sch.lr_at(epoch);
    double total = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < order.size(); start += sch.batch_size) {
      const std::size_t end = std::min(order.size(), start + sch.batch_size);
      std::vector<Sample> batch;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = data[order[i]];
        batch.push_back({options.augment.rotate == RotationMode::None ? s.signal
                                                                      : augment(s.signal, options.augment, rng()),
                         s.label});
      }
      auto lg = backward(net, params, batch);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " (loss " << lg.loss << ", lr " << lr << ")";
        throw NumericalError(msg.str());
      }
      total += lg.loss;
      correct += lg.correct;
      ++step;
      const double c1 = 1.0 - std::pow(sch.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(sch.beta2, static_cast<double>(step));
      for (const auto& name : params.names()) {
        auto& p = params[name].data;
        auto& mm = m[name].data;
        auto& vv = v[name].data;
        const auto& g = lg.grad[name].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
          mm[k] = sch.beta1 * mm[k] + (1.0 - sch.beta1) * g[k];
          vv[k] = sch.beta2 * vv[k] + (1.0 - sch.beta2) * g[k] * g[k];
          p[k] -= lr * (mm[k] / c1) / (std::sqrt(vv[k] / c2) + sch.epsilon);
        }
      }
    }
    EpochLog log{epoch, lr, total / data.size(), static_cast<double>(correct) / data.size()};
    result.history.push_back(log);
    if (options.on_epoch) options.on_epoch(log);
  }
  result.params = std::move(params);
  return result;
}

}  // namespace sphcnn
