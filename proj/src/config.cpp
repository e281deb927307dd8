#include "sphcnn/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sphcnn/errors.hpp"

namespace sphcnn {

using nlohmann::json;

namespace {

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
}

template <typename T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("bad value for \"") + key + "\"");
  }
}

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("missing \"") + key + "\"");
  return get<T>(j, key, T{});
}

PoolKind pool_from(const std::string& s) {
  if (s == "none") return PoolKind::None;
  if (s == "sp") return PoolKind::SP;
  if (s == "wap") return PoolKind::WAP;
  if (s == "max") return PoolKind::Max;
  throw DataError("unknown pool \"" + s + "\"");
}

const char* pool_name(PoolKind p) {
  static const char* names[] = {"none", "sp", "wap", "max"};
  return names[static_cast<int>(p)];
}

LayerConfig layer_from(const json& j) {
  if (!j.is_object()) throw DataError("layer entries must be objects");
  LayerConfig l;
  l.in_channels = require<int>(j, "in");
  l.out_channels = require<int>(j, "out");
  const auto filter = get<std::string>(j, "filter", "anchored");
  if (filter == "full") {
    l.filter_mode = FilterMode::Full;
  } else if (filter == "anchored") {
    l.filter_mode = FilterMode::Anchored;
  } else {
    throw DataError("unknown filter mode \"" + filter + "\"");
  }
  l.anchors = get<int>(j, "anchors", l.anchors);
  l.pool = pool_from(get<std::string>(j, "pool", "none"));
  const auto nl = get<std::string>(j, "nonlinearity", "relu");
  if (nl == "relu") {
    l.nonlinearity = Nonlinearity::ReLU;
  } else if (nl == "none") {
    l.nonlinearity = Nonlinearity::None;
  } else {
    throw DataError("unknown nonlinearity \"" + nl + "\"");
  }
  return l;
}

json layer_to(const LayerConfig& l) {
  return {{"in", l.in_channels},
          {"out", l.out_channels},
          {"filter", l.filter_mode == FilterMode::Full ? "full" : "anchored"},
          {"anchors", l.anchors},
          {"pool", pool_name(l.pool)},
          {"nonlinearity", l.nonlinearity == Nonlinearity::ReLU ? "relu" : "none"}};
}

NetworkConfig network_from(const json& j) {
  if (!j.is_object()) throw DataError("network config must be an object");
  NetworkConfig net;
  const auto preset = get<std::string>(j, "preset", "");
  const PoolKind pool = pool_from(get<std::string>(j, "pool", "wap"));
  if (preset == "toy") {
    net = NetworkConfig::toy(get<int>(j, "input_bandwidth", 16), get<int>(j, "num_classes", 3), pool,
                             get<int>(j, "anchors", 4));
  } else if (preset == "two_branch") {
    net = NetworkConfig::two_branch(get<int>(j, "input_bandwidth", 32), get<int>(j, "anchors", 8),
                                    get<int>(j, "num_classes", 40), pool);
  } else if (!preset.empty()) {
    throw DataError("unknown preset \"" + preset + "\"");
  } else {
    net.input_bandwidth = require<int>(j, "input_bandwidth");
    net.num_classes = require<int>(j, "num_classes");
    if (!j.contains("layers") || !j["layers"].is_array()) throw DataError("missing \"layers\" array");
    for (const auto& l : j["layers"]) net.layers.push_back(layer_from(l));
    if (j.contains("branch_layers")) {
      for (const auto& l : j["branch_layers"]) net.branch_layers.push_back(layer_from(l));
    }
    net.concat_at = get<std::vector<int>>(j, "concat_at", {});
    net.branches = get<int>(j, "branches", net.branch_layers.empty() ? 1 : 2);
  }
  const auto head = get<std::string>(j, "head", net.head == DescriptorKind::MAGL ? "magl" : "wgap");
  if (head == "wgap") {
    net.head = DescriptorKind::WGAP;
  } else if (head == "magl") {
    net.head = DescriptorKind::MAGL;
  } else {
    throw DataError("unknown head \"" + head + "\"");
  }
  try {
    net.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("network config: ") + e.what());
  }
  return net;
}

json network_to(const NetworkConfig& net) {
  json j;
  j["input_bandwidth"] = net.input_bandwidth;
  j["num_classes"] = net.num_classes;
  j["head"] = net.head == DescriptorKind::MAGL ? "magl" : "wgap";
  j["branches"] = net.branches;
  j["layers"] = json::array();
  for (const auto& l : net.layers) j["layers"].push_back(layer_to(l));
  if (!net.branch_layers.empty()) {
    j["branch_layers"] = json::array();
    for (const auto& l : net.branch_layers) j["branch_layers"].push_back(layer_to(l));
  }
  if (!net.concat_at.empty()) j["concat_at"] = net.concat_at;
  return j;
}

ZonalFilterSpec filter_spec_from(const json& j) {
  if (!j.is_object()) throw DataError("filter must be an object");
  const auto mode = get<std::string>(j, "mode", "full");
  ZonalFilterSpec spec;
  try {
    if (mode == "full") {
      spec = ZonalFilterSpec::full(require<std::vector<double>>(j, "values"));
    } else if (mode == "anchored") {
      spec = ZonalFilterSpec::anchored(require<int>(j, "bandwidth"), require<std::vector<int>>(j, "degrees"),
                                       require<std::vector<double>>(j, "values"));
    } else if (mode == "uniform") {
      const auto values = require<std::vector<double>>(j, "values");
      const int b = require<int>(j, "bandwidth");
      if (values.size() < 2 || static_cast<int>(values.size()) > b) throw DataError("uniform filter: bad anchor count");
      spec = ZonalFilterSpec::uniform(b, values);
    } else {
      throw DataError("unknown filter mode \"" + mode + "\"");
    }
    spec.validate();
  } catch (const DomainError& e) {
    throw DataError(std::string("filter: ") + e.what());
  }
  if (get<bool>(j, "gain", false)) {
    // Values given as gains conv_scale(l) h(l); convert to h.
    if (spec.mode == FilterMode::Full) {
      for (std::size_t l = 0; l < spec.full_coeffs.size(); ++l) spec.full_coeffs[l] /= conv_scale(static_cast<int>(l));
    } else {
      for (std::size_t a = 0; a < spec.anchor_values.size(); ++a) {
        spec.anchor_values[a] /= conv_scale(spec.anchor_degrees[a]);
      }
    }
  }
  return spec;
}

}  // namespace

NetworkConfig network_from_json(const std::string& text) { return network_from(parse(text)); }

std::string network_to_json(const NetworkConfig& net) { return network_to(net).dump(2); }

FilterConfig filter_from_json(const std::string& text) {
  const json j = parse(text);
  FilterConfig out;
  if (j.contains("bank")) {
    out.out_channels = require<int>(j, "out_channels");
    if (out.out_channels < 1) throw DataError("out_channels must be positive");
    if (!j["bank"].is_array()) throw DataError("\"bank\" must be an array");
    for (const auto& f : j["bank"]) out.filters.push_back(filter_spec_from(f));
    if (out.filters.empty() || out.filters.size() % out.out_channels != 0) {
      throw DataError("bank size must be a multiple of out_channels");
    }
  } else {
    out.filters.push_back(filter_spec_from(j));
  }
  return out;
}

TrainConfig train_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.is_object() || !j.contains("network")) throw DataError("train config needs a \"network\" object");
  TrainConfig cfg;
  cfg.network = network_from(j["network"]);
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    auto& d = cfg.schedule;
    d.epochs = get<int>(s, "epochs", d.epochs);
    d.learning_rate = get<double>(s, "learning_rate", d.learning_rate);
    d.milestones = get<std::vector<int>>(s, "milestones", d.milestones);
    d.decay_factor = get<double>(s, "decay_factor", d.decay_factor);
    d.beta1 = get<double>(s, "beta1", d.beta1);
    d.beta2 = get<double>(s, "beta2", d.beta2);
    d.epsilon = get<double>(s, "epsilon", d.epsilon);
    d.batch_size = get<int>(s, "batch_size", d.batch_size);
    if (d.epochs < 1 || d.batch_size < 1 || !(d.learning_rate > 0.0) || !(d.decay_factor > 0.0)) {
      throw DataError("schedule: epochs, batch_size, learning_rate and decay_factor must be positive");
    }
  }
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    const auto rot = get<std::string>(a, "rotate", "none");
    if (rot == "none") {
      cfg.augment.rotate = RotationMode::None;
    } else if (rot == "z") {
      cfg.augment.rotate = RotationMode::Z;
    } else if (rot == "so3") {
      cfg.augment.rotate = RotationMode::SO3;
    } else {
      throw DataError("unknown rotation mode \"" + rot + "\"");
    }
    cfg.augment.center_jitter = get<double>(a, "center_jitter", 0.0);
    if (cfg.augment.center_jitter < 0.0) throw DataError("center_jitter must be non-negative");
  }
  return cfg;
}

std::string train_to_json(const TrainConfig& config) {
  json j;
  j["network"] = network_to(config.network);
  const auto& s = config.schedule;
  j["schedule"] = {{"epochs", s.epochs},         {"learning_rate", s.learning_rate},
                   {"milestones", s.milestones}, {"decay_factor", s.decay_factor},
                   {"beta1", s.beta1},           {"beta2", s.beta2},
                   {"epsilon", s.epsilon},       {"batch_size", s.batch_size}};
  static const char* modes[] = {"none", "z", "so3"};
  j["augment"] = {{"rotate", modes[static_cast<int>(config.augment.rotate)]},
                  {"center_jitter", config.augment.center_jitter}};
  return j.dump(2);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace sphcnn
