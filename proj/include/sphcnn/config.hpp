#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sphcnn/network.hpp"

namespace sphcnn {

// JSON readers throw DataError with the offending key on malformed input.
// Schemas are described in docs/config-schema.md.

NetworkConfig network_from_json(const std::string& text);
std::string network_to_json(const NetworkConfig& net);

/// A filter applied to every channel, or a bank mixing in -> out channels
/// indexed [out * in + i].
struct FilterConfig {
  std::vector<ZonalFilterSpec> filters;
  int out_channels = 0;  // 0: one filter applied channel-wise
};
FilterConfig filter_from_json(const std::string& text);

struct TrainConfig {
  NetworkConfig network;
  Schedule schedule;
  AugmentOptions augment;
};
TrainConfig train_from_json(const std::string& text);
std::string train_to_json(const TrainConfig& config);

std::string read_text(const std::filesystem::path& path);

}  // namespace sphcnn
