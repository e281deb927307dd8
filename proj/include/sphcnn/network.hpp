#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sphcnn/io.hpp"
#include "sphcnn/mesh.hpp"
#include "sphcnn/spectral_ops.hpp"

namespace sphcnn {

enum class PoolKind { None, SP, WAP, Max };

/// One block: zonal convolution, optional pooling, nonlinearity.
struct LayerConfig {
  int in_channels = 1;
  int out_channels = 1;
  FilterMode filter_mode = FilterMode::Anchored;
  /// Anchors per filter; capped at the layer bandwidth.
  int anchors = 4;
  PoolKind pool = PoolKind::None;
  Nonlinearity nonlinearity = Nonlinearity::ReLU;
};

/// Branch 0 takes input channel 0 (or all channels when single-branch);
/// branch 1 takes input channel 1. At every index in concat_at, branch 1's
/// previous output is appended to branch 0's layer input. The head sees
/// the final maps of all branches, branch 0 first.
struct NetworkConfig {
  int input_bandwidth = 16;
  std::vector<LayerConfig> layers;
  std::vector<LayerConfig> branch_layers;
  std::vector<int> concat_at;
  DescriptorKind head = DescriptorKind::WGAP;
  int num_classes = 2;
  int branches = 1;

  /// Throws DomainError when channels, bandwidths or branches do not chain.
  void validate() const;
  int input_channels() const;
  const std::vector<LayerConfig>& branch(int i) const { return i == 0 ? layers : branch_layers; }
  /// Bandwidth each layer of a branch operates on (before its pooling).
  std::vector<int> layer_bandwidths(int branch) const;
  int output_bandwidth(int branch) const;
  int descriptor_size() const;
  /// Filter parameters per (out, in) pair at a layer.
  int filter_size(int branch, int layer) const;

  /// Small single-branch network used by the tests and the toy task.
  static NetworkConfig toy(int input_bandwidth = 16, int num_classes = 3,
                           PoolKind pool = PoolKind::WAP, int anchors = 4);
  /// Two-branch 16,16,32,32,64,64,128,128 architecture. Pooling and
  /// concatenation happen in the blocks where the channel count grows.
  static NetworkConfig two_branch(int input_bandwidth = 32, int anchors = 8, int num_classes = 40,
                                  PoolKind pool = PoolKind::WAP);
};

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
};

/// Named tensors in insertion order.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, std::vector<int> shape);
  Tensor& operator[](const std::string& name);
  const Tensor& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t total_size() const;

  /// Same names and shapes, zero data.
  ParameterStore zeros_like() const;
  /// this += scale * other (same layout).
  void axpy(double scale, const ParameterStore& other);

  std::vector<NamedTensor> to_named() const;
  static ParameterStore from_named(const std::vector<NamedTensor>& tensors);

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<Tensor> tensors_;
};

/// Parameter names: "b{branch}.conv{layer}.filter" [out, in, n],
/// "b{branch}.conv{layer}.bias" [out], "head.weight" [classes, D], "head.bias".
ParameterStore init_parameters(const NetworkConfig& net, std::uint64_t seed);

/// Anchor degrees of a layer's filters (0..b-1 for Full filters).
std::vector<int> anchor_degrees(const NetworkConfig& net, int branch, int layer);

/// Filter parameters are stored as gains theta_a = conv_scale(l_a) h(l_a), so
/// theta = 1 at every degree is the identity filter. This returns the
/// equivalent filter specs in h units, indexed [out * in + i].
std::vector<ZonalFilterSpec> layer_filters(const NetworkConfig& net, const ParameterStore& params,
                                           int branch, int layer);

/// Checks names and shapes against the config.
void check_parameters(const NetworkConfig& net, const ParameterStore& params);

struct Tap {
  std::string name;
  SphericalSignal signal;
};

struct ForwardResult {
  std::vector<double> logits;
  std::vector<double> descriptor;
  /// "input", then "conv1".."convN" for branch 0, "b1.conv1".. for branch 1.
  std::vector<Tap> taps;

  const SphericalSignal& tap(const std::string& name) const;
};

ForwardResult forward(const NetworkConfig& net, const ParameterStore& params,
                      const SphericalSignal& signal);

struct Sample {
  SphericalSignal signal;
  int label = 0;
};

struct LossAndGrad {
  double loss = 0.0;  // summed over the batch
  int correct = 0;
  ParameterStore grad;
};

/// Softmax cross-entropy summed over the batch, with its exact gradient.
/// Samples run in parallel; per-sample gradients are summed in batch order.
LossAndGrad backward(const NetworkConfig& net, const ParameterStore& params,
                     std::span<const Sample> batch);

/// Loss alone (batch sum), for finite-difference checks.
double batch_loss(const NetworkConfig& net, const ParameterStore& params,
                  std::span<const Sample> batch);

struct Schedule {
  int epochs = 48;
  double learning_rate = 1e-3;
  std::vector<int> milestones = {32, 40};
  double decay_factor = 5.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 8;

  /// Learning rate for a 1-based epoch: divided by decay_factor once the
  /// epoch passes each milestone.
  double lr_at(int epoch) const;
};

enum class RotationMode { None, Z, SO3 };

struct AugmentOptions {
  RotationMode rotate = RotationMode::None;
  /// Projection-centre jitter as a fraction of the bounding radius (meshes only).
  double center_jitter = 0.0;
};

/// Rotation drawn for a mode: identity, uniform about z, or Haar on SO(3).
RotationZYZ draw_rotation(RotationMode mode, std::uint64_t seed);

SphericalSignal augment(const SphericalSignal& signal, const AugmentOptions& options,
                        std::uint64_t seed);

struct AugmentedMesh {
  TriangleMesh mesh;
  Vec3 center_offset = Vec3::Zero();
};
AugmentedMesh augment(const TriangleMesh& mesh, const AugmentOptions& options, std::uint64_t seed);

struct EpochLog {
  int epoch = 0;
  double learning_rate = 0.0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainOptions {
  Schedule schedule;
  AugmentOptions augment;
  std::uint64_t seed = 0;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  ParameterStore params;
  std::vector<EpochLog> history;
};

/// Adam on shuffled mini-batches. Throws NumericalError on a non-finite loss.
TrainResult train(const NetworkConfig& net, ParameterStore params, std::span<const Sample> data,
                  const TrainOptions& options);

struct Evaluation {
  double mean_loss = 0.0;
  double accuracy = 0.0;
};
Evaluation evaluate(const NetworkConfig& net, const ParameterStore& params,
                    std::span<const Sample> data);

}  // namespace sphcnn
