#include "doctest.h"

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "sphcnn/errors.hpp"
#include "sphcnn/network.hpp"
#include "sphcnn/synth.hpp"
#include "support.hpp"

using namespace sphcnn;

namespace {

NetworkConfig two_layer(PoolKind pool, FilterMode mode, DescriptorKind head) {
  NetworkConfig n;
  n.input_bandwidth = 8;
  n.num_classes = 3;
  n.head = head;
  n.layers = {{1, 3, mode, 3, pool, Nonlinearity::ReLU}, {3, 2, mode, 3, PoolKind::None, Nonlinearity::ReLU}};
  n.validate();
  return n;
}

std::vector<Sample> batch_of(int b, int channels, int count, std::uint64_t seed) {
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    auto s = random_bandlimited_signal(b, channels, seed + i, 1.0);
    for (double& v : s.values()) v += 0.5;
    out.push_back({s, i % 3});
  }
  return out;
}

void expect_gradients_match(const NetworkConfig& net, std::uint64_t seed) {
  auto params = init_parameters(net, seed);
  auto batch = batch_of(net.input_bandwidth, net.input_channels(), 2, seed);
  testing::make_smooth_point(net, params, batch);
  const auto checks = testing::check_gradients(net, params, batch, 1e-3);
  for (const auto& c : checks) {
    INFO(c.tensor);
    CHECK(c.rel_error < 1e-4);
  }
}

}  // namespace

TEST_CASE("config validation") {
  auto n = NetworkConfig::toy();
  CHECK(n.layer_bandwidths(0) == std::vector<int>{16, 16, 8});
  CHECK(n.output_bandwidth(0) == 8);
  CHECK(n.descriptor_size() == 16);
  n.layers[1].in_channels = 5;
  CHECK_THROWS_AS(n.validate(), DomainError);

  NetworkConfig tiny;
  tiny.input_bandwidth = 4;
  tiny.layers = {{1, 2, FilterMode::Full, 2, PoolKind::WAP, Nonlinearity::ReLU},
                 {2, 2, FilterMode::Full, 2, PoolKind::WAP, Nonlinearity::ReLU}};
  CHECK_THROWS_AS(tiny.validate(), DomainError);  // would pool b=2 down to 1

  const auto two = NetworkConfig::two_branch();
  CHECK(two.layers[2].in_channels == 32);
  CHECK(two.layers[6].in_channels == 128);
  CHECK(two.branch_layers[2].in_channels == 16);
  CHECK(two.layer_bandwidths(0) == std::vector<int>{32, 32, 32, 16, 16, 8, 8, 4});
  CHECK(two.descriptor_size() == 256);
}

TEST_CASE("parameter count of the two-branch architecture") {
  const auto net = NetworkConfig::two_branch();
  const auto p = init_parameters(net, 1);
  const double count = static_cast<double>(p.total_size());
  CHECK(count > 0.45e6);
  CHECK(count < 0.55e6);
  CHECK(p["b0.conv3.filter"].shape == std::vector<int>{32, 32, 8});
  CHECK(p["b0.conv8.filter"].shape == std::vector<int>{128, 128, 4});  // capped at b = 4
}

TEST_CASE("zero parameters give equal logits") {
  const auto net = NetworkConfig::toy(8);
  auto p = init_parameters(net, 3);
  for (const auto& name : p.names()) std::fill(p[name].data.begin(), p[name].data.end(), 0.0);
  const auto r = forward(net, p, random_bandlimited_signal(8, 1, 4));
  for (double v : r.logits) CHECK(v == 0.0);
}

TEST_CASE("identity filter reproduces the input") {
  NetworkConfig net;
  net.input_bandwidth = 8;
  net.num_classes = 2;
  net.layers = {{1, 1, FilterMode::Full, 2, PoolKind::None, Nonlinearity::None}};
  auto p = init_parameters(net, 0);
  for (int l = 0; l < 8; ++l) p["b0.conv1.filter"].data[l] = 1.0;
  p["b0.conv1.bias"].data[0] = 0.0;
  // Unit gains are the filter h_l = 1 / conv_scale(l).
  const auto spec = layer_filters(net, p, 0, 0).at(0);
  for (int l = 0; l < 8; ++l) CHECK(spec.full_coeffs[l] == doctest::Approx(1.0 / conv_scale(l)));
  const auto x = random_bandlimited_signal(8, 1, 5);
  const auto r = forward(net, p, x);
  CHECK(testing::max_abs_diff(r.tap("conv1"), x) < 1e-6);
  CHECK(testing::max_abs_diff(r.tap("input"), x) == 0.0);
  CHECK_THROWS_AS(r.tap("conv9"), DomainError);
}

TEST_CASE("forward checks its input") {
  const auto net = NetworkConfig::toy(8);
  const auto p = init_parameters(net, 0);
  CHECK_THROWS_AS(forward(net, p, random_bandlimited_signal(16, 1, 1)), DomainError);
  CHECK_THROWS_AS(forward(net, p, random_bandlimited_signal(8, 2, 1)), DomainError);
  const auto a = forward(net, p, random_bandlimited_signal(8, 1, 2));
  const auto b = forward(net, p, random_bandlimited_signal(8, 1, 2));
  CHECK(a.logits == b.logits);
}

TEST_CASE("linear spectral-pooling network is exactly equivariant") {
  NetworkConfig net;
  net.input_bandwidth = 16;
  net.num_classes = 2;
  net.layers = {{1, 4, FilterMode::Anchored, 4, PoolKind::SP, Nonlinearity::None},
                {4, 4, FilterMode::Anchored, 4, PoolKind::SP, Nonlinearity::None}};
  const auto p = init_parameters(net, 9);
  const auto x = random_bandlimited_signal(16, 1, 10);
  const auto base = forward(net, p, x);
  for (const auto& r : sample_rotations(RandomUniform{11, 3})) {
    const auto rotated = forward(net, p, rotate_signal(x, r));
    for (const char* tap : {"conv1", "conv2"}) {
      SphericalSignal diff = rotated.tap(tap);
      const auto expect = rotate_signal(base.tap(tap), r);
      for (std::size_t i = 0; i < diff.values().size(); ++i) diff.values()[i] -= expect.values()[i];
      CHECK(testing::weighted_l2(diff) / testing::weighted_l2(expect) < 1e-6);
    }
  }
}

TEST_CASE("gradients match central differences") {
  SUBCASE("anchored, WAP, WGAP") { expect_gradients_match(two_layer(PoolKind::WAP, FilterMode::Anchored, DescriptorKind::WGAP), 1); }
  SUBCASE("full, SP, MAG-L") { expect_gradients_match(two_layer(PoolKind::SP, FilterMode::Full, DescriptorKind::MAGL), 2); }
  SUBCASE("anchored, no pool, MAG-L") { expect_gradients_match(two_layer(PoolKind::None, FilterMode::Anchored, DescriptorKind::MAGL), 3); }
  SUBCASE("two branches with concatenation") {
    NetworkConfig n;
    n.input_bandwidth = 8;
    n.num_classes = 3;
    n.branches = 2;
    n.concat_at = {1};
    n.layers = {{1, 3, FilterMode::Anchored, 3, PoolKind::WAP, Nonlinearity::ReLU},
                {6, 2, FilterMode::Anchored, 3, PoolKind::None, Nonlinearity::ReLU}};
    n.branch_layers = {{1, 3, FilterMode::Anchored, 3, PoolKind::WAP, Nonlinearity::ReLU},
                       {3, 2, FilterMode::Full, 3, PoolKind::None, Nonlinearity::ReLU}};
    n.validate();
    expect_gradients_match(n, 4);
  }
}

TEST_CASE("dead ReLU channels receive no gradient") {
  const auto net = two_layer(PoolKind::WAP, FilterMode::Anchored, DescriptorKind::WGAP);
  auto params = init_parameters(net, 1);
  auto batch = batch_of(8, 1, 2, 1);
  testing::make_smooth_point(net, params, batch);
  const auto g = backward(net, params, batch).grad;
  // Channel 1 of the first layer is biased off.
  for (int a = 0; a < 3; ++a) CHECK(g["b0.conv1.filter"].data[3 + a] == 0.0);
  CHECK(g["b0.conv1.bias"].data[1] == 0.0);
  CHECK(g["b0.conv1.bias"].data[0] != 0.0);
}

TEST_CASE("max pooling routes gradients to the block maximum") {
  // Argmax switches are kinks; a small step keeps the difference quotient
  // on one side of them.
  const auto net = two_layer(PoolKind::Max, FilterMode::Anchored, DescriptorKind::WGAP);
  const auto params = init_parameters(net, 3);
  const auto checks = testing::check_gradients(net, params, batch_of(8, 1, 2, 3), 1e-6);
  for (const auto& c : checks) {
    INFO(c.tensor);
    CHECK(c.rel_error < 1e-4);
  }
}

TEST_CASE("zero head weights block upstream gradients") {
  const auto net = two_layer(PoolKind::WAP, FilterMode::Anchored, DescriptorKind::WGAP);
  auto p = init_parameters(net, 5);
  std::fill(p["head.weight"].data.begin(), p["head.weight"].data.end(), 0.0);
  const auto g = backward(net, p, batch_of(8, 1, 2, 6)).grad;
  for (const auto& name : g.names()) {
    if (name.rfind("head", 0) == 0) continue;
    for (double v : g[name].data) CHECK(v == 0.0);
  }
}

TEST_CASE("duplicated sample doubles its gradient") {
  const auto net = two_layer(PoolKind::WAP, FilterMode::Anchored, DescriptorKind::WGAP);
  const auto p = init_parameters(net, 7);
  auto one = batch_of(8, 1, 1, 8);
  auto two = one;
  two.push_back(one[0]);
  const auto g1 = backward(net, p, one);
  const auto g2 = backward(net, p, two);
  CHECK(g2.loss == doctest::Approx(2.0 * g1.loss).epsilon(1e-15));
  for (const auto& name : p.names()) {
    for (std::size_t k = 0; k < g1.grad[name].data.size(); ++k) {
      CHECK(g2.grad[name].data[k] == 2.0 * g1.grad[name].data[k]);
    }
  }
}

TEST_CASE("learning-rate schedule") {
  Schedule s;
  CHECK(s.lr_at(1) == doctest::Approx(1e-3));
  CHECK(s.lr_at(32) == doctest::Approx(1e-3));
  CHECK(s.lr_at(33) == doctest::Approx(2e-4));
  CHECK(s.lr_at(40) == doctest::Approx(2e-4));
  CHECK(s.lr_at(41) == doctest::Approx(4e-5));
  CHECK(s.epochs == 48);
}

TEST_CASE("seeded training is reproducible and learns") {
  const auto net = NetworkConfig::toy(8);
  std::vector<Sample> data;
  for (int i = 0; i < 12; ++i) data.push_back({canonical_pattern(i % 3).sample(8), i % 3});
  TrainOptions opts;
  opts.schedule.epochs = 6;
  opts.schedule.learning_rate = 1e-2;
  opts.schedule.batch_size = 4;
  opts.augment.rotate = RotationMode::Z;
  opts.seed = 42;
  std::vector<double> curve;
  opts.on_epoch = [&](const EpochLog& e) { curve.push_back(e.mean_loss); };
  const auto a = train(net, init_parameters(net, 1), data, opts);
  const auto first = curve;
  curve.clear();
  const auto b = train(net, init_parameters(net, 1), data, opts);
  CHECK(first == curve);
  CHECK(a.history.back().mean_loss < a.history.front().mean_loss);
  for (const auto& name : a.params.names()) CHECK(a.params[name].data == b.params[name].data);
}

TEST_CASE("divergence is reported") {
  const auto net = NetworkConfig::toy(8);
  auto p = init_parameters(net, 1);
  p["head.bias"].data[0] = std::numeric_limits<double>::quiet_NaN();
  std::vector<Sample> data{{canonical_pattern(0).sample(8), 0}};
  TrainOptions opts;
  opts.schedule.epochs = 1;
  CHECK_THROWS_AS(train(net, p, data, opts), NumericalError);
}

TEST_CASE("augmentation") {
  const auto x = random_bandlimited_signal(8, 1, 3);
  CHECK(augment(x, {}, 1).values() == x.values());
  AugmentOptions rot{RotationMode::SO3, 0.0};
  CHECK(augment(x, rot, 5).values() == augment(x, rot, 5).values());
  CHECK(testing::max_abs_diff(augment(x, rot, 5), x) > 1e-3);

  const auto ico = make_icosphere(2);
  const auto same = augment(ico, {}, 1);
  CHECK(same.center_offset == Vec3::Zero());
  CHECK(same.mesh.vertices == ico.vertices);
  const auto jit = augment(ico, {RotationMode::None, 0.2}, 1);
  CHECK(jit.center_offset.norm() > 0.0);
  CHECK(jit.center_offset.norm() <= 0.2 + 1e-12);
}

TEST_CASE("checkpoint round trip through CKPT1") {
  const auto net = NetworkConfig::toy(8);
  const auto p = init_parameters(net, 2);
  std::stringstream buf;
  write_checkpoint(buf, p.to_named());
  const auto back = ParameterStore::from_named(read_checkpoint(buf));
  check_parameters(net, back);
  for (const auto& name : p.names()) {
    for (std::size_t k = 0; k < p[name].data.size(); ++k) {
      CHECK(back[name].data[k] == static_cast<double>(static_cast<float>(p[name].data[k])));
    }
  }
  ParameterStore wrong;
  wrong.add("head.bias", {3});
  CHECK_THROWS_AS(check_parameters(net, wrong), DataError);
}
