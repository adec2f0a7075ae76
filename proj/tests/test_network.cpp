#include "pointcam/network.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "pointcam/checkpoint.hpp"
#include "pointcam/geometry.hpp"
#include "pointcam/ops.hpp"
#include "pointcam/rng.hpp"
#include "test_support.hpp"

using namespace pointcam;
using autodiff::Tensor;
using geometry::Vec3;
using network::BackboneConfig;
using network::ForwardOutput;
using network::Model;
using network::TaskHead;
using network::UpeConfig;
using test_support::random_cloud;

namespace {

std::vector<Vec3> make_coords(int n, std::uint64_t seed) { return random_cloud(n, seed).coords; }

Tensor coords_tensor(const std::vector<Vec3>& coords) {
  std::vector<double> values;
  for (const Vec3& p : coords) {
    values.push_back(p.x);
    values.push_back(p.y);
    values.push_back(p.z);
  }
  return Tensor::from_values({static_cast<int>(coords.size()), 3}, std::move(values));
}

Tensor find_param(const Model& model, const std::string& name) {
  for (const auto& nt : model.named_parameters())
    if (nt.name == name) return nt.tensor;
  throw std::runtime_error("no parameter named " + name);
}

Tensor linear(const Model& model, const std::string& prefix, const Tensor& x) {
  return autodiff::add(autodiff::matmul(x, find_param(model, prefix + ".weight")),
                       find_param(model, prefix + ".bias"));
}

// Rebuilds the level-j per-point score head from the published parameters:
// sigmoid(phi_out(relu(phi_hidden(F_j)))).
Tensor phi_scores(const Model& model, int level, const Tensor& features) {
  const std::string p = "upe.phi" + std::to_string(level);
  return autodiff::sigmoid(linear(model, p + ".out", autodiff::relu(linear(model, p + ".hidden", features))));
}

BackboneConfig small_backbone() {
  BackboneConfig b;
  b.levels = 3;
  b.channels = {8, 12, 16};
  b.level_divisors = {1, 2, 4};
  b.num_known_classes = 3;
  b.head_hidden = 10;
  return b;
}

UpeConfig small_upe() {
  UpeConfig u;
  u.hidden = 6;
  return u;
}

}  // namespace

TEST_CASE("BackboneConfig::validate rejects inconsistent settings") {
  CHECK_NOTHROW(small_backbone().validate());
  CHECK(small_backbone().num_logits() == 4);

  BackboneConfig b = small_backbone();
  SUBCASE("no levels") { b.levels = 0; }
  SUBCASE("channel list length mismatch") { b.channels = {8, 12}; }
  SUBCASE("divisor list length mismatch") { b.level_divisors = {1, 2}; }
  SUBCASE("non-positive channel width") { b.channels = {8, 0, 16}; }
  SUBCASE("zero first divisor") { b.level_divisors = {0, 2, 4}; }
  SUBCASE("decreasing divisors") { b.level_divisors = {1, 4, 2}; }
  SUBCASE("no known classes") { b.num_known_classes = 0; }
  SUBCASE("non-positive head width") { b.head_hidden = 0; }
  CHECK_THROWS_AS(b.validate(), std::invalid_argument);
}

TEST_CASE("UpeConfig::validate checks only an enabled estimator") {
  UpeConfig u = small_upe();
  CHECK_NOTHROW(u.validate());

  u.hidden = 0;
  CHECK_THROWS_AS(u.validate(), std::invalid_argument);
  u.enabled = false;
  CHECK_NOTHROW(u.validate());  // disabled: knobs are ignored

  UpeConfig neg = small_upe();
  neg.alpha = -0.5;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("model initialization is pinned by the seed") {
  Rng r1(5), r2(5), r3(6);
  const Model a(small_backbone(), small_upe(), r1);
  const Model b(small_backbone(), small_upe(), r2);
  const Model c(small_backbone(), small_upe(), r3);

  const auto na = a.named_parameters();
  const auto nb = b.named_parameters();
  const auto nc = c.named_parameters();
  REQUIRE(na.size() == nb.size());
  bool all_equal = true;
  bool any_differs_from_c = false;
  for (std::size_t i = 0; i < na.size(); ++i) {
    CHECK(na[i].name == nb[i].name);
    if (na[i].tensor.values() != nb[i].tensor.values()) all_equal = false;
    if (na[i].tensor.values() != nc[i].tensor.values()) any_differs_from_c = true;
  }
  CHECK(all_equal);
  CHECK(any_differs_from_c);
}

TEST_CASE("forward shapes: classification pools to one logit row") {
  Rng rng(7);
  const Model model(small_backbone(), small_upe(), rng);
  const auto coords = make_coords(32, 1);
  const ForwardOutput out = model.forward(coords);

  CHECK(out.logits.rows() == 1);
  CHECK(out.logits.cols() == 4);  // 3 known + reserved unknown column
  REQUIRE(out.upe_scores.defined());
  CHECK(out.upe_scores.rows() == 32);
  CHECK(out.upe_scores.cols() == 1);
  REQUIRE(out.fusion_weights.defined());
  CHECK(out.fusion_weights.rows() == 32);
  CHECK(out.fusion_weights.cols() == 3);
  for (double s : out.upe_scores.values()) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
  }
}

TEST_CASE("forward shapes: segmentation emits one logit row per point") {
  BackboneConfig b = small_backbone();
  b.head = TaskHead::segmentation;
  Rng rng(7);
  const Model model(b, small_upe(), rng);
  const ForwardOutput out = model.forward(make_coords(32, 2));
  CHECK(out.logits.rows() == 32);
  CHECK(out.logits.cols() == 4);
}

TEST_CASE("forward shapes: unknown_logit off and estimator off reproduce a plain net") {
  BackboneConfig b = small_backbone();
  b.unknown_logit = false;
  UpeConfig u = small_upe();
  u.enabled = false;
  Rng rng(7);
  const Model model(b, u, rng);
  const ForwardOutput out = model.forward(make_coords(32, 3));
  CHECK(out.logits.cols() == 3);
  CHECK(!out.upe_scores.defined());
  CHECK(!out.fusion_weights.defined());
}

TEST_CASE("encode: level resolutions follow the divisors") {
  Rng rng(9);
  const Model model(small_backbone(), small_upe(), rng);
  const auto coords = make_coords(32, 4);
  const network::EncodeResult enc = model.encode(coords);
  REQUIRE(enc.features.size() == 3);
  REQUIRE(enc.coords.size() == 3);
  CHECK(enc.features[0].rows() == 32);
  CHECK(enc.features[1].rows() == 16);
  CHECK(enc.features[2].rows() == 8);
  CHECK(enc.features[0].cols() == 8);
  CHECK(enc.features[1].cols() == 12);
  CHECK(enc.features[2].cols() == 16);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(enc.coords[j].size() == static_cast<std::size_t>(enc.features[j].rows()));

  CHECK_THROWS_AS(model.encode(make_coords(3, 5)), std::invalid_argument);
}

TEST_CASE("upsample_features: nearest retained point, ties to the lower index") {
  const Tensor feats = Tensor::from_values({2, 2}, {1.0, 2.0, 3.0, 4.0});
  const std::vector<Vec3> level_coords = {{0.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
  const std::vector<Vec3> full_coords = {
      {0.9, 0.0, 0.0}, {1.1, 0.0, 0.0}, {1.0, 0.0, 0.0}, {-5.0, 0.0, 0.0}};

  const Tensor up = network::upsample_features(feats, level_coords, full_coords);
  REQUIRE(up.rows() == 4);
  REQUIRE(up.cols() == 2);
  const std::vector<double> expect = {1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 1.0, 2.0};
  CHECK(up.values() == expect);

  CHECK_THROWS_AS(network::upsample_features(Tensor{}, level_coords, full_coords),
                  std::invalid_argument);
  const std::vector<Vec3> wrong_count = {{0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(network::upsample_features(feats, wrong_count, full_coords),
                  std::invalid_argument);
}

TEST_CASE("fusion weights: every row sums to one") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(100 + trial);
    const Model model(small_backbone(), small_upe(), rng);
    const ForwardOutput out = model.forward(make_coords(16, 300 + trial));
    REQUIRE(out.fusion_weights.rows() == 16);
    const auto& w = out.fusion_weights.values();
    for (int i = 0; i < 16; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < 3; ++j) row_sum += w[static_cast<std::size_t>(i) * 3 + j];
      CHECK(row_sum == doctest::Approx(1.0).epsilon(1e-9));
      for (int j = 0; j < 3; ++j) CHECK(w[static_cast<std::size_t>(i) * 3 + j] > 0.0);
    }
  }
}

TEST_CASE("fusion with a single level collapses to that level's scores") {
  BackboneConfig b;
  b.levels = 1;
  b.channels = {10};
  b.level_divisors = {1};
  b.num_known_classes = 3;
  b.head_hidden = 8;
  Rng rng(17);
  const Model model(b, small_upe(), rng);

  const auto coords = make_coords(20, 6);
  const ForwardOutput out = model.forward(coords);
  REQUIRE(out.upe_scores.rows() == 20);

  // With one level the softmax weight is exactly 1, so the fused score must
  // equal sigmoid(phi_1(F_1)) bit for bit.
  const Tensor f1 = autodiff::relu(linear(model, "backbone.level0", coords_tensor(coords)));
  const Tensor a1 = phi_scores(model, 0, f1);
  REQUIRE(a1.rows() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(out.upe_scores.values()[i] == a1.values()[i]);

  for (double w : out.fusion_weights.values()) CHECK(w == 1.0);
}

TEST_CASE("fusion without point guidance is the plain mean of level scores") {
  UpeConfig u = small_upe();
  u.point_guided = false;
  Rng rng(23);
  const Model model(small_backbone(), u, rng);

  const int n = 24;
  const auto coords = make_coords(n, 8);
  const ForwardOutput out = model.forward(coords);
  for (double w : out.fusion_weights.values()) CHECK(w == 1.0 / 3.0);

  // Recompute the per-level scores from the public pieces, then fold them in
  // the same order the fusion uses; the result must match bitwise.
  const network::EncodeResult enc = model.encode(coords);
  std::vector<Tensor> level_scores;
  for (int j = 0; j < 3; ++j) {
    const Tensor full =
        enc.coords[static_cast<std::size_t>(j)].size() == static_cast<std::size_t>(n)
            ? enc.features[static_cast<std::size_t>(j)]
            : network::upsample_features(enc.features[static_cast<std::size_t>(j)],
                                         enc.coords[static_cast<std::size_t>(j)], coords);
    level_scores.push_back(phi_scores(model, j, full));
  }
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j)
      acc += (1.0 / 3.0 * level_scores[static_cast<std::size_t>(j)].values()[static_cast<std::size_t>(i)]) * 1.0;
    CHECK(out.upe_scores.values()[static_cast<std::size_t>(i)] == acc);
  }
}

TEST_CASE("msp_scores: uniform logits give exactly 1 - 1/m") {
  const Tensor logits = Tensor::from_values({2, 4}, {0.7, 0.7, 0.7, 0.7, -2.0, -2.0, -2.0, -2.0});
  const std::vector<double> scores = network::msp_scores(logits);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0] == 1.0 - 1.0 / 4.0);
  CHECK(scores[1] == 1.0 - 1.0 / 4.0);
}

TEST_CASE("msp_scores: frozen value on a known row") {
  const Tensor logits = Tensor::from_values({1, 3}, {1.0, 2.0, 0.5});
  const double denom = std::exp(1.0 - 2.0) + std::exp(0.0) + std::exp(0.5 - 2.0);
  CHECK(network::msp_scores(logits)[0] == 1.0 - 1.0 / denom);
}

TEST_CASE("maxlogit_scores: negated row maximum") {
  const Tensor logits = Tensor::from_values({2, 3}, {1.0, 2.0, 0.5, -3.0, -1.5, -2.0});
  const std::vector<double> scores = network::maxlogit_scores(logits);
  CHECK(scores[0] == -2.0);
  CHECK(scores[1] == 1.5);
}

TEST_CASE("known_class_argmax: ignores the unknown column and breaks ties low") {
  const Tensor logits = Tensor::from_values({2, 4}, {0.5, 0.9, 0.9, 5.0, 2.0, 1.0, -1.0, 9.0});
  const std::vector<int> pred = network::known_class_argmax(logits, 3);
  CHECK(pred == std::vector<int>{1, 0});
  CHECK_THROWS_AS(network::known_class_argmax(logits, 0), std::invalid_argument);
  CHECK_THROWS_AS(network::known_class_argmax(logits, 5), std::invalid_argument);
}

TEST_CASE("sample_unknown_score: mean of the point scores") {
  CHECK(network::sample_unknown_score({0.25, 0.75}) == 0.5);
  CHECK(network::sample_unknown_score({1.0}) == 1.0);
  CHECK_THROWS_AS(network::sample_unknown_score({}), std::invalid_argument);
}

TEST_CASE("total_loss composition") {
  Rng rng(31);
  const Model model(small_backbone(), small_upe(), rng);
  const auto coords = make_coords(16, 9);
  const ForwardOutput out = model.forward(coords);
  const std::vector<int> labels = {2};
  const std::vector<double> refs(16, 0.5);

  SUBCASE("alpha weights the estimator term") {
    const network::LossParts parts = network::total_loss(out, labels, refs, 2.5);
    CHECK(parts.total.values()[0] == parts.task.values()[0] + 2.5 * parts.upe.values()[0]);
    CHECK(parts.upe.values()[0] > 0.0);
  }
  SUBCASE("alpha zero keeps total equal to the task loss") {
    const network::LossParts parts = network::total_loss(out, labels, refs, 0.0);
    CHECK(parts.total.values()[0] == parts.task.values()[0]);
  }
  SUBCASE("estimator term is the plain mean squared error") {
    const network::LossParts parts = network::total_loss(out, labels, refs, 1.0);
    double mse = 0.0;
    for (double s : out.upe_scores.values()) mse += (s - 0.5) * (s - 0.5);
    mse /= 16.0;
    CHECK(parts.upe.values()[0] == doctest::Approx(mse).epsilon(1e-12));
  }
  SUBCASE("reference count must match the score rows") {
    const std::vector<double> short_refs(15, 0.5);
    CHECK_THROWS_AS(network::total_loss(out, labels, short_refs, 1.0), std::invalid_argument);
  }
  SUBCASE("negative alpha is rejected") {
    CHECK_THROWS_AS(network::total_loss(out, labels, refs, -1.0), std::invalid_argument);
  }
}

TEST_CASE("total_loss without estimator scores reports a zero estimator term") {
  BackboneConfig b = small_backbone();
  UpeConfig u = small_upe();
  u.enabled = false;
  Rng rng(37);
  const Model model(b, u, rng);
  const ForwardOutput out = model.forward(make_coords(16, 10));
  const network::LossParts parts = network::total_loss(out, {1}, {}, 1.0);
  CHECK(parts.upe.values()[0] == 0.0);
  CHECK(parts.total.values()[0] == parts.task.values()[0]);
}

TEST_CASE("checkpoint round-trip restores bitwise identical behaviour") {
  test_support::ScratchDir scratch("network_ckpt");
  const std::string path = scratch.path("checkpoint.bin");
  const auto coords = make_coords(32, 11);

  Rng r1(41);
  const Model trained(small_backbone(), small_upe(), r1);
  autodiff::save_checkpoint(path, trained.named_parameters());
  const ForwardOutput want = trained.forward(coords);

  Rng r2(999);  // different init, then overwritten by the checkpoint
  Model loaded(small_backbone(), small_upe(), r2);
  loaded.load_parameters(autodiff::load_checkpoint(path));
  const ForwardOutput got = loaded.forward(coords);

  CHECK(got.logits.values() == want.logits.values());
  CHECK(got.upe_scores.values() == want.upe_scores.values());
  CHECK(got.fusion_weights.values() == want.fusion_weights.values());
}

TEST_CASE("load_parameters rejects count, name, and shape mismatches") {
  test_support::ScratchDir scratch("network_ckpt_bad");
  const std::string path = scratch.path("checkpoint.bin");
  Rng rng(43);
  Model model(small_backbone(), small_upe(), rng);
  autodiff::save_checkpoint(path, model.named_parameters());
  const auto entries = autodiff::load_checkpoint(path);

  SUBCASE("missing parameter") {
    auto fewer = entries;
    fewer.erase("head.out.bias");
    CHECK_THROWS_AS(model.load_parameters(fewer), std::runtime_error);
  }
  SUBCASE("renamed parameter, same count") {
    auto renamed = entries;
    auto node = renamed.extract("head.out.bias");
    node.key() = "head.out.bias_typo";
    renamed.insert(std::move(node));
    CHECK_THROWS_AS(model.load_parameters(renamed), std::runtime_error);
  }
  SUBCASE("shape mismatch") {
    auto reshaped = entries;
    auto& entry = reshaped.at("head.out.bias");
    entry.shape = {static_cast<int>(entry.values.size()), 1};
    CHECK_THROWS_AS(model.load_parameters(reshaped), std::runtime_error);
  }
}

TEST_CASE("end-to-end gradients match central differences") {
  BackboneConfig b;
  b.levels = 2;
  b.channels = {6, 8};
  b.level_divisors = {1, 2};
  b.num_known_classes = 2;
  b.head_hidden = 6;
  UpeConfig u;
  u.hidden = 4;
  Rng rng(47);
  Model model(b, u, rng);

  const auto coords = make_coords(12, 12);
  const std::vector<int> labels = {1};
  std::vector<double> refs(12);
  Rng ref_rng(13);
  for (double& r : refs) r = ref_rng.uniform();

  const auto loss_value = [&] {
    const ForwardOutput out = model.forward(coords);
    return network::total_loss(out, labels, refs, 1.0).total.values()[0];
  };

  for (Tensor& p : model.parameters()) p.zero_grad();
  {
    const ForwardOutput out = model.forward(coords);
    autodiff::backward(network::total_loss(out, labels, refs, 1.0).total);
  }

  // Probe a few entries of every parameter tensor against central
  // differences through the whole forward pass.
  const double h = 1e-5;
  Rng pick(29);
  for (Tensor& p : model.parameters()) {
    const int count = static_cast<int>(p.values().size());
    for (int probe = 0; probe < 3; ++probe) {
      const int idx = pick.uniform_int(count);
      const double saved = p.values()[static_cast<std::size_t>(idx)];
      p.mutable_values()[static_cast<std::size_t>(idx)] = saved + h;
      const double up = loss_value();
      p.mutable_values()[static_cast<std::size_t>(idx)] = saved - h;
      const double down = loss_value();
      p.mutable_values()[static_cast<std::size_t>(idx)] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p.grad()[static_cast<std::size_t>(idx)];
      const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      CHECK(std::abs(numeric - analytic) <= 1e-4 * scale);
    }
  }
}
