#include <doctest.h>

#include <cmath>
#include <random>

#include "glk/errors.hpp"
#include "glk/gefm.hpp"
#include "glk/synth.hpp"
#include "../support/fixtures.hpp"

using namespace glk;

namespace {

FeatureGrid random_grid(std::mt19937_64& gen, int h, int w, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  FeatureGrid g(h, w, d);
  for (double& v : g.values()) v = n(gen);
  return g;
}

ProjectionParams random_projection(std::mt19937_64& gen, std::size_t d_in, std::size_t d_out) {
  std::normal_distribution<double> n(0.0, 1.0);
  ProjectionParams p{Matrix(d_in, d_out), std::vector<double>(d_out)};
  for (double& v : p.weight.data()) v = n(gen);
  for (double& v : p.bias) v = n(gen);
  return p;
}

}  // namespace

TEST_CASE("project features") {
  std::mt19937_64 gen(1);
  const auto x = random_grid(gen, 4, 5, 3);
  ProjectionParams id{Matrix(3, 3), std::vector<double>(3, 0.0)};
  for (std::size_t i = 0; i < 3; ++i) id.weight(i, i) = 1.0;
  CHECK(project_features(x, id) == x);

  ProjectionParams bias_only{Matrix(3, 2), {0.5, -2.0}};
  const auto b = project_features(x, bias_only);
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 5; ++xx) {
      CHECK(b(y, xx, 0) == 0.5);
      CHECK(b(y, xx, 1) == -2.0);
    }

  const auto p = random_projection(gen, 3, 4);
  const auto out = project_features(x, p);
  for (int y = 0; y < 4; ++y)
    for (int xx = 0; xx < 5; ++xx)
      for (int o = 0; o < 4; ++o) {
        double s = p.bias[o];
        for (int i = 0; i < 3; ++i) s += x(y, xx, i) * p.weight(i, o);
        CHECK(out(y, xx, o) == doctest::Approx(s).epsilon(1e-13));
      }
  CHECK_THROWS_AS(project_features(x, random_projection(gen, 2, 4)), ShapeError);
}

TEST_CASE("ground-truth guided target") {
  const auto bank = init_guides(6, 12, 10, 2.0, 3);
  LabelMap single(12, 10);
  for (int y = 2; y < 8; ++y)
    for (int x = 3; x < 9; ++x) single.set(x, y, 4);
  const auto t = gt_guided_target(single, bank);
  CHECK(t.target.depth() == 6);
  const auto e = guided_embedding(bank, instances_of(single)[0]);
  std::size_t band = 0, interior = 0;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 12; ++x) {
      const bool inside = single.at(x, y) == 4;
      for (int c = 0; c < 6; ++c) CHECK(t.target(y, x, c) == (inside ? e.values[c] : 0.0));
      const double w = t.weights(y, x, 0);
      if (!inside) CHECK(w == 0.0);
      else if (w == 3.0) ++band;
      else if (w == 1.0) ++interior;
    }
  }
  // 6x6 square, radius-2 band leaves a 2x2 interior.
  CHECK(band == 32);
  CHECK(interior == 4);

  const auto empty = gt_guided_target(LabelMap(5, 5), bank);
  for (double v : empty.target.values()) CHECK(v == 0.0);
  for (double v : empty.weights.values()) CHECK(v == 0.0);
}

TEST_CASE("targets are constant per instance") {
  std::mt19937_64 gen(2);
  const auto bank = init_guides(4, 16, 16, 2.0, 8);
  const auto m = testing::random_blocks(gen, 16, 16, 3);
  const auto t = gt_guided_target(m, bank);
  for (const auto& s : instances_of(m)) {
    const auto& p0 = s.pixels.front();
    for (const auto& p : s.pixels)
      for (int c = 0; c < 4; ++c) CHECK(t.target(p.y, p.x, c) == t.target(p0.y, p0.x, c));
  }
}

TEST_CASE("trained targets separate two leaves") {
  RosetteConfig cfg;
  cfg.width = cfg.height = 48;
  cfg.n_min = cfg.n_max = 2;
  const auto m = generate_plant(cfg, 5);
  const std::vector<LabelMap> imgs = {m};
  GuideTrainConfig tc;
  tc.epochs = 200;
  const auto trained = train_guides(imgs, tc, init_guides(16, 48, 48, 2.0, 1));
  const auto t = gt_guided_target(m, trained.bank);
  const auto inst = instances_of(m);
  REQUIRE(inst.size() == 2);
  const auto a = t.target.pixel(inst[0].pixels[0].y, inst[0].pixels[0].x);
  const auto b = t.target.pixel(inst[1].pixels[0].y, inst[1].pixels[0].x);
  double d = 0.0;
  for (int c = 0; c < 16; ++c) d += std::abs(a[c] - b[c]);
  CHECK(d >= 2.0);
}

TEST_CASE("guided L1 loss") {
  std::mt19937_64 gen(3);
  const auto target = random_grid(gen, 4, 6, 5);
  FeatureGrid uniform(4, 6, 1, 1.0);
  CHECK(guided_l1_loss(target, target, uniform) == 0.0);

  FeatureGrid shifted = target;
  for (double& v : shifted.values()) v += 1.0;
  CHECK(guided_l1_loss(shifted, target, uniform) == doctest::Approx(5.0));

  CHECK(guided_l1_loss(shifted, target, FeatureGrid(4, 6, 1, 0.0)) == 0.0);

  const auto pred = random_grid(gen, 4, 6, 5);
  FeatureGrid w(4, 6, 1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (double& v : w.values()) v = u(gen);
  double num = 0.0, den = 0.0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x)
      for (int c = 0; c < 5; ++c) num += w(y, x, 0) * std::abs(pred(y, x, c) - target(y, x, c));
  for (double v : w.values()) den += v;
  const double loss = guided_l1_loss(pred, target, w);
  CHECK(loss == doctest::Approx(num / den).epsilon(1e-13));
  CHECK(loss >= 0.0);
  CHECK_THROWS_AS(guided_l1_loss(pred, random_grid(gen, 4, 6, 4), w), ShapeError);
}

TEST_CASE("fuse features") {
  std::mt19937_64 gen(4);
  const auto mask = random_grid(gen, 3, 4, 5);
  const auto guided = random_grid(gen, 3, 4, 2);
  ProjectionParams pass{Matrix(7, 5), std::vector<double>(5, 0.0)};
  for (std::size_t i = 0; i < 5; ++i) pass.weight(i, i) = 1.0;
  CHECK(fuse_features(mask, guided, pass) == mask);

  const auto zero = fuse_features(mask, guided, {Matrix(7, 5), std::vector<double>(5, 0.0)});
  for (double v : zero.values()) CHECK(v == 0.0);

  const auto p = random_projection(gen, 7, 5);
  const auto out = fuse_features(mask, guided, p);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int o = 0; o < 5; ++o) {
        double s = p.bias[o];
        for (int i = 0; i < 5; ++i) s += mask(y, x, i) * p.weight(i, o);
        for (int i = 0; i < 2; ++i) s += guided(y, x, i) * p.weight(5 + i, o);
        CHECK(out(y, x, o) == doctest::Approx(s).epsilon(1e-13));
      }
  CHECK_THROWS_AS(fuse_features(mask, random_grid(gen, 2, 4, 2), p), ShapeError);
}

TEST_CASE("dice and bce mask losses") {
  std::vector<double> gt(1024, 0.0);
  for (std::size_t i = 0; i < 400; ++i) gt[i] = 1.0;
  CHECK(dice_loss(gt, gt) < 1e-3);
  std::vector<double> inv(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) inv[i] = 1.0 - gt[i];
  CHECK(dice_loss(inv, gt) == doctest::Approx(1.0).epsilon(1e-3));

  CHECK(bce_loss(gt, gt) <= 1e-6);
  CHECK(bce_loss(std::vector<double>(1024, 0.5), gt) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> p(200), g(200);
    for (std::size_t i = 0; i < 200; ++i) {
      p[i] = u(gen);
      g[i] = u(gen) < 0.5 ? 1.0 : 0.0;
    }
    double inter = 0, sp = 0, sg = 0, ce = 0;
    for (std::size_t i = 0; i < 200; ++i) {
      inter += p[i] * g[i];
      sp += p[i];
      sg += g[i];
      const double q = std::min(std::max(p[i], 1e-7), 1 - 1e-7);
      ce += -(g[i] * std::log(q) + (1 - g[i]) * std::log(1 - q));
    }
    const double dl = dice_loss(p, g);
    CHECK(dl == doctest::Approx(1 - (2 * inter + 1) / (sp + sg + 1)).epsilon(1e-13));
    CHECK(dl >= 0.0);
    CHECK(dl <= 1.0);
    CHECK(bce_loss(p, g) == doctest::Approx(ce / 200).epsilon(1e-13));
  }
  CHECK(dice_loss(std::vector<double>(4, 0.0), std::vector<double>(4, 0.0)) == 0.0);
}

TEST_CASE("classification loss") {
  Matrix logits(2, 2);
  CHECK(classification_loss(logits, std::vector<int>{0, 1}) == doctest::Approx(std::log(2.0)));
  logits(0, 0) = 3.0;
  logits(1, 1) = -1.0;
  const double expected = 0.5 * ((std::log(std::exp(3.0) + 1.0) - 3.0) + (std::log(1.0 + std::exp(-1.0)) + 1.0));
  CHECK(classification_loss(logits, std::vector<int>{0, 1}) == doctest::Approx(expected));
  CHECK_THROWS_AS(classification_loss(logits, std::vector<int>{0, 2}), RangeError);
}

TEST_CASE("total loss") {
  CHECK(total_loss({}) == 0.0);
  CHECK(total_loss({1, 1, 1, 1}) == 14.0);
  const LossComponents c{0.3, 1.7, 0.25, 2.0};
  const LossWeights w{1.5, 0.5, 3.0, 2.0};
  CHECK(total_loss(c, w) == doctest::Approx(2.0 * 0.3 + 1.5 * 1.7 + 0.5 * 0.25 + 3.0 * 2.0));
  CHECK_THROWS_AS(total_loss(c, LossWeights{-1, 0, 0, 0}), ConfigError);
}
