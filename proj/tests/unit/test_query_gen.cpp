#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "glk/errors.hpp"
#include "glk/query_gen.hpp"
#include "../support/fixtures.hpp"

using namespace glk;

namespace {

Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.data()) v = n(gen);
  return m;
}

SoftMaskStack random_soft_stack(std::mt19937_64& gen, std::size_t n, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n * h * w);
  for (double& x : v) x = u(gen) < 0.6 ? 0.0 : u(gen);
  return SoftMaskStack(n, h, w, std::move(v));
}

SoftMaskStack permute_stack(const SoftMaskStack& s, const std::vector<std::size_t>& perm) {
  std::vector<double> v;
  for (std::size_t k : perm) {
    auto l = s.layer(k);
    v.insert(v.end(), l.begin(), l.end());
  }
  return SoftMaskStack(s.count(), s.height(), s.width(), std::move(v));
}

MlpParams zero_mlp(std::size_t d_in, std::size_t d_h, std::size_t d_out) {
  MlpParams p = init_mlp(d_in, d_h, d_out, 0);
  for (auto& l : p.layers) {
    for (double& w : l.weight.data()) w = 0.0;
    for (double& b : l.bias) b = 0.0;
  }
  return p;
}

}  // namespace

TEST_CASE("cross attention trivial cases") {
  std::mt19937_64 gen(1);
  const auto q = random_matrix(gen, 3, 4);
  Matrix k(5, 4);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 4; ++c) k(r, c) = 0.3 * c - 0.1;
  const auto v = random_matrix(gen, 5, 4);
  const auto res = cross_attention(q, k, v);
  for (double a : res.attention.data()) CHECK(a == doctest::Approx(0.2).epsilon(1e-14));

  const auto k1 = random_matrix(gen, 1, 4), v1 = random_matrix(gen, 1, 4);
  const auto single = cross_attention(q, k1, v1);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(single.attention(r, 0) == 1.0);
    for (std::size_t c = 0; c < 4; ++c) CHECK(single.output(r, c) == doctest::Approx(v1(0, c)));
  }
  CHECK_THROWS_AS(cross_attention(q, random_matrix(gen, 5, 3), v), ShapeError);
}

TEST_CASE("cross attention matches a naive loop") {
  std::mt19937_64 gen(2);
  const auto q = random_matrix(gen, 3, 8), k = random_matrix(gen, 5, 8), v = random_matrix(gen, 5, 8);
  const auto res = cross_attention(q, k, v);
  for (std::size_t i = 0; i < 3; ++i) {
    std::vector<double> logits(5);
    for (std::size_t j = 0; j < 5; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 8; ++c) dot += q(i, c) * k(j, c);
      logits[j] = std::exp(dot / std::sqrt(8.0));
    }
    const double z = std::accumulate(logits.begin(), logits.end(), 0.0);
    double row_sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(res.attention(i, j) == doctest::Approx(logits[j] / z).epsilon(1e-12));
      CHECK(res.attention(i, j) >= 0.0);
      row_sum += res.attention(i, j);
    }
    CHECK(std::abs(row_sum - 1.0) < 1e-12);
    for (std::size_t c = 0; c < 8; ++c) {
      double o = 0.0;
      for (std::size_t j = 0; j < 5; ++j) o += logits[j] / z * v(j, c);
      CHECK(res.output(i, c) == doctest::Approx(o).epsilon(1e-12));
    }
  }
}

TEST_CASE("guided mask embeddings") {
  std::mt19937_64 gen(3);
  const auto bank = init_guides(6, 20, 16, 2.0, 9);
  const auto m = testing::random_blocks(gen, 20, 16, 3);
  const auto rows = guided_mask_embeddings(bank, masks_from_labelmap(m));
  const auto inst = instances_of(m);
  REQUIRE(rows.rows() == inst.size());
  for (std::size_t k = 0; k < inst.size(); ++k) {
    const auto e = guided_embedding(bank, inst[k]);
    for (std::size_t i = 0; i < bank.size(); ++i) CHECK(std::abs(rows(k, i) - e.values[i]) < 1e-12);
  }

  const auto zeros = guided_mask_embeddings(bank, SoftMaskStack(4, 16, 20));
  for (double v : zeros.data()) CHECK(v == 0.0);

  const auto soft = random_soft_stack(gen, 5, 16, 20);
  const auto e = guided_mask_embeddings(bank, soft);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto layer = soft.layer(k);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      double num = 0.0, den = 0.0;
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 20; ++x) {
          const double w = layer[y * 20 + x];
          num += w * std::sin(bank.params[i].freq_x * x / 20 + bank.params[i].freq_y * y / 16 + bank.params[i].phase);
          den += w;
        }
      CHECK(e(k, i) == doctest::Approx(num / den).epsilon(1e-12));
      CHECK(std::abs(e(k, i)) <= 1.0);
    }
  }
}

TEST_CASE("mlp forward") {
  const auto z = zero_mlp(4, 6, 5);
  std::mt19937_64 gen(4);
  const auto x = random_matrix(gen, 3, 4);
  const auto zero_out = mlp_forward(z, x);
  for (double v : zero_out.data()) CHECK(v == 0.0);

  // Single path: input 0 -> hidden 0 -> hidden 0 -> output 0 with unit weights.
  auto path = zero_mlp(4, 6, 5);
  path.layers[0].weight(0, 0) = 1.0;
  path.layers[1].weight(0, 0) = 1.0;
  path.layers[2].weight(0, 0) = 1.0;
  Matrix in(1, 4);
  in(0, 0) = 2.5;
  CHECK(mlp_forward(path, in)(0, 0) == 2.5);
  in(0, 0) = -1.0;
  CHECK(mlp_forward(path, in)(0, 0) == 0.0);

  CHECK_THROWS_AS(mlp_forward(z, random_matrix(gen, 2, 3)), ShapeError);
  auto broken = z;
  broken.layers.pop_back();
  CHECK_THROWS_AS(mlp_forward(broken, x), ShapeError);
}

TEST_CASE("mlp rows are independent") {
  std::mt19937_64 gen(5);
  const auto p = init_mlp(4, 8, 3, 11);
  const auto x = random_matrix(gen, 6, 4);
  std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  Matrix px(6, 4);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 4; ++c) px(r, c) = x(perm[r], c);
  const auto y = mlp_forward(p, x), py = mlp_forward(p, px);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(py(r, c) == y(perm[r], c));
}

TEST_CASE("init_mlp bounds") {
  const auto p = init_mlp(16, 256, 256, 1);
  CHECK(p.layers.size() == 3);
  for (double w : p.layers[0].weight.data()) CHECK(std::abs(w) <= 0.25);
  for (double w : p.layers[1].weight.data()) CHECK(std::abs(w) <= 1.0 / 16.0);
  CHECK(init_mlp(16, 256, 256, 1).layers[2].weight == p.layers[2].weight);
}

TEST_CASE("gdpq") {
  const auto bank = init_guides(16, 24, 24, 2.0, 2);
  const auto out = gdpq(bank, SoftMaskStack(3, 24, 24), zero_mlp(16, 256, 256), {std::vector<double>(16, 0.0)});
  CHECK(out.rows() == 3);
  CHECK(out.cols() == 256);
  for (double v : out.data()) CHECK(v == 0.0);

  std::mt19937_64 gen(6);
  const auto mlp = init_mlp(16, 32, 24, 3);
  QueryBias bias{std::vector<double>(16)};
  for (double& b : bias.b) b = std::normal_distribution<double>(0, 0.3)(gen);
  const auto masks = random_soft_stack(gen, 5, 24, 24);
  const auto q = gdpq(bank, masks, mlp, bias);

  // Bias lives before the MLP.
  const auto e = guided_mask_embeddings(bank, masks);
  Matrix shifted = e;
  for (std::size_t r = 0; r < shifted.rows(); ++r)
    for (std::size_t c = 0; c < 16; ++c) shifted(r, c) += bias.b[c];
  CHECK(mlp_forward(mlp, shifted) == q);

  // Changing one mask changes only its row.
  std::vector<double> v(masks.values().begin(), masks.values().end());
  for (std::size_t i = 2 * 24 * 24; i < 3 * 24 * 24; ++i) v[i] = 1.0 - v[i];
  const auto q2 = gdpq(bank, SoftMaskStack(5, 24, 24, v), mlp, bias);
  for (std::size_t r = 0; r < 5; ++r) {
    const bool same = std::equal(q.row(r).begin(), q.row(r).end(), q2.row(r).begin());
    CHECK(same == (r != 2));
  }

  CHECK_THROWS_AS(gdpq(bank, masks, init_mlp(8, 8, 8, 0), bias), ShapeError);
}

TEST_CASE("gdpq is permutation equivariant") {
  std::mt19937_64 gen(7);
  const auto bank = init_guides(8, 16, 16, 2.0, 4);
  const auto mlp = init_mlp(8, 16, 12, 5);
  const QueryBias bias{std::vector<double>(8, 0.1)};
  for (int t = 0; t < 20; ++t) {
    const auto masks = random_soft_stack(gen, 6, 16, 16);
    std::vector<std::size_t> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const auto q = gdpq(bank, masks, mlp, bias);
    const auto pq = gdpq(bank, permute_stack(masks, perm), mlp, bias);
    for (std::size_t r = 0; r < 6; ++r)
      for (std::size_t c = 0; c < 12; ++c) CHECK(pq(r, c) == q(perm[r], c));
  }
}

TEST_CASE("dpq baseline") {
  std::mt19937_64 gen(8);
  Matrix a(4, 6, 1.0 / 6.0);
  Matrix kp(6, 8);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 8; ++c) kp(r, c) = 0.5 * c;
  const auto mlp = init_mlp(8, 16, 8, 9);
  const std::vector<double> bias(8, 0.2);
  const auto q = dpq_baseline(a, kp, mlp, bias);
  for (std::size_t r = 1; r < 4; ++r)
    for (std::size_t c = 0; c < 8; ++c) CHECK(q(r, c) == doctest::Approx(q(0, c)).epsilon(1e-14));

  const auto zero_out = dpq_baseline(a, kp, zero_mlp(8, 16, 8), bias);
  for (double v : zero_out.data()) CHECK(v == 0.0);

  const auto ra = random_matrix(gen, 3, 6), rk = random_matrix(gen, 6, 8);
  Matrix pooled(3, 8);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 8; ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += ra(i, j) * rk(j, c);
      pooled(i, c) = s + bias[c];
    }
  const auto expected = mlp_forward(mlp, pooled);
  const auto got = dpq_baseline(ra, rk, mlp, bias);
  for (std::size_t k = 0; k < got.data().size(); ++k) CHECK(got.data()[k] == doctest::Approx(expected.data()[k]).epsilon(1e-12));
  CHECK_THROWS_AS(dpq_baseline(ra, random_matrix(gen, 5, 8), mlp, bias), ShapeError);
}

TEST_CASE("combine queries") {
  std::mt19937_64 gen(10);
  const auto c = random_matrix(gen, 3, 5), p = random_matrix(gen, 3, 5);
  CHECK(combine_queries({c, Matrix(3, 5)}) == c);
  CHECK(combine_queries({Matrix(3, 5), p}) == p);
  const auto s = combine_queries({c, p});
  for (std::size_t k = 0; k < 15; ++k) CHECK(s.data()[k] == c.data()[k] + p.data()[k]);
  CHECK_THROWS_AS(combine_queries({c, Matrix(2, 5)}), ShapeError);
}

TEST_CASE("mlp json round trip") {
  const auto p = init_mlp(3, 4, 2, 12);
  const auto back = mlp_from_json(mlp_to_json(p));
  for (std::size_t l = 0; l < 3; ++l) {
    CHECK(back.layers[l].weight == p.layers[l].weight);
    CHECK(back.layers[l].bias == p.layers[l].bias);
  }
  CHECK_THROWS_AS(mlp_from_json("{\"layers\": []}"), ShapeError);
}
