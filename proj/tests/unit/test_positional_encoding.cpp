#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "glk/errors.hpp"
#include "glk/positional_encoding.hpp"

using namespace glk;
using std::numbers::pi;

TEST_CASE("spe values") {
  const auto g = spe(5, 7, 8);
  CHECK(g.depth() == 8);
  CHECK(g(0, 0, 1) == 1.0);
  for (int y = 0; y < 5; ++y) CHECK(g(y, 3, 0) == std::sin(3.0));
  // y half starts at channel d_p / 2 with the same frequency ladder.
  CHECK(g(4, 0, 4) == std::sin(4.0));
  CHECK(g(2, 6, 3) == doctest::Approx(std::cos(6.0 / std::pow(10000.0, 2.0 / 8))));
  CHECK_THROWS_AS(spe(4, 4, 6), ConfigError);
}

TEST_CASE("spe scan: bounded, x half constant along y, y half constant along x") {
  const auto g = spe(9, 11, 16);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 11; ++x) {
      for (int c = 0; c < 16; ++c) {
        CHECK(std::abs(g(y, x, c)) <= 1.0);
        if (c < 8) CHECK(g(y, x, c) == g(0, x, c));
        else CHECK(g(y, x, c) == g(y, 0, c));
      }
    }
  }
}

TEST_CASE("expand_guides") {
  const auto bank = init_guides(16, 64, 64, 2.0, 1);
  const auto ex = expand_guides(bank, 256);
  CHECK(ex.expansion == 16);
  CHECK(ex.functions.size() == 256);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(ex.functions[i * 16] == bank.params[i]);
    for (std::size_t j = 1; j < 16; ++j) {
      const auto& f = ex.functions[i * 16 + j];
      CHECK(f.freq_x == bank.params[i].freq_x);
      CHECK(f.freq_y == bank.params[i].freq_y);
      CHECK(f.phase - ex.functions[i * 16 + j - 1].phase == doctest::Approx(pi / 8).epsilon(1e-12));
    }
    // Equal spacing wraps around: the last step back to j = 0 (mod 2 pi) is also pi / 8.
    const double wrap = ex.functions[i * 16].phase + 2 * pi - ex.functions[i * 16 + 15].phase;
    CHECK(wrap == doctest::Approx(pi / 8).epsilon(1e-12));
  }
  CHECK_THROWS_AS(expand_guides(bank, 250), ConfigError);
}

TEST_CASE("gpe with J = 1 degenerate banks") {
  // With d_p == d_g no phase shift is applied, so constant guides add exactly 0 or 1.
  GuideBank zero{std::vector<GuideParams>(8), 4, 4, 2.0};
  CHECK(gpe(zero, 6, 5, 8) == spe(6, 5, 8));

  GuideBank one{std::vector<GuideParams>(8, GuideParams{0, 0, pi / 2}), 4, 4, 2.0};
  const auto g = gpe(one, 6, 5, 8), s = spe(6, 5, 8);
  for (std::size_t k = 0; k < g.values().size(); ++k) CHECK(g.values()[k] - s.values()[k] == doctest::Approx(1.0));
}

TEST_CASE("gpe block sums vanish and the guide part is bounded") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> f(-40, 40), ph(0, 2 * pi);
  GuideBank bank;
  bank.width = bank.height = 32;
  for (int i = 0; i < 4; ++i) bank.params.push_back({f(gen), f(gen), ph(gen)});
  const int d_p = 32;
  const auto g = gpe(bank, 7, 9, d_p), s = spe(7, 9, d_p);
  const int J = d_p / 4;
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      for (int i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (int j = 0; j < J; ++j) {
          const double diff = g(y, x, i * J + j) - s(y, x, i * J + j);
          CHECK(std::abs(diff) <= 1.0 + 1e-12);
          sum += diff;
        }
        CHECK(std::abs(sum) < 1e-9);
        // j = 0 channel is the raw guide evaluated on the grid's size.
        CHECK(std::abs(g(y, x, i * J) - s(y, x, i * J) - eval_guide(bank.params[i], x, y, 9, 7)) < 1e-12);
      }
    }
  }
}

TEST_CASE("grid dump round trip") {
  const auto g = gpe(init_guides(4, 8, 8, 2.0, 3), 3, 2, 8);
  const auto bytes = encode_grid(g);
  CHECK(bytes.rfind("3 2 8\n", 0) == 0);
  CHECK(bytes.size() == 6 + 3 * 2 * 8 * 8);
  CHECK(decode_grid(bytes) == g);
  // Little-endian float64: 1.0 is 00 .. F0 3F.
  const auto one = encode_grid(Grid3(1, 1, 1, 1.0));
  CHECK(one == std::string("1 1 1\n\x00\x00\x00\x00\x00\x00\xF0\x3F", 14));
  CHECK_THROWS_AS(decode_grid("2 2 2\n\x01"), ParseError);
}
