#include "glk/positional_encoding.hpp"

#include <cmath>
#include <numbers>

#include "glk/errors.hpp"
#include "glk/parallel.hpp"

namespace glk {

EncodingGrid spe(int height, int width, int d_p) {
  if (d_p <= 0 || d_p % 4 != 0) throw ConfigError("encoding depth must be a positive multiple of 4, got " + std::to_string(d_p));
  if (height < 1 || width < 1) throw ConfigError("encoding grid must be non-empty");
  const int half = d_p / 2;
  std::vector<double> inv_scale(static_cast<std::size_t>(half / 2));
  for (int j = 0; j < half / 2; ++j) {
    inv_scale[static_cast<std::size_t>(j)] = 1.0 / std::pow(10000.0, 2.0 * j / static_cast<double>(d_p));
  }

  EncodingGrid grid(height, width, d_p);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < width; ++x) {
      auto px = grid.pixel(y, x);
      for (int j = 0; j < half / 2; ++j) {
        const double s = inv_scale[static_cast<std::size_t>(j)];
        px[2 * j] = std::sin(x * s);
        px[2 * j + 1] = std::cos(x * s);
        px[half + 2 * j] = std::sin(y * s);
        px[half + 2 * j + 1] = std::cos(y * s);
      }
    }
  });
  return grid;
}

ExpandedGuideSet expand_guides(const GuideBank& bank, int d_p) {
  const std::size_t d_g = bank.size();
  if (d_g == 0 || d_p <= 0 || static_cast<std::size_t>(d_p) % d_g != 0) {
    throw ConfigError("encoding depth " + std::to_string(d_p) + " is not a multiple of d_g = " + std::to_string(d_g));
  }
  const std::size_t expansion = static_cast<std::size_t>(d_p) / d_g;
  ExpandedGuideSet out{{}, d_g, expansion};
  out.functions.reserve(static_cast<std::size_t>(d_p));
  const double step = 2.0 * std::numbers::pi * static_cast<double>(d_g) / static_cast<double>(d_p);
  for (const auto& p : bank.params) {
    for (std::size_t j = 0; j < expansion; ++j) {
      out.functions.push_back({p.freq_x, p.freq_y, p.phase + step * static_cast<double>(j)});
    }
  }
  return out;
}

EncodingGrid gpe(const GuideBank& bank, int height, int width, int d_p) {
  EncodingGrid grid = spe(height, width, d_p);
  const ExpandedGuideSet expanded = expand_guides(bank, d_p);
  parallel_for(static_cast<std::size_t>(height), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < width; ++x) {
      auto px = grid.pixel(y, x);
      for (int c = 0; c < d_p; ++c) {
        px[c] += eval_guide(expanded.functions[static_cast<std::size_t>(c)], x, y, width, height);
      }
    }
  });
  return grid;
}

}  // namespace glk
