#pragma once

#include <cstddef>

#include "glk/guide_bank.hpp"
#include "glk/tensor.hpp"

namespace glk {

using EncodingGrid = Grid3;

/// Guides of a bank phase-shifted into d_p channels. Channel i * J + j is
/// guide i with phase + 2 pi * j / J.
struct ExpandedGuideSet {
  std::vector<GuideParams> functions;
  std::size_t source_count = 0;
  std::size_t expansion = 0;  // J = d_p / d_g
};

/// Standard sinusoidal encoding over pixel coordinates. Channels
/// [0, d_p/2) carry x, [d_p/2, d_p) carry y; inside each half channel 2j is
/// sin(pos / 10000^(2j/d_p)) and 2j+1 the matching cos.
EncodingGrid spe(int height, int width, int d_p);

ExpandedGuideSet expand_guides(const GuideBank& bank, int d_p);

/// spe plus the expanded guides, evaluated with the grid's own width and
/// height as the normalising size.
EncodingGrid gpe(const GuideBank& bank, int height, int width, int d_p);

}  // namespace glk
