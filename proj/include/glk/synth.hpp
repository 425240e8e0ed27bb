#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "glk/data_model.hpp"

namespace glk {

inline constexpr double kGoldenAngle = 2.399963229728653;  // pi * (3 - sqrt(5))

struct RosetteConfig {
  int width = 96;
  int height = 96;
  int n_min = 3;
  int n_max = 6;
  double center_jitter = 3.0;      // pixels, uniform in a square around the image centre
  double growth = 1.2;             // leaf length ratio between successive whorls
  double aspect_min = 0.35;        // leaf width / length
  double aspect_max = 0.55;
  double reach = 0.45;             // outermost leaf length as a fraction of min(W, H)
  double phyllotaxis = kGoldenAngle;
  bool occlusion = true;
  std::uint64_t seed = 0;          // dataset seed; per-plant seeds derive from it

  void validate() const;
};

/// One generated plant plus bookkeeping for the retained leaves, in whorl
/// order (instance id k + 1 is entry k).
struct PlantSample {
  LabelMap labels;
  std::vector<int> whorl;                 // whorl index of each retained leaf
  std::vector<std::size_t> drawn_area;    // in-image ellipse area before occlusion
  std::vector<std::size_t> visible_area;  // pixels left after later leaves were drawn

  bool has_occluded_leaf() const;
};

/// Leaves are rotated ellipses radiating from the plant centre at successive
/// phyllotaxis angles, each whorl `growth` times longer than the previous,
/// drawn inner to outer. Leaves with fewer than 8 visible pixels are removed
/// and ids compacted to 1..n. Throws GenerationError after bounded retries.
PlantSample generate_plant_detailed(const RosetteConfig& cfg, std::uint64_t seed);
LabelMap generate_plant(const RosetteConfig& cfg, std::uint64_t seed);

/// Seed of plant `index` in a dataset rooted at `cfg.seed`.
std::uint64_t plant_seed(const RosetteConfig& cfg, std::size_t index);

/// Writes plant_0001.pgm ... and manifest.json into out_dir; returns the
/// manifest path.
std::filesystem::path generate_dataset(const RosetteConfig& cfg, std::size_t count, const std::filesystem::path& out_dir);

struct PerturbSpec {
  double drop_prob = 0.0;
  double merge_prob = 0.0;  // per pair of touching instances
  int boundary_radius = 0;  // per mask: erode or dilate by this Chebyshev radius
  std::uint64_t seed = 0;

  void validate() const;
};

/// Imperfect "predictions" derived from a label map: drops, merges of
/// 4-adjacent instances, then boundary noise. Masks that end up empty are
/// removed. Output is a binary stack ordered by the smallest source id.
SoftMaskStack perturb(const LabelMap& map, const PerturbSpec& spec);

/// Rasterises a mask stack into a label map, later masks winning overlaps.
LabelMap stack_to_labelmap(const SoftMaskStack& masks, double threshold = 0.5);

}  // namespace glk
