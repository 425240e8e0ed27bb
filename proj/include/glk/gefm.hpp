#pragma once

#include <span>
#include <vector>

#include "glk/data_model.hpp"
#include "glk/guide_bank.hpp"
#include "glk/tensor.hpp"

namespace glk {

using FeatureGrid = Grid3;

/// Per-pixel affine map (a 1x1 convolution): out = in * weight + bias.
struct ProjectionParams {
  Matrix weight;  // d_in x d_out
  std::vector<double> bias;
};

FeatureGrid project_features(const FeatureGrid& x, const ProjectionParams& p);

struct EdgeWeighting {
  double edge_weight = 3.0;
  int radius = 2;
};

struct GuidedTarget {
  FeatureGrid target;   // depth d_g, zero on background
  FeatureGrid weights;  // depth 1: 0 background, edge_weight in the band, 1 elsewhere
};

GuidedTarget gt_guided_target(const LabelMap& map, const GuideBank& bank, const EdgeWeighting& edges = {});

/// Weighted mean of per-pixel L1 distances; 0 when the total weight is 0.
double guided_l1_loss(const FeatureGrid& pred, const FeatureGrid& target, const FeatureGrid& weights);

/// Projects the channel concatenation [mask_feats | guided_feats].
FeatureGrid fuse_features(const FeatureGrid& mask_feats, const FeatureGrid& guided_feats, const ProjectionParams& p);

/// 1 - (2 sum(p g) + 1) / (sum p + sum g + 1).
double dice_loss(std::span<const double> pred, std::span<const double> gt);

/// Mean binary cross-entropy with predictions clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> pred, std::span<const double> gt);

/// Mean softmax cross-entropy over {leaf, no-object} logits. `logits` is
/// n x 2; labels[k] is 0 for leaf and 1 for no-object.
double classification_loss(const Matrix& logits, std::span<const int> labels);

struct LossComponents {
  double guide_l1 = 0.0;
  double mask_ce = 0.0;
  double mask_dice = 0.0;
  double cls = 0.0;
};

struct LossWeights {
  double lambda_ce = 2.0;
  double lambda_dice = 5.0;
  double lambda_cls = 2.0;
  double lambda_guide = 5.0;

  void validate() const;
};

double total_loss(const LossComponents& c, const LossWeights& w = {});

}  // namespace glk
