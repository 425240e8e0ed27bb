#include "glk/gefm.hpp"

#include <algorithm>
#include <cmath>

#include "glk/errors.hpp"

namespace glk {

FeatureGrid project_features(const FeatureGrid& x, const ProjectionParams& p) {
  if (p.weight.rows() != static_cast<std::size_t>(x.depth())) {
    throw ShapeError("projection expects " + std::to_string(p.weight.rows()) + " input channels, got " +
                     std::to_string(x.depth()));
  }
  if (p.bias.size() != p.weight.cols()) throw ShapeError("projection bias length does not match output width");
  const int d_out = static_cast<int>(p.weight.cols());
  FeatureGrid out(x.height(), x.width(), d_out);
  for (int y = 0; y < x.height(); ++y) {
    for (int xx = 0; xx < x.width(); ++xx) {
      const auto in = x.pixel(y, xx);
      auto dst = out.pixel(y, xx);
      std::copy(p.bias.begin(), p.bias.end(), dst.begin());
      for (std::size_t i = 0; i < in.size(); ++i) {
        const auto w = p.weight.row(i);
        for (int o = 0; o < d_out; ++o) dst[o] += in[i] * w[o];
      }
    }
  }
  return out;
}

GuidedTarget gt_guided_target(const LabelMap& map, const GuideBank& bank, const EdgeWeighting& edges) {
  const int d_g = static_cast<int>(bank.size());
  GuidedTarget out{FeatureGrid(map.height(), map.width(), d_g), FeatureGrid(map.height(), map.width(), 1)};
  for (const auto& inst : instances_of(map)) {
    const auto e = guided_embedding(bank, inst);
    for (const Pixel& px : inst.pixels) {
      std::copy(e.values.begin(), e.values.end(), out.target.pixel(px.y, px.x).begin());
      out.weights(px.y, px.x, 0) = 1.0;
    }
    for (const Pixel& px : edge_band(map, inst.id, edges.radius).pixels) {
      out.weights(px.y, px.x, 0) = edges.edge_weight;
    }
  }
  return out;
}

double guided_l1_loss(const FeatureGrid& pred, const FeatureGrid& target, const FeatureGrid& weights) {
  if (pred.height() != target.height() || pred.width() != target.width() || pred.depth() != target.depth()) {
    throw ShapeError("guided_l1_loss: prediction and target shapes differ");
  }
  if (weights.height() != pred.height() || weights.width() != pred.width() || weights.depth() != 1) {
    throw ShapeError("guided_l1_loss: weight grid must be h x w x 1");
  }
  double num = 0.0, den = 0.0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      const double w = weights(y, x, 0);
      if (w == 0.0) continue;
      const auto a = pred.pixel(y, x);
      const auto b = target.pixel(y, x);
      double l1 = 0.0;
      for (std::size_t c = 0; c < a.size(); ++c) l1 += std::abs(a[c] - b[c]);
      num += w * l1;
      den += w;
    }
  }
  return den == 0.0 ? 0.0 : num / den;
}

FeatureGrid fuse_features(const FeatureGrid& mask_feats, const FeatureGrid& guided_feats, const ProjectionParams& p) {
  if (mask_feats.height() != guided_feats.height() || mask_feats.width() != guided_feats.width()) {
    throw ShapeError("fuse_features: spatial dimensions differ");
  }
  const int d_m = mask_feats.depth(), d_g = guided_feats.depth();
  FeatureGrid joined(mask_feats.height(), mask_feats.width(), d_m + d_g);
  for (int y = 0; y < joined.height(); ++y) {
    for (int x = 0; x < joined.width(); ++x) {
      auto dst = joined.pixel(y, x);
      const auto m = mask_feats.pixel(y, x);
      const auto g = guided_feats.pixel(y, x);
      std::copy(m.begin(), m.end(), dst.begin());
      std::copy(g.begin(), g.end(), dst.begin() + d_m);
    }
  }
  return project_features(joined, p);
}

double dice_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw ShapeError("dice_loss: size mismatch");
  double inter = 0.0, sp = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * gt[i];
    sp += pred[i];
    sg += gt[i];
  }
  return 1.0 - (2.0 * inter + 1.0) / (sp + sg + 1.0);
}

double bce_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw ShapeError("bce_loss: size mismatch");
  if (pred.empty()) return 0.0;
  constexpr double kClamp = 1e-7;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kClamp, 1.0 - kClamp);
    total -= gt[i] * std::log(p) + (1.0 - gt[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.size());
}

double classification_loss(const Matrix& logits, std::span<const int> labels) {
  if (logits.cols() != 2) throw ShapeError("classification logits must have two columns (leaf, no-object)");
  if (logits.rows() != labels.size()) throw ShapeError("one label per logit row required");
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1) throw RangeError("class label must be 0 or 1");
    const double a = logits(k, 0), b = logits(k, 1);
    const double peak = std::max(a, b);
    const double lse = peak + std::log(std::exp(a - peak) + std::exp(b - peak));
    total += lse - logits(k, static_cast<std::size_t>(labels[k]));
  }
  return total / static_cast<double>(labels.size());
}

void LossWeights::validate() const {
  if (lambda_ce < 0.0 || lambda_dice < 0.0 || lambda_cls < 0.0 || lambda_guide < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
}

double total_loss(const LossComponents& c, const LossWeights& w) {
  w.validate();
  return w.lambda_guide * c.guide_l1 + w.lambda_ce * c.mask_ce + w.lambda_dice * c.mask_dice + w.lambda_cls * c.cls;
}

}  // namespace glk
