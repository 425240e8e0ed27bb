#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glk/data_model.hpp"

namespace glk {

using MaskSet = std::vector<InstancePixelSet>;

/// 2|a n b| / (|a| + |b|), 0 when both are empty.
double dice(const InstancePixelSet& a, const InstancePixelSet& b);

/// Mean over masks of `from` of the best Dice against `to`, on a 0-100 scale.
/// Throws UndefinedMetricError when `from` is empty; an empty `to` scores 0.
double best_dice(const MaskSet& from, const MaskSet& to);

/// min(BD(pred, gt), BD(gt, pred)). Throws UndefinedMetricError if either is empty.
double sbd(const MaskSet& pred, const MaskSet& gt);

std::size_t dic(const MaskSet& pred, const MaskSet& gt);

/// Area bounds (pixels) for small (0, small_max], medium (small_max,
/// medium_max] and large (medium_max, inf) leaves.
struct SizeThresholds {
  std::size_t small_max = 144;
  std::size_t medium_max = 576;

  void validate() const;
  static SizeThresholds msu() { return {12 * 12, 24 * 24}; }
  static SizeThresholds komatsuna() { return {35 * 35, 56 * 56}; }
};

enum class SizeCategory { kSmall, kMedium, kLarge };
const char* to_string(SizeCategory c);
SizeCategory categorize(std::size_t area, const SizeThresholds& t);

struct SizePartition {
  MaskSet small;
  MaskSet medium;
  MaskSet large;
};

SizePartition size_partition(const MaskSet& gt, const SizeThresholds& t);

struct EvalPair {
  std::string image;
  MaskSet pred;
  LabelMap gt;
};

struct ImageScore {
  std::string image;
  bool defined = false;
  std::string error;
  double bd = 0.0;
  double sbd = 0.0;
  std::size_t dic = 0;
};

struct AggregateScore {
  std::size_t images = 0;  // defined images contributing to the means
  double bd = 0.0;
  double sbd = 0.0;
  double dic = 0.0;
};

struct CategoryReport {
  SizeCategory category;
  std::vector<ImageScore> per_image;  // only images with GT leaves in the category
  AggregateScore aggregate;
};

struct MetricsReport {
  std::vector<ImageScore> per_image;
  AggregateScore aggregate;
  std::optional<SizeThresholds> thresholds;
  std::vector<CategoryReport> categories;
};

/// Per-image BD(pred, gt), SBD and |DiC| with arithmetic means over the
/// defined images. Images whose metrics are undefined are kept in
/// per_image with defined = false and skipped by the means.
///
/// With thresholds, each GT leaf is binned by area and each prediction goes
/// to the bin of its best-matching GT leaf (lowest GT index on ties); a
/// prediction overlapping no GT leaf is binned by its own area. An image
/// with GT leaves in a bin but no predictions there scores BD = SBD = 0.
MetricsReport evaluate_dataset(std::span<const EvalPair> pairs, std::optional<SizeThresholds> thresholds = std::nullopt);

std::string report_to_json(const MetricsReport& report);
/// "image,bd,sbd,dic[,category]"; category rows follow the overall rows.
std::string report_to_csv(const MetricsReport& report);
/// "BD=<x> SBD=<y> DiC=<z>" with two decimals.
std::string aggregate_line(const AggregateScore& agg);

}  // namespace glk
