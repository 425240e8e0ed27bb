#include "glk/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>

#include <json.hpp>

#include "glk/errors.hpp"
#include "glk/parallel.hpp"

namespace glk {

namespace {

using Keys = std::vector<std::uint64_t>;

Keys sorted_keys(const InstancePixelSet& s) {
  Keys keys;
  keys.reserve(s.pixels.size());
  for (const Pixel& p : s.pixels) {
    keys.push_back((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.y)) << 32) |
                   static_cast<std::uint32_t>(p.x));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::size_t intersection_size(const Keys& a, const Keys& b) {
  std::size_t n = 0;
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double dice_keys(const Keys& a, const Keys& b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 0.0;
  return 2.0 * static_cast<double>(intersection_size(a, b)) / static_cast<double>(total);
}

std::vector<Keys> all_keys(const MaskSet& set) {
  std::vector<Keys> out;
  out.reserve(set.size());
  for (const auto& s : set) out.push_back(sorted_keys(s));
  return out;
}

double best_dice_keys(const std::vector<Keys>& from, const std::vector<Keys>& to) {
  if (from.empty()) throw UndefinedMetricError("best dice of an empty mask set is undefined");
  double sum = 0.0;
  for (const auto& a : from) {
    double best = 0.0;
    for (const auto& b : to) best = std::max(best, dice_keys(a, b));
    sum += best;
  }
  return 100.0 * sum / static_cast<double>(from.size());
}

ImageScore score_image(const std::string& image, const MaskSet& pred, const MaskSet& gt) {
  ImageScore s;
  s.image = image;
  s.dic = dic(pred, gt);
  try {
    const auto pk = all_keys(pred);
    const auto gk = all_keys(gt);
    if (pk.empty() || gk.empty()) {
      throw UndefinedMetricError(pk.empty() ? "prediction set is empty" : "ground-truth set is empty");
    }
    s.bd = best_dice_keys(pk, gk);
    s.sbd = std::min(s.bd, best_dice_keys(gk, pk));
    s.defined = true;
  } catch (const UndefinedMetricError& e) {
    s.defined = false;
    s.error = e.what();
  }
  return s;
}

AggregateScore aggregate(const std::vector<ImageScore>& scores) {
  AggregateScore agg;
  for (const auto& s : scores) {
    if (!s.defined) continue;
    ++agg.images;
    agg.bd += s.bd;
    agg.sbd += s.sbd;
    agg.dic += static_cast<double>(s.dic);
  }
  if (agg.images == 0) {
    agg.bd = agg.sbd = agg.dic = std::nan("");
  } else {
    const double n = static_cast<double>(agg.images);
    agg.bd /= n;
    agg.sbd /= n;
    agg.dic /= n;
  }
  return agg;
}

MaskSet non_empty(const MaskSet& set) {
  MaskSet out;
  for (const auto& s : set) {
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

}  // namespace

double dice(const InstancePixelSet& a, const InstancePixelSet& b) { return dice_keys(sorted_keys(a), sorted_keys(b)); }

double best_dice(const MaskSet& from, const MaskSet& to) { return best_dice_keys(all_keys(from), all_keys(to)); }

double sbd(const MaskSet& pred, const MaskSet& gt) {
  if (pred.empty() || gt.empty()) throw UndefinedMetricError("symmetric best dice needs two non-empty mask sets");
  const auto pk = all_keys(pred);
  const auto gk = all_keys(gt);
  return std::min(best_dice_keys(pk, gk), best_dice_keys(gk, pk));
}

std::size_t dic(const MaskSet& pred, const MaskSet& gt) {
  return pred.size() > gt.size() ? pred.size() - gt.size() : gt.size() - pred.size();
}

void SizeThresholds::validate() const {
  if (small_max == 0 || small_max >= medium_max) throw ConfigError("size thresholds need 0 < small_max < medium_max");
}

const char* to_string(SizeCategory c) {
  switch (c) {
    case SizeCategory::kSmall: return "small";
    case SizeCategory::kMedium: return "medium";
    case SizeCategory::kLarge: return "large";
  }
  return "unknown";
}

SizeCategory categorize(std::size_t area, const SizeThresholds& t) {
  if (area <= t.small_max) return SizeCategory::kSmall;
  if (area <= t.medium_max) return SizeCategory::kMedium;
  return SizeCategory::kLarge;
}

SizePartition size_partition(const MaskSet& gt, const SizeThresholds& t) {
  t.validate();
  SizePartition out;
  for (const auto& s : gt) {
    if (s.empty()) continue;
    switch (categorize(s.area(), t)) {
      case SizeCategory::kSmall: out.small.push_back(s); break;
      case SizeCategory::kMedium: out.medium.push_back(s); break;
      case SizeCategory::kLarge: out.large.push_back(s); break;
    }
  }
  return out;
}

MetricsReport evaluate_dataset(std::span<const EvalPair> pairs, std::optional<SizeThresholds> thresholds) {
  if (thresholds) thresholds->validate();
  MetricsReport report;
  report.thresholds = thresholds;
  report.per_image.resize(pairs.size());

  constexpr SizeCategory kCats[3] = {SizeCategory::kSmall, SizeCategory::kMedium, SizeCategory::kLarge};
  // [image][category] -> score, empty optional when the image has no GT leaf there.
  std::vector<std::array<std::optional<ImageScore>, 3>> by_cat(pairs.size());

  parallel_for(pairs.size(), [&](std::size_t i) {
    const auto& pair = pairs[i];
    const MaskSet gt = instances_of(pair.gt);
    const MaskSet pred = non_empty(pair.pred);
    report.per_image[i] = score_image(pair.image, pred, gt);
    if (!thresholds) return;

    const auto gk = all_keys(gt);
    std::array<MaskSet, 3> gt_bins, pred_bins;
    for (const auto& s : gt) gt_bins[static_cast<int>(categorize(s.area(), *thresholds))].push_back(s);
    for (const auto& p : pred) {
      const Keys pk = sorted_keys(p);
      double best = 0.0;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < gk.size(); ++j) {
        const double d = dice_keys(pk, gk[j]);
        if (d > best) {
          best = d;
          best_j = j;
        }
      }
      const std::size_t area = best > 0.0 ? gt[best_j].area() : p.area();
      pred_bins[static_cast<int>(categorize(area, *thresholds))].push_back(p);
    }
    for (int c = 0; c < 3; ++c) {
      if (gt_bins[c].empty()) continue;
      ImageScore s;
      if (pred_bins[c].empty()) {
        s.image = pair.image;
        s.defined = true;
        s.dic = gt_bins[c].size();
      } else {
        s = score_image(pair.image, pred_bins[c], gt_bins[c]);
      }
      by_cat[i][c] = std::move(s);
    }
  });

  report.aggregate = aggregate(report.per_image);
  if (thresholds) {
    for (int c = 0; c < 3; ++c) {
      CategoryReport cat{kCats[c], {}, {}};
      for (auto& row : by_cat) {
        if (row[c]) cat.per_image.push_back(std::move(*row[c]));
      }
      cat.aggregate = aggregate(cat.per_image);
      report.categories.push_back(std::move(cat));
    }
  }
  return report;
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

nlohmann::ordered_json score_json(const ImageScore& s) {
  nlohmann::ordered_json j;
  j["image"] = s.image;
  j["defined"] = s.defined;
  if (s.defined) {
    j["bd"] = s.bd;
    j["sbd"] = s.sbd;
  } else {
    j["bd"] = nullptr;
    j["sbd"] = nullptr;
    j["error"] = s.error;
  }
  j["dic"] = s.dic;
  return j;
}

nlohmann::ordered_json aggregate_json(const AggregateScore& a) {
  nlohmann::ordered_json j;
  j["images"] = a.images;
  j["bd"] = number_or_null(a.bd);
  j["sbd"] = number_or_null(a.sbd);
  j["dic"] = number_or_null(a.dic);
  return j;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void csv_rows(std::string& out, const std::vector<ImageScore>& rows, const char* category) {
  for (const auto& s : rows) {
    out += s.image + ",";
    out += s.defined ? fixed(s.bd, 6) : "undefined";
    out += ",";
    out += s.defined ? fixed(s.sbd, 6) : "undefined";
    out += "," + std::to_string(s.dic);
    if (category) out += std::string(",") + category;
    out += "\n";
  }
}

}  // namespace

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json doc;
  doc["aggregate"] = aggregate_json(report.aggregate);
  nlohmann::ordered_json images = nlohmann::ordered_json::array();
  for (const auto& s : report.per_image) images.push_back(score_json(s));
  doc["per_image"] = images;
  if (report.thresholds) {
    doc["thresholds"] = {{"small_max", report.thresholds->small_max}, {"medium_max", report.thresholds->medium_max}};
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (const auto& c : report.categories) {
      nlohmann::ordered_json cj;
      cj["category"] = to_string(c.category);
      cj["aggregate"] = aggregate_json(c.aggregate);
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (const auto& s : c.per_image) rows.push_back(score_json(s));
      cj["per_image"] = rows;
      cats.push_back(cj);
    }
    doc["categories"] = cats;
  }
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const MetricsReport& report) {
  const bool with_cat = report.thresholds.has_value();
  std::string out = with_cat ? "image,bd,sbd,dic,category\n" : "image,bd,sbd,dic\n";
  csv_rows(out, report.per_image, with_cat ? "all" : nullptr);
  for (const auto& c : report.categories) csv_rows(out, c.per_image, to_string(c.category));
  return out;
}

std::string aggregate_line(const AggregateScore& agg) {
  return "BD=" + fixed(agg.bd, 2) + " SBD=" + fixed(agg.sbd, 2) + " DiC=" + fixed(agg.dic, 2);
}

}  // namespace glk
