#include "glk/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "glk/errors.hpp"

namespace glk {

LabelMap::LabelMap(int width, int height)
    : LabelMap(width, height,
               std::vector<InstanceId>(static_cast<std::size_t>(std::max(width, 0)) *
                                       static_cast<std::size_t>(std::max(height, 0)))) {}

LabelMap::LabelMap(int width, int height, std::vector<InstanceId> ids)
    : width_(width), height_(height), ids_(std::move(ids)) {
  if (width < 1 || height < 1) {
    throw ShapeError("label map dimensions must be positive, got " + std::to_string(width) +
                     "x" + std::to_string(height));
  }
  if (ids_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ShapeError("label map expects " + std::to_string(width * height) + " ids, got " +
                     std::to_string(ids_.size()));
  }
}

SoftMaskStack::SoftMaskStack(std::size_t n, int height, int width)
    : SoftMaskStack(n, height, width,
                    std::vector<double>(n * static_cast<std::size_t>(std::max(height, 0)) *
                                        static_cast<std::size_t>(std::max(width, 0)))) {}

SoftMaskStack::SoftMaskStack(std::size_t n, int height, int width, std::vector<double> values)
    : n_(n), height_(height), width_(width), values_(std::move(values)) {
  if (height < 1 || width < 1) throw ShapeError("mask stack dimensions must be positive");
  if (values_.size() != n * layer_size()) {
    throw ShapeError("mask stack expects " + std::to_string(n * layer_size()) +
                     " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw RangeError("mask value outside [0, 1]");
  }
}

void SoftMaskStack::set(std::size_t k, int x, int y, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw RangeError("mask value outside [0, 1]");
  values_[k * layer_size() + static_cast<std::size_t>(y) * width_ + x] = v;
}

namespace {

class PgmScanner {
 public:
  explicit PgmScanner(std::string_view text) : text_(text) {}

  std::size_t offset() const noexcept { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos_;
      } else {
        return;
      }
    }
  }

  bool at_end() {
    skip_space_and_comments();
    return pos_ >= text_.size();
  }

  std::uint64_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) throw ParseError(std::string("unexpected end of input reading ") + what, pos_);
    std::uint64_t value = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc::result_out_of_range) throw RangeError(std::string(what) + " out of range at byte " + std::to_string(start));
    if (ec != std::errc{} || ptr == first) throw ParseError(std::string("expected ") + what, start);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (pos_ < text_.size() && !is_separator(text_[pos_])) {
      throw ParseError(std::string("malformed ") + what, pos_);
    }
    return value;
  }

  void magic() {
    if (text_.size() < 2 || text_[0] != 'P' || text_[1] != '2') {
      throw ParseError("bad magic, expected \"P2\"", 0);
    }
    pos_ = 2;
    if (pos_ < text_.size() && !is_separator(text_[pos_])) throw ParseError("bad magic, expected \"P2\"", pos_);
  }

 private:
  static bool is_separator(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f' || c == '#';
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

struct ParsedPgm {
  LabelMap map;
  std::uint64_t maxval;
};

ParsedPgm parse_pgm(std::string_view text) {
  PgmScanner scan(text);
  scan.magic();
  const std::size_t dims_at = scan.offset();
  const auto width = scan.number("width");
  const auto height = scan.number("height");
  if (width == 0 || height == 0 || width > (1u << 20) || height > (1u << 20)) {
    throw ParseError("invalid dimensions", dims_at);
  }
  const std::size_t maxval_at = scan.offset();
  const auto maxval = scan.number("maxval");
  if (maxval == 0 || maxval > kMaxStoredId) throw ParseError("maxval must be in [1, 65535]", maxval_at);

  std::vector<InstanceId> ids(width * height);
  for (auto& id : ids) {
    scan.skip_space_and_comments();
    const std::size_t at = scan.offset();
    const auto v = scan.number("pixel value");
    if (v > maxval) {
      throw RangeError("pixel value " + std::to_string(v) + " exceeds maxval " +
                       std::to_string(maxval) + " at byte " + std::to_string(at));
    }
    id = static_cast<InstanceId>(v);
  }
  if (!scan.at_end()) throw ParseError("trailing data after pixel values", scan.offset());
  return {LabelMap(static_cast<int>(width), static_cast<int>(height), std::move(ids)), maxval};
}

}  // namespace

LabelMap parse_labelmap(std::string_view text) { return parse_pgm(text).map; }

std::string format_labelmap(const LabelMap& map) {
  for (InstanceId id : map.ids()) {
    if (id > kMaxStoredId) throw RangeError("id " + std::to_string(id) + " exceeds 65535");
  }
  std::string out = "P2\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n65535\n";
  out.reserve(out.size() + map.size() * 4);
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (x) out += ' ';
      out += std::to_string(map.at(x, y));
    }
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

LabelMap load_labelmap(const std::filesystem::path& path) { return parse_labelmap(read_text_file(path)); }

void save_labelmap(const LabelMap& map, const std::filesystem::path& path) {
  write_text_file(path, format_labelmap(map));
}

std::vector<InstancePixelSet> instances_of(const LabelMap& map) {
  std::vector<InstanceId> present;
  for (InstanceId id : map.ids()) {
    if (id != kBackground) present.push_back(id);
  }
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());

  std::vector<InstancePixelSet> sets(present.size());
  for (std::size_t k = 0; k < present.size(); ++k) sets[k].id = present[k];
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      const InstanceId id = map.at(x, y);
      if (id == kBackground) continue;
      auto it = std::lower_bound(present.begin(), present.end(), id);
      sets[static_cast<std::size_t>(it - present.begin())].pixels.push_back({x, y});
    }
  }
  return sets;
}

InstancePixelSet edge_band(const LabelMap& map, InstanceId id, int radius) {
  if (radius < 1) throw ConfigError("edge band radius must be >= 1");
  InstancePixelSet band{id, {}};
  bool found = false;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (map.at(x, y) != id) continue;
      found = true;
      const int y0 = std::max(0, y - radius), y1 = std::min(map.height() - 1, y + radius);
      const int x0 = std::max(0, x - radius), x1 = std::min(map.width() - 1, x + radius);
      bool edge = false;
      for (int yy = y0; yy <= y1 && !edge; ++yy) {
        for (int xx = x0; xx <= x1; ++xx) {
          if (map.at(xx, yy) != id) {
            edge = true;
            break;
          }
        }
      }
      if (edge) band.pixels.push_back({x, y});
    }
  }
  if (!found) throw NotFoundError("instance " + std::to_string(id) + " not present in label map");
  return band;
}

SoftMaskStack masks_from_labelmap(const LabelMap& map) {
  const auto sets = instances_of(map);
  SoftMaskStack stack(sets.size(), map.height(), map.width());
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const Pixel& p : sets[k].pixels) stack.set(k, p.x, p.y, 1.0);
  }
  return stack;
}

std::vector<InstancePixelSet> masks_to_sets(const SoftMaskStack& masks, double threshold) {
  std::vector<InstancePixelSet> sets(masks.count());
  for (std::size_t k = 0; k < masks.count(); ++k) {
    sets[k].id = static_cast<InstanceId>(k + 1);
    for (int y = 0; y < masks.height(); ++y) {
      for (int x = 0; x < masks.width(); ++x) {
        if (masks.at(k, x, y) >= threshold) sets[k].pixels.push_back({x, y});
      }
    }
  }
  return sets;
}

SoftMaskStack binarize(const SoftMaskStack& masks, double threshold) {
  std::vector<double> values(masks.values().begin(), masks.values().end());
  for (double& v : values) v = v >= threshold ? 1.0 : 0.0;
  return SoftMaskStack(masks.count(), masks.height(), masks.width(), std::move(values));
}

SoftMaskStack load_mask_layers(std::span<const std::filesystem::path> paths) {
  if (paths.empty()) throw ConfigError("no mask layers given");
  std::vector<double> values;
  int width = 0, height = 0;
  for (const auto& path : paths) {
    const ParsedPgm layer = parse_pgm(read_text_file(path));
    if (width == 0) {
      width = layer.map.width();
      height = layer.map.height();
    } else if (layer.map.width() != width || layer.map.height() != height) {
      throw ShapeError("mask layer " + path.string() + " has mismatched dimensions");
    }
    for (InstanceId v : layer.map.ids()) {
      values.push_back(static_cast<double>(v) / static_cast<double>(layer.maxval));
    }
  }
  return SoftMaskStack(paths.size(), height, width, std::move(values));
}

Manifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("manifest " + path.string() + ": " + e.what(), e.byte);
  }
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array()) {
    throw ParseError("manifest " + path.string() + " lacks an \"images\" array", 0);
  }
  Manifest manifest;
  const auto base = path.parent_path();
  for (const auto& item : doc["images"]) {
    if (!item.is_object() || !item.contains("label") || !item["label"].is_string()) {
      throw ParseError("manifest entry without \"label\" string", 0);
    }
    std::filesystem::path label = item["label"].get<std::string>();
    if (label.is_relative()) label = base / label;
    std::string plant_id = item.value("plant_id", label.stem().string());
    manifest.images.push_back({label, std::move(plant_id)});
  }
  return manifest;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& e : manifest.images) {
    images.push_back({{"label", e.label.generic_string()}, {"plant_id", e.plant_id}});
  }
  nlohmann::json doc = {{"images", images}};
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace glk
