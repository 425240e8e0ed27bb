#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glk {

/// Integer pixel coordinate. x is the column, y the row, origin top-left.
struct Pixel {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

using InstanceId = std::uint32_t;

inline constexpr InstanceId kBackground = 0;
inline constexpr InstanceId kMaxStoredId = 65535;

/// Hard partition of a W x H raster into instance ids (0 = background).
class LabelMap {
 public:
  LabelMap(int width, int height);
  LabelMap(int width, int height, std::vector<InstanceId> ids);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return ids_.size(); }

  InstanceId at(int x, int y) const { return ids_[index(x, y)]; }
  void set(int x, int y, InstanceId id) { ids_[index(x, y)] = id; }

  std::span<const InstanceId> ids() const noexcept { return ids_; }
  bool contains(int x, int y) const noexcept {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<InstanceId> ids_;
};

/// Pixels of one instance, in row-major scan order.
struct InstancePixelSet {
  InstanceId id = 0;
  std::vector<Pixel> pixels;

  std::size_t area() const noexcept { return pixels.size(); }
  bool empty() const noexcept { return pixels.empty(); }
};

/// n soft masks on a shared height x width grid, values in [0, 1].
/// Layout is (mask, y, x).
class SoftMaskStack {
 public:
  SoftMaskStack(std::size_t n, int height, int width);
  SoftMaskStack(std::size_t n, int height, int width, std::vector<double> values);

  std::size_t count() const noexcept { return n_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t layer_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  std::span<const double> layer(std::size_t k) const {
    return std::span<const double>(values_).subspan(k * layer_size(), layer_size());
  }
  double at(std::size_t k, int x, int y) const {
    return values_[k * layer_size() + static_cast<std::size_t>(y) * width_ + x];
  }
  void set(std::size_t k, int x, int y, double v);

  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t n_;
  int height_;
  int width_;
  std::vector<double> values_;
};

LabelMap parse_labelmap(std::string_view text);
std::string format_labelmap(const LabelMap& map);

LabelMap load_labelmap(const std::filesystem::path& path);
void save_labelmap(const LabelMap& map, const std::filesystem::path& path);

/// One entry per nonzero id present, ascending id.
std::vector<InstancePixelSet> instances_of(const LabelMap& map);

/// Pixels of `id` within Chebyshev distance `radius` of a pixel carrying a
/// different id. The image border is not a boundary.
InstancePixelSet edge_band(const LabelMap& map, InstanceId id, int radius);

/// Binary stack with one layer per instance of `map`, ascending id.
SoftMaskStack masks_from_labelmap(const LabelMap& map);

/// Layer k -> pixels with value >= threshold. Layers left empty are kept as
/// empty sets so indices line up with the stack.
std::vector<InstancePixelSet> masks_to_sets(const SoftMaskStack& masks, double threshold = 0.5);

SoftMaskStack binarize(const SoftMaskStack& masks, double threshold = 0.5);

/// Soft mask from a grey PGM: value / maxval.
SoftMaskStack load_mask_layers(std::span<const std::filesystem::path> paths);

struct ManifestEntry {
  std::filesystem::path label;
  std::string plant_id;
};

struct Manifest {
  std::vector<ManifestEntry> images;
};

/// Relative label paths resolve against the manifest's directory.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace glk
