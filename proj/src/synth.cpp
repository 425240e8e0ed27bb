#include "glk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <optional>

#include "glk/errors.hpp"
#include "glk/parallel.hpp"
#include "glk/rng.hpp"

namespace glk {

void RosetteConfig::validate() const {
  if (width < 32 || height < 32) throw ConfigError("rosette images must be at least 32x32");
  if (n_min < 1 || n_min > n_max) throw ConfigError("leaf count range must satisfy 1 <= n_min <= n_max");
  if (!(growth > 0.0)) throw ConfigError("growth factor must be positive");
  if (!(aspect_min > 0.0 && aspect_min <= aspect_max && aspect_max <= 1.0)) {
    throw ConfigError("aspect ratio range must satisfy 0 < min <= max <= 1");
  }
  if (!(center_jitter >= 0.0)) throw ConfigError("centre jitter must be non-negative");
  if (!(reach > 0.0 && reach <= 1.0)) throw ConfigError("reach must be in (0, 1]");
  if (!std::isfinite(phyllotaxis)) throw ConfigError("phyllotaxis angle must be finite");
}

bool PlantSample::has_occluded_leaf() const {
  for (std::size_t k = 0; k < visible_area.size(); ++k) {
    if (visible_area[k] < drawn_area[k]) return true;
  }
  return false;
}

namespace {

constexpr std::size_t kMinVisible = 8;
constexpr int kMaxAttempts = 16;

struct Leaf {
  double cx, cy;  // ellipse centre
  double ux, uy;  // unit major axis
  double half_length, half_width;
};

template <typename Fn>
void rasterize(const Leaf& leaf, int width, int height, Fn&& fn) {
  const double r = leaf.half_length + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(leaf.cx - r)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(leaf.cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(leaf.cy - r)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(leaf.cy + r)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - leaf.cx, dy = y - leaf.cy;
      const double along = (dx * leaf.ux + dy * leaf.uy) / leaf.half_length;
      const double across = (-dx * leaf.uy + dy * leaf.ux) / leaf.half_width;
      if (along * along + across * across <= 1.0) fn(x, y);
    }
  }
}

std::optional<PlantSample> attempt(const RosetteConfig& cfg, Rng& rng) {
  const int n = static_cast<int>(rng.uniform_int(cfg.n_min, cfg.n_max));
  const double cx = 0.5 * (cfg.width - 1) + rng.uniform(-cfg.center_jitter, cfg.center_jitter);
  const double cy = 0.5 * (cfg.height - 1) + rng.uniform(-cfg.center_jitter, cfg.center_jitter);
  const double outer = cfg.reach * std::min(cfg.width, cfg.height) * rng.uniform(0.85, 1.0);
  const double start_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);

  std::vector<Leaf> leaves;
  for (int k = 0; k < n; ++k) {
    const double length = outer * std::pow(cfg.growth, k - (n - 1)) * rng.uniform(0.92, 1.08);
    const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
    const double angle = start_angle + k * cfg.phyllotaxis + rng.uniform(-0.1, 0.1);
    const double ux = std::cos(angle), uy = std::sin(angle);
    const double offset = 0.5 * length + 0.04 * length;
    leaves.push_back({cx + offset * ux, cy + offset * uy, ux, uy, 0.5 * length, std::max(0.5 * length * aspect, 1.0)});
  }

  LabelMap labels(cfg.width, cfg.height);
  std::vector<std::size_t> drawn(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    const auto id = static_cast<InstanceId>(k + 1);
    rasterize(leaves[static_cast<std::size_t>(k)], cfg.width, cfg.height, [&](int x, int y) {
      ++drawn[static_cast<std::size_t>(k)];
      if (cfg.occlusion || labels.at(x, y) == kBackground) labels.set(x, y, id);
    });
  }

  std::vector<std::size_t> visible(static_cast<std::size_t>(n) + 1, 0);
  for (InstanceId id : labels.ids()) ++visible[id];

  std::vector<InstanceId> remap(static_cast<std::size_t>(n) + 1, kBackground);
  PlantSample sample{LabelMap(cfg.width, cfg.height), {}, {}, {}};
  InstanceId next = 1;
  for (int k = 0; k < n; ++k) {
    const std::size_t vis = visible[static_cast<std::size_t>(k) + 1];
    if (vis < kMinVisible) continue;
    remap[static_cast<std::size_t>(k) + 1] = next++;
    sample.whorl.push_back(k);
    // Without occlusion a leaf loses pixels to earlier ones instead.
    sample.drawn_area.push_back(drawn[static_cast<std::size_t>(k)]);
    sample.visible_area.push_back(vis);
  }
  if (static_cast<int>(sample.whorl.size()) < cfg.n_min) return std::nullopt;
  for (int y = 0; y < cfg.height; ++y) {
    for (int x = 0; x < cfg.width; ++x) sample.labels.set(x, y, remap[labels.at(x, y)]);
  }
  return sample;
}

}  // namespace

PlantSample generate_plant_detailed(const RosetteConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  for (int a = 0; a < kMaxAttempts; ++a) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(a)));
    if (auto sample = attempt(cfg, rng)) return std::move(*sample);
  }
  throw GenerationError("could not place " + std::to_string(cfg.n_min) + " leaves with >= 8 visible pixels after " +
                        std::to_string(kMaxAttempts) + " attempts");
}

LabelMap generate_plant(const RosetteConfig& cfg, std::uint64_t seed) {
  return generate_plant_detailed(cfg, seed).labels;
}

std::uint64_t plant_seed(const RosetteConfig& cfg, std::size_t index) {
  return derive_seed(cfg.seed ^ 0x5EED5EED5EED5EEDULL, index);
}

std::filesystem::path generate_dataset(const RosetteConfig& cfg, std::size_t count, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<std::optional<LabelMap>> plants(count);
  parallel_for(count, [&](std::size_t i) { plants[i] = generate_plant(cfg, plant_seed(cfg, i)); });

  Manifest manifest;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "plant_%04zu", i + 1);
    const std::string file = std::string(name) + ".pgm";
    save_labelmap(*plants[i], out_dir / file);
    manifest.images.push_back({file, name});
  }
  const auto path = out_dir / "manifest.json";
  save_manifest(manifest, path);
  return path;
}

void PerturbSpec::validate() const {
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0) || !(merge_prob >= 0.0 && merge_prob <= 1.0)) {
    throw ConfigError("perturbation probabilities must be in [0, 1]");
  }
  if (boundary_radius < 0) throw ConfigError("boundary radius must be non-negative");
}

namespace {

std::vector<std::uint8_t> morph(const std::vector<std::uint8_t>& mask, int width, int height, int radius, bool dilate) {
  std::vector<std::uint8_t> out(mask.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      bool hit = !dilate;
      for (int yy = y - radius; yy <= y + radius; ++yy) {
        for (int xx = x - radius; xx <= x + radius; ++xx) {
          // Outside the image counts as background for erosion.
          const bool inside = xx >= 0 && yy >= 0 && xx < width && yy < height;
          const bool on = inside && mask[static_cast<std::size_t>(yy) * width + xx];
          if (dilate && on) hit = true;
          if (!dilate && !on) hit = false;
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = hit ? 1 : 0;
    }
  }
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

SoftMaskStack perturb(const LabelMap& map, const PerturbSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto inst = instances_of(map);
  const std::size_t n = inst.size();
  const int width = map.width(), height = map.height();

  std::vector<bool> kept(n);
  for (std::size_t k = 0; k < n; ++k) kept[k] = !rng.bernoulli(spec.drop_prob);

  auto index_of = [&](InstanceId id) -> std::size_t {
    auto it = std::lower_bound(inst.begin(), inst.end(), id, [](const InstancePixelSet& s, InstanceId v) { return s.id < v; });
    return static_cast<std::size_t>(it - inst.begin());
  };

  std::vector<std::pair<std::size_t, std::size_t>> adjacent;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const InstanceId a = map.at(x, y);
      if (a == kBackground) continue;
      const InstanceId right = x + 1 < width ? map.at(x + 1, y) : kBackground;
      const InstanceId down = y + 1 < height ? map.at(x, y + 1) : kBackground;
      for (InstanceId b : {right, down}) {
        if (b == kBackground || b == a) continue;
        const std::size_t i = index_of(a), j = index_of(b);
        adjacent.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  }
  std::sort(adjacent.begin(), adjacent.end());
  adjacent.erase(std::unique(adjacent.begin(), adjacent.end()), adjacent.end());

  DisjointSets groups(n);
  for (const auto& [i, j] : adjacent) {
    const bool merge = rng.bernoulli(spec.merge_prob);
    if (merge && kept[i] && kept[j]) groups.unite(i, j);
  }

  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<std::size_t> root_slot(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!kept[k]) continue;
    const std::size_t root = groups.find(k);
    if (root_slot[root] == n) {
      root_slot[root] = masks.size();
      masks.emplace_back(map.size(), 0);
    }
    auto& m = masks[root_slot[root]];
    for (const Pixel& p : inst[k].pixels) m[static_cast<std::size_t>(p.y) * width + p.x] = 1;
  }

  std::vector<double> values;
  std::size_t count = 0;
  for (auto& m : masks) {
    if (spec.boundary_radius > 0) {
      const bool dilate = rng.bernoulli(0.5);
      m = morph(m, width, height, spec.boundary_radius, dilate);
    }
    if (std::none_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; })) continue;
    ++count;
    for (std::uint8_t v : m) values.push_back(v ? 1.0 : 0.0);
  }
  return SoftMaskStack(count, height, width, std::move(values));
}

LabelMap stack_to_labelmap(const SoftMaskStack& masks, double threshold) {
  LabelMap out(masks.width(), masks.height());
  for (std::size_t k = 0; k < masks.count(); ++k) {
    for (int y = 0; y < masks.height(); ++y) {
      for (int x = 0; x < masks.width(); ++x) {
        if (masks.at(k, x, y) >= threshold) out.set(x, y, static_cast<InstanceId>(k + 1));
      }
    }
  }
  return out;
}

}  // namespace glk
