#pragma once

// Random fixtures and brute-force reference computations shared by the
// unit and acceptance suites. Nothing here calls the library routine that a
// given oracle is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "glk/data_model.hpp"
#include "glk/guide_bank.hpp"

namespace glk::testing {

/// Map with ids drawn from `ids` (0 included means background is allowed).
inline LabelMap random_labelmap(std::mt19937_64& gen, int width, int height, const std::vector<InstanceId>& ids) {
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  std::vector<InstanceId> v(static_cast<std::size_t>(width) * height);
  for (auto& id : v) id = ids[pick(gen)];
  return LabelMap(width, height, std::move(v));
}

/// Blocky map: `k` instances painted as random axis-aligned rectangles.
inline LabelMap random_blocks(std::mt19937_64& gen, int width, int height, int k) {
  LabelMap m(width, height);
  std::uniform_int_distribution<int> xs(0, width - 1), ys(0, height - 1);
  for (int id = 1; id <= k; ++id) {
    int x0 = xs(gen), x1 = xs(gen), y0 = ys(gen), y1 = ys(gen);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) m.set(x, y, static_cast<InstanceId>(id));
  }
  return m;
}

/// Per-pixel boolean raster of each nonzero id, ascending id.
inline std::vector<std::vector<bool>> rasters(const LabelMap& m) {
  std::set<InstanceId> ids;
  for (InstanceId id : m.ids()) if (id) ids.insert(id);
  std::vector<std::vector<bool>> out;
  for (InstanceId id : ids) {
    std::vector<bool> r(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) r[i] = m.ids()[i] == id;
    out.push_back(std::move(r));
  }
  return out;
}

inline double naive_dice(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    na += a[i];
    nb += b[i];
  }
  return na + nb == 0 ? 0.0 : 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

inline double naive_bd(const std::vector<std::vector<bool>>& a, const std::vector<std::vector<bool>>& b) {
  double sum = 0.0;
  for (const auto& x : a) {
    double best = 0.0;
    for (const auto& y : b) best = std::max(best, naive_dice(x, y));
    sum += best;
  }
  return 100.0 * sum / static_cast<double>(a.size());
}

/// Direct evaluation of the guide mean over the pixels of `id` by scanning the raster.
inline std::vector<double> naive_embedding(const GuideBank& bank, const LabelMap& m, InstanceId id) {
  std::vector<double> e(bank.size(), 0.0);
  std::size_t n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (m.at(x, y) != id) continue;
      ++n;
      for (std::size_t i = 0; i < bank.size(); ++i) {
        const auto& p = bank.params[i];
        e[i] += std::sin(p.freq_x / bank.width * x + p.freq_y / bank.height * y + p.phase);
      }
    }
  }
  for (double& v : e) v /= static_cast<double>(n);
  return e;
}

/// Pairwise hinge loss written straight from the definition.
inline double naive_separation_loss(const GuideBank& bank, const std::vector<LabelMap>& images) {
  double total = 0.0;
  for (const auto& m : images) {
    std::set<InstanceId> ids;
    for (InstanceId id : m.ids()) if (id) ids.insert(id);
    std::vector<std::vector<double>> emb;
    for (InstanceId id : ids) emb.push_back(naive_embedding(bank, m, id));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < emb.size(); ++a) {
      for (std::size_t b = a + 1; b < emb.size(); ++b) {
        double d = 0.0;
        for (std::size_t i = 0; i < bank.size(); ++i) d += std::abs(emb[a][i] - emb[b][i]);
        sum += std::max(0.0, bank.epsilon - d);
        ++pairs;
      }
    }
    if (pairs) total += sum / static_cast<double>(pairs);
  }
  return total;
}

inline double& param_ref(GuideBank& bank, std::size_t k) {
  auto& p = bank.params[k / 3];
  return k % 3 == 0 ? p.freq_x : (k % 3 == 1 ? p.freq_y : p.phase);
}

/// Central finite difference of the naive loss with respect to flat parameter k.
inline double fd_gradient(const GuideBank& bank, const std::vector<LabelMap>& images, std::size_t k, double h) {
  GuideBank plus = bank, minus = bank;
  param_ref(plus, k) += h;
  param_ref(minus, k) -= h;
  return (naive_separation_loss(plus, images) - naive_separation_loss(minus, images)) / (2.0 * h);
}

/// Smallest distance of any hinge argument or L1 term from its kink,
/// used to keep finite-difference probes away from non-smooth points.
inline double kink_margin(const GuideBank& bank, const std::vector<LabelMap>& images) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& m : images) {
    std::set<InstanceId> ids;
    for (InstanceId id : m.ids()) if (id) ids.insert(id);
    std::vector<std::vector<double>> emb;
    for (InstanceId id : ids) emb.push_back(naive_embedding(bank, m, id));
    for (std::size_t a = 0; a < emb.size(); ++a) {
      for (std::size_t b = a + 1; b < emb.size(); ++b) {
        double d = 0.0;
        for (std::size_t i = 0; i < bank.size(); ++i) {
          d += std::abs(emb[a][i] - emb[b][i]);
          margin = std::min(margin, std::abs(emb[a][i] - emb[b][i]));
        }
        margin = std::min(margin, std::abs(bank.epsilon - d));
      }
    }
  }
  return margin;
}

inline std::string file_bytes(const std::filesystem::path& p) { return read_text_file(p); }

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("glk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace glk::testing
