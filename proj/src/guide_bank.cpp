#include "glk/guide_bank.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "glk/errors.hpp"
#include "glk/parallel.hpp"
#include "glk/rng.hpp"

namespace glk {

void GuideBank::validate() const {
  if (params.empty()) throw ConfigError("guide bank needs at least one guide");
  if (width < 1 || height < 1) throw ConfigError("guide bank reference size must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("separation margin must be positive");
  for (const auto& p : params) {
    if (!std::isfinite(p.freq_x) || !std::isfinite(p.freq_y) || !std::isfinite(p.phase)) {
      throw ConfigError("guide parameters must be finite");
    }
  }
}

double eval_guide(const GuideParams& p, double x, double y, double width, double height) noexcept {
  return std::sin(p.freq_x * x / width + p.freq_y * y / height + p.phase);
}

double instance_expectation(const GuideParams& p, const InstancePixelSet& s, int width, int height) {
  if (s.empty()) throw EmptyInstanceError("instance " + std::to_string(s.id) + " has no pixels");
  double sum = 0.0;
  for (const Pixel& px : s.pixels) sum += eval_guide(p, px.x, px.y, width, height);
  return sum / static_cast<double>(s.pixels.size());
}

GuidedEmbedding guided_embedding(const GuideBank& bank, const InstancePixelSet& s) {
  GuidedEmbedding e;
  e.values.reserve(bank.size());
  for (const auto& p : bank.params) e.values.push_back(instance_expectation(p, s, bank.width, bank.height));
  return e;
}

double soft_instance_expectation(const GuideParams& p, std::span<const double> mask, int width, int height) {
  if (mask.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ShapeError("mask layer size does not match width x height");
  }
  double mass = 0.0, weighted = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double m = mask[static_cast<std::size_t>(y) * width + x];
      if (m == 0.0) continue;
      mass += m;
      weighted += m * eval_guide(p, x, y, width, height);
    }
  }
  if (mass < 1e-6) return 0.0;
  return weighted / mass;
}

GuideDataset::GuideDataset(std::span<const LabelMap> images) {
  images_.reserve(images.size());
  for (const auto& m : images) images_.push_back(instances_of(m));
}

std::size_t GuideDataset::pair_count() const noexcept {
  std::size_t total = 0;
  for (const auto& inst : images_) total += inst.size() * (inst.size() - (inst.empty() ? 0 : 1)) / 2;
  return total;
}

namespace {

// Per-instance means needed by the loss and its gradient, guide-major:
// mean sin, mean cos * x / W, mean cos * y / H, mean cos.
struct InstanceStats {
  std::vector<double> value;
  std::vector<double> d_freq_x;
  std::vector<double> d_freq_y;
  std::vector<double> d_phase;
};

InstanceStats instance_stats(const GuideBank& bank, const InstancePixelSet& s, bool with_grad) {
  const std::size_t d = bank.size();
  InstanceStats st{std::vector<double>(d), {}, {}, {}};
  if (with_grad) {
    st.d_freq_x.assign(d, 0.0);
    st.d_freq_y.assign(d, 0.0);
    st.d_phase.assign(d, 0.0);
  }
  const double w = bank.width, h = bank.height;
  const double inv_n = 1.0 / static_cast<double>(s.pixels.size());
  for (std::size_t i = 0; i < d; ++i) {
    const auto& p = bank.params[i];
    const double ax = p.freq_x / w, ay = p.freq_y / h;
    double sum_sin = 0.0, sum_cx = 0.0, sum_cy = 0.0, sum_c = 0.0;
    for (const Pixel& px : s.pixels) {
      const double theta = ax * px.x + ay * px.y + p.phase;
      sum_sin += std::sin(theta);
      if (with_grad) {
        const double c = std::cos(theta);
        sum_c += c;
        sum_cx += c * px.x;
        sum_cy += c * px.y;
      }
    }
    st.value[i] = sum_sin * inv_n;
    if (with_grad) {
      st.d_freq_x[i] = sum_cx * inv_n / w;
      st.d_freq_y[i] = sum_cy * inv_n / h;
      st.d_phase[i] = sum_c * inv_n;
    }
  }
  return st;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

LossAndGradient image_loss(const GuideBank& bank, const std::vector<InstancePixelSet>& inst, bool with_grad) {
  const std::size_t d = bank.size();
  LossAndGradient out{0.0, with_grad ? std::vector<GuideParams>(d) : std::vector<GuideParams>{}};
  const std::size_t k = inst.size();
  if (k < 2) return out;

  std::vector<InstanceStats> stats;
  stats.reserve(k);
  for (const auto& s : inst) stats.push_back(instance_stats(bank, s, with_grad));

  const double inv_pairs = 2.0 / static_cast<double>(k * (k - 1));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double dist = 0.0;
      for (std::size_t i = 0; i < d; ++i) dist += std::abs(stats[a].value[i] - stats[b].value[i]);
      const double gap = bank.epsilon - dist;
      if (!(gap > 0.0)) continue;
      out.loss += gap * inv_pairs;
      if (!with_grad) continue;
      for (std::size_t i = 0; i < d; ++i) {
        const double s = -sign(stats[a].value[i] - stats[b].value[i]) * inv_pairs;
        if (s == 0.0) continue;
        out.grad[i].freq_x += s * (stats[a].d_freq_x[i] - stats[b].d_freq_x[i]);
        out.grad[i].freq_y += s * (stats[a].d_freq_y[i] - stats[b].d_freq_y[i]);
        out.grad[i].phase += s * (stats[a].d_phase[i] - stats[b].d_phase[i]);
      }
    }
  }
  return out;
}

LossAndGradient dataset_loss(const GuideBank& bank, const GuideDataset& data, bool with_grad) {
  std::vector<LossAndGradient> parts(data.image_count());
  parallel_for(data.image_count(), [&](std::size_t i) { parts[i] = image_loss(bank, data.instances(i), with_grad); });

  LossAndGradient total{0.0, with_grad ? std::vector<GuideParams>(bank.size()) : std::vector<GuideParams>{}};
  for (const auto& part : parts) {
    total.loss += part.loss;
    if (!with_grad) continue;
    for (std::size_t i = 0; i < bank.size(); ++i) {
      total.grad[i].freq_x += part.grad[i].freq_x;
      total.grad[i].freq_y += part.grad[i].freq_y;
      total.grad[i].phase += part.grad[i].phase;
    }
  }
  return total;
}

}  // namespace

double separation_loss(const GuideBank& bank, const GuideDataset& data) {
  return dataset_loss(bank, data, false).loss;
}

double separation_loss(const GuideBank& bank, std::span<const LabelMap> images) {
  return separation_loss(bank, GuideDataset(images));
}

LossAndGradient separation_loss_and_grad(const GuideBank& bank, const GuideDataset& data) {
  return dataset_loss(bank, data, true);
}

std::vector<GuideParams> separation_loss_grad(const GuideBank& bank, std::span<const LabelMap> images) {
  return separation_loss_and_grad(bank, GuideDataset(images)).grad;
}

std::vector<double> pair_distances(const GuideBank& bank, const GuideDataset& data) {
  std::vector<double> out;
  for (std::size_t img = 0; img < data.image_count(); ++img) {
    const auto& inst = data.instances(img);
    std::vector<GuidedEmbedding> emb;
    for (const auto& s : inst) emb.push_back(guided_embedding(bank, s));
    for (std::size_t a = 0; a < emb.size(); ++a) {
      for (std::size_t b = a + 1; b < emb.size(); ++b) {
        double dist = 0.0;
        for (std::size_t i = 0; i < bank.size(); ++i) dist += std::abs(emb[a].values[i] - emb[b].values[i]);
        out.push_back(dist);
      }
    }
  }
  return out;
}

GuideBank init_guides(std::size_t d_g, int width, int height, double epsilon, std::uint64_t seed) {
  if (d_g == 0 || d_g % 2 != 0) throw ConfigError("number of guides must be even and positive, got " + std::to_string(d_g));
  GuideBank bank;
  bank.width = width;
  bank.height = height;
  bank.epsilon = epsilon;
  bank.params.resize(d_g);
  Rng rng(seed);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < d_g; ++i) {
    auto& p = bank.params[i];
    const double freq = rng.uniform(0.0, 50.0);
    p.phase = rng.uniform(0.0, kTwoPi);
    if (i < d_g / 2) {
      p.freq_x = freq;
    } else {
      p.freq_y = freq;
    }
  }
  bank.validate();
  return bank;
}

void GuideTrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

TrainResult train_guides(std::span<const LabelMap> images, const GuideTrainConfig& cfg, const GuideBank& init) {
  cfg.validate();
  init.validate();
  const GuideDataset data(images);
  if (data.pair_count() == 0) throw DegenerateDatasetError("no image has two or more instances");

  const std::size_t n = init.size() * 3;
  auto flat = [](GuideParams& p, std::size_t j) -> double& {
    return j == 0 ? p.freq_x : (j == 1 ? p.freq_y : p.phase);
  };

  GuideBank bank = init;
  std::vector<double> m(n, 0.0), v(n, 0.0);
  TrainResult result{init, {}, 0};
  result.history.reserve(cfg.epochs);
  double best = std::numeric_limits<double>::infinity();
  double beta1_t = 1.0, beta2_t = 1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto [loss, grad] = separation_loss_and_grad(bank, data);
    result.history.push_back(loss);
    if (loss < best) {
      best = loss;
      result.bank = bank;
      result.best_epoch = epoch;
    }

    beta1_t *= cfg.beta1;
    beta2_t *= cfg.beta2;
    for (std::size_t i = 0; i < bank.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const std::size_t k = i * 3 + j;
        double& theta = flat(bank.params[i], j);
        const double g = flat(grad[i], j);
        theta -= cfg.learning_rate * cfg.weight_decay * theta;
        m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
        v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[k] / (1.0 - beta1_t);
        const double v_hat = v[k] / (1.0 - beta2_t);
        theta -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
      }
    }
  }
  return result;
}

std::string guide_bank_to_json(const GuideBank& bank) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : bank.params) params.push_back({p.freq_x, p.freq_y, p.phase});
  nlohmann::ordered_json doc;
  doc["d_g"] = bank.size();
  doc["W"] = bank.width;
  doc["H"] = bank.height;
  doc["epsilon"] = bank.epsilon;
  doc["params"] = params;
  return doc.dump(2) + "\n";
}

GuideBank guide_bank_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("guide bank: ") + e.what(), e.byte);
  }
  GuideBank bank;
  try {
    bank.width = doc.at("W").get<int>();
    bank.height = doc.at("H").get<int>();
    bank.epsilon = doc.at("epsilon").get<double>();
    for (const auto& row : doc.at("params")) {
      if (!row.is_array() || row.size() != 3) throw ParseError("guide bank: each param must be [fx, fy, phase]", 0);
      bank.params.push_back({row[0].get<double>(), row[1].get<double>(), row[2].get<double>()});
    }
    if (doc.contains("d_g") && doc["d_g"].get<std::size_t>() != bank.params.size()) {
      throw ParseError("guide bank: d_g does not match params length", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("guide bank: ") + e.what(), 0);
  }
  bank.validate();
  return bank;
}

void save_guide_bank(const GuideBank& bank, const std::filesystem::path& path) {
  write_text_file(path, guide_bank_to_json(bank));
}

GuideBank load_guide_bank(const std::filesystem::path& path) { return guide_bank_from_json(read_text_file(path)); }

std::string loss_history_csv(std::span<const double> history) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, history[e]);
    out += buf;
  }
  return out;
}

}  // namespace glk
