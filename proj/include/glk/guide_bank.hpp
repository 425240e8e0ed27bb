#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "glk/data_model.hpp"

namespace glk {

/// One harmonic guide f(x, y) = sin(freq_x * x / W + freq_y * y / H + phase).
struct GuideParams {
  double freq_x = 0.0;
  double freq_y = 0.0;
  double phase = 0.0;
  friend bool operator==(const GuideParams&, const GuideParams&) = default;
};

/// d_g guides sharing the reference image size and separation margin.
struct GuideBank {
  std::vector<GuideParams> params;
  int width = 1;
  int height = 1;
  double epsilon = 2.0;

  std::size_t size() const noexcept { return params.size(); }
  /// Throws ConfigError on an empty bank, non-positive size or margin, or
  /// non-finite parameters.
  void validate() const;

  friend bool operator==(const GuideBank&, const GuideBank&) = default;
};

struct GuidedEmbedding {
  std::vector<double> values;
};

double eval_guide(const GuideParams& p, double x, double y, double width, double height) noexcept;

/// Mean of the guide over the instance pixels. Throws EmptyInstanceError.
double instance_expectation(const GuideParams& p, const InstancePixelSet& s, int width, int height);

GuidedEmbedding guided_embedding(const GuideBank& bank, const InstancePixelSet& s);

/// Mass-weighted mean of the guide under a soft mask layer of size
/// height x width. Returns 0 when the total mass is below 1e-6.
double soft_instance_expectation(const GuideParams& p, std::span<const double> mask, int width, int height);

/// Instance pixel sets for each image, extracted once and reused across
/// loss evaluations.
class GuideDataset {
 public:
  explicit GuideDataset(std::span<const LabelMap> images);

  std::size_t image_count() const noexcept { return images_.size(); }
  const std::vector<InstancePixelSet>& instances(std::size_t image) const { return images_[image]; }
  /// Number of unordered instance pairs summed over all images.
  std::size_t pair_count() const noexcept;

 private:
  std::vector<std::vector<InstancePixelSet>> images_;
};

/// Hinge separation objective: per image, the mean over unordered pairs of
/// nonzero-id instances of max(0, eps - ||e(S) - e(S')||_1), summed over images.
double separation_loss(const GuideBank& bank, const GuideDataset& data);
double separation_loss(const GuideBank& bank, std::span<const LabelMap> images);

struct LossAndGradient {
  double loss = 0.0;
  /// d loss / d psi, one entry per guide with the same field layout.
  std::vector<GuideParams> grad;
};

/// Analytic gradient. The hinge kink and sign(0) of the L1 term both take
/// subgradient 0.
LossAndGradient separation_loss_and_grad(const GuideBank& bank, const GuideDataset& data);
std::vector<GuideParams> separation_loss_grad(const GuideBank& bank, std::span<const LabelMap> images);

/// L1 distances of all unordered within-image instance pairs, image-major.
std::vector<double> pair_distances(const GuideBank& bank, const GuideDataset& data);

/// First half of the guides vary along x only, second half along y only;
/// frequencies ~ U(0, 50), phases ~ U(0, 2 pi). Throws ConfigError on odd d_g.
GuideBank init_guides(std::size_t d_g, int width, int height, double epsilon, std::uint64_t seed);

struct GuideTrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double weight_decay = 0.0;

  void validate() const;
};

struct TrainResult {
  GuideBank bank;
  /// history[e] is the loss of the parameters at the start of epoch e.
  std::vector<double> history;
  std::size_t best_epoch = 0;
};

/// Full-batch AdamW on the separation loss. Returns the lowest-loss snapshot
/// seen (earliest on ties). Throws DegenerateDatasetError when no image has
/// two instances.
TrainResult train_guides(std::span<const LabelMap> images, const GuideTrainConfig& cfg, const GuideBank& init);

std::string guide_bank_to_json(const GuideBank& bank);
GuideBank guide_bank_from_json(std::string_view text);
void save_guide_bank(const GuideBank& bank, const std::filesystem::path& path);
GuideBank load_guide_bank(const std::filesystem::path& path);

/// "epoch,loss" CSV, one row per epoch.
std::string loss_history_csv(std::span<const double> history);

}  // namespace glk
