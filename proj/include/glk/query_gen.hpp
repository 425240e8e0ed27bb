#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glk/data_model.hpp"
#include "glk/guide_bank.hpp"
#include "glk/tensor.hpp"

namespace glk {

struct QuerySet {
  Matrix content;
  Matrix positional;
};

struct LinearLayer {
  Matrix weight;  // fan_in x fan_out, applied as x * W + b
  std::vector<double> bias;
};

/// Three affine layers with ReLU after the first two.
struct MlpParams {
  std::vector<LinearLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  /// Throws ShapeError unless there are three layers whose shapes chain.
  void validate() const;
};

/// Each weight and bias ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
MlpParams init_mlp(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, std::uint64_t seed);

struct QueryBias {
  std::vector<double> b;
};

struct AttentionResult {
  Matrix output;     // n x d
  Matrix attention;  // n x hw, rows sum to 1
};

/// softmax(Q K^T / sqrt(d)) V with a max-shifted row softmax.
AttentionResult cross_attention(const Matrix& queries, const Matrix& keys, const Matrix& values);

/// Row k holds the soft guided embedding of mask k. Guides are normalised by
/// the mask grid's own width and height.
Matrix guided_mask_embeddings(const GuideBank& bank, const SoftMaskStack& masks);

Matrix mlp_forward(const MlpParams& p, const Matrix& x);

/// Positional queries h(E(masks) + B), B broadcast over rows.
Matrix gdpq(const GuideBank& bank, const SoftMaskStack& masks, const MlpParams& mlp, const QueryBias& bias);

/// Attention-pooled baseline h'(A K_p + b').
Matrix dpq_baseline(const Matrix& attention, const Matrix& key_positions, const MlpParams& mlp,
                    std::span<const double> bias);

Matrix combine_queries(const QuerySet& qs);

std::string mlp_to_json(const MlpParams& p);
MlpParams mlp_from_json(std::string_view text);

}  // namespace glk
