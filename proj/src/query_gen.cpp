#include "glk/query_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "glk/errors.hpp"
#include "glk/rng.hpp"

namespace glk {

std::size_t MlpParams::input_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
std::size_t MlpParams::output_dim() const { return layers.empty() ? 0 : layers.back().weight.cols(); }

void MlpParams::validate() const {
  if (layers.size() != 3) throw ShapeError("MLP must have exactly three layers, got " + std::to_string(layers.size()));
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weight.cols()) {
      throw ShapeError("MLP layer " + std::to_string(l) + " bias length does not match its output width");
    }
    if (l > 0 && layers[l].weight.rows() != layers[l - 1].weight.cols()) {
      throw ShapeError("MLP layer " + std::to_string(l) + " input width does not chain with the previous layer");
    }
  }
}

MlpParams init_mlp(std::size_t d_in, std::size_t d_hidden, std::size_t d_out, std::uint64_t seed) {
  Rng rng(seed);
  MlpParams p;
  const std::size_t dims[4] = {d_in, d_hidden, d_hidden, d_out};
  for (int l = 0; l < 3; ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    LinearLayer layer{Matrix(dims[l], dims[l + 1]), std::vector<double>(dims[l + 1])};
    for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

AttentionResult cross_attention(const Matrix& queries, const Matrix& keys, const Matrix& values) {
  if (queries.cols() != keys.cols()) throw ShapeError("cross_attention: query and key widths differ");
  if (keys.rows() != values.rows()) throw ShapeError("cross_attention: key and value counts differ");
  if (keys.rows() == 0) throw ShapeError("cross_attention: no keys");
  const double scale = 1.0 / std::sqrt(static_cast<double>(queries.cols()));

  Matrix attn = matmul(queries, transpose(keys));
  for (std::size_t i = 0; i < attn.rows(); ++i) {
    auto row = attn.row(i);
    double peak = -std::numeric_limits<double>::infinity();
    for (double& v : row) {
      v *= scale;
      peak = std::max(peak, v);
    }
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return {matmul(attn, values), std::move(attn)};
}

Matrix guided_mask_embeddings(const GuideBank& bank, const SoftMaskStack& masks) {
  Matrix out(masks.count(), bank.size());
  for (std::size_t k = 0; k < masks.count(); ++k) {
    const auto layer = masks.layer(k);
    for (std::size_t i = 0; i < bank.size(); ++i) {
      out(k, i) = soft_instance_expectation(bank.params[i], layer, masks.width(), masks.height());
    }
  }
  return out;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x) {
  p.validate();
  if (x.cols() != p.input_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(x.cols()) + " != " + std::to_string(p.input_dim()));
  }
  Matrix h = x;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    h = matmul(h, p.layers[l].weight);
    const bool hidden = l + 1 < p.layers.size();
    for (std::size_t r = 0; r < h.rows(); ++r) {
      auto row = h.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] += p.layers[l].bias[c];
        if (hidden && row[c] < 0.0) row[c] = 0.0;
      }
    }
  }
  return h;
}

namespace {

Matrix add_row_bias(Matrix m, std::span<const double> bias) {
  if (bias.size() != m.cols()) throw ShapeError("bias length does not match matrix width");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
  return m;
}

}  // namespace

Matrix gdpq(const GuideBank& bank, const SoftMaskStack& masks, const MlpParams& mlp, const QueryBias& bias) {
  if (mlp.input_dim() != bank.size()) throw ShapeError("gdpq: MLP input width must equal d_g");
  return mlp_forward(mlp, add_row_bias(guided_mask_embeddings(bank, masks), bias.b));
}

Matrix dpq_baseline(const Matrix& attention, const Matrix& key_positions, const MlpParams& mlp,
                    std::span<const double> bias) {
  return mlp_forward(mlp, add_row_bias(matmul(attention, key_positions), bias));
}

Matrix combine_queries(const QuerySet& qs) {
  if (qs.content.rows() != qs.positional.rows() || qs.content.cols() != qs.positional.cols()) {
    throw ShapeError("content and positional queries differ in shape");
  }
  Matrix out = qs.content;
  auto dst = out.data();
  auto src = qs.positional.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

std::string mlp_to_json(const MlpParams& p) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : p.layers) {
    nlohmann::json w = nlohmann::json::array();
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) {
      auto row = layer.weight.row(r);
      w.push_back(std::vector<double>(row.begin(), row.end()));
    }
    layers.push_back({{"weight", w}, {"bias", layer.bias}});
  }
  return nlohmann::json{{"layers", layers}}.dump() + "\n";
}

MlpParams mlp_from_json(std::string_view text) {
  MlpParams p;
  try {
    const auto doc = nlohmann::json::parse(text);
    for (const auto& layer : doc.at("layers")) {
      const auto& w = layer.at("weight");
      const std::size_t rows = w.size();
      const std::size_t cols = rows ? w[0].size() : 0;
      Matrix weight(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        if (w[r].size() != cols) throw ShapeError("MLP weight rows have unequal length");
        for (std::size_t c = 0; c < cols; ++c) weight(r, c) = w[r][c].get<double>();
      }
      p.layers.push_back({std::move(weight), layer.at("bias").get<std::vector<double>>()});
    }
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("MLP params: ") + e.what(), e.byte);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("MLP params: ") + e.what(), 0);
  }
  p.validate();
  return p;
}

}  // namespace glk
