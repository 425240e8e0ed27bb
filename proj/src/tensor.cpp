#include "glk/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "glk/data_model.hpp"
#include "glk/errors.hpp"

namespace glk {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ShapeError("matrix data length does not match shape");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s == 0.0) continue;
      const auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += s * src[j];
    }
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Grid3::Grid3(int height, int width, int depth, double fill)
    : Grid3(height, width, depth,
            std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                    static_cast<std::size_t>(std::max(width, 0)) *
                                    static_cast<std::size_t>(std::max(depth, 0)),
                                fill)) {}

Grid3::Grid3(int height, int width, int depth, std::vector<double> values)
    : height_(height), width_(width), depth_(depth), values_(std::move(values)) {
  if (height < 1 || width < 1 || depth < 1) throw ShapeError("grid dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(height) * width * depth) {
    throw ShapeError("grid value count does not match shape");
  }
}

namespace {

static_assert(sizeof(double) == 8);

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xFF));
    bits >>= 8;
  }
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string encode_grid(const Grid3& grid) {
  std::string out = std::to_string(grid.height()) + " " + std::to_string(grid.width()) + " " +
                    std::to_string(grid.depth()) + "\n";
  out.reserve(out.size() + grid.values().size() * 8);
  for (double v : grid.values()) put_le(out, v);
  return out;
}

Grid3 decode_grid(std::string_view bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw ParseError("grid dump lacks header line", 0);
  std::istringstream header{std::string(bytes.substr(0, nl))};
  int h = 0, w = 0, d = 0;
  if (!(header >> h >> w >> d) || h < 1 || w < 1 || d < 1) throw ParseError("bad grid header", 0);
  const std::size_t count = static_cast<std::size_t>(h) * w * d;
  const auto body = bytes.substr(nl + 1);
  if (body.size() != count * 8) {
    throw ParseError("grid body has " + std::to_string(body.size()) + " bytes, expected " +
                         std::to_string(count * 8),
                     nl + 1);
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = get_le(body.data() + i * 8);
  return Grid3(h, w, d, std::move(values));
}

void save_grid(const Grid3& grid, const std::filesystem::path& path) {
  write_text_file(path, encode_grid(grid));
}

Grid3 load_grid(const std::filesystem::path& path) { return decode_grid(read_text_file(path)); }

Grid3 matrix_as_grid(const Matrix& m) {
  return Grid3(static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1,
               std::vector<double>(m.data().begin(), m.data().end()));
}

Matrix grid_as_matrix(const Grid3& g) {
  if (g.depth() != 1) throw ShapeError("matrix dump must have depth 1");
  return Matrix(static_cast<std::size_t>(g.height()), static_cast<std::size_t>(g.width()),
                std::vector<double>(g.values().begin(), g.values().end()));
}

}  // namespace glk
