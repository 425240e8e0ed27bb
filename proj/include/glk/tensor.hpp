#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glk {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// height x width x depth tensor, values in (y, x, channel) order.
class Grid3 {
 public:
  Grid3() = default;
  Grid3(int height, int width, int depth, double fill = 0.0);
  Grid3(int height, int width, int depth, std::vector<double> values);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int depth() const noexcept { return depth_; }

  double& operator()(int y, int x, int c) { return values_[offset(y, x, c)]; }
  double operator()(int y, int x, int c) const { return values_[offset(y, x, c)]; }

  std::span<double> pixel(int y, int x) {
    return std::span<double>(values_).subspan(offset(y, x, 0), static_cast<std::size_t>(depth_));
  }
  std::span<const double> pixel(int y, int x) const {
    return std::span<const double>(values_).subspan(offset(y, x, 0), static_cast<std::size_t>(depth_));
  }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  std::size_t offset(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(depth_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int depth_ = 0;
  std::vector<double> values_;
};

/// Flat dump: ASCII header "h w d\n" then little-endian float64 values in
/// (y, x, channel) order.
std::string encode_grid(const Grid3& grid);
Grid3 decode_grid(std::string_view bytes);
void save_grid(const Grid3& grid, const std::filesystem::path& path);
Grid3 load_grid(const std::filesystem::path& path);

/// Matrices use the same dump with header "rows cols 1".
Grid3 matrix_as_grid(const Matrix& m);
Matrix grid_as_matrix(const Grid3& g);

}  // namespace glk
