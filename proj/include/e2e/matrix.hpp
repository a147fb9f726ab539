#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace e2e {

// Dense row-major matrix of doubles. Batches of vectors are stored one vector per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }
  [[nodiscard]] std::span<double> flat() noexcept { return data_; }
  [[nodiscard]] std::span<const double> flat() const noexcept { return data_; }

  void fill(double v);
  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// [a | b]; both operands must have the same row count. An operand with zero
// columns is allowed and contributes nothing.
Matrix hconcat(const Matrix& a, const Matrix& b);
Matrix hconcat(const Matrix& a, const Matrix& b, const Matrix& c);

// Columns [begin, begin + count) of m.
Matrix column_block(const Matrix& m, std::size_t begin, std::size_t count);

// Rows selected by index, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const int> indices);

}  // namespace e2e
