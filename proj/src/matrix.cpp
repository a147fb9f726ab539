#include "e2e/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "e2e/error.hpp"

namespace e2e {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                     std::to_string(rows_ * cols_));
  }
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows()) {
    throw ShapeError("hconcat: row counts differ (" + std::to_string(a.rows()) + " vs " +
                     std::to_string(b.rows()) + ")");
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<long>(a.cols()));
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b, const Matrix& c) {
  return hconcat(hconcat(a, b), c);
}

Matrix column_block(const Matrix& m, std::size_t begin, std::size_t count) {
  if (begin + count > m.cols()) {
    throw ShapeError("column_block: columns [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     std::to_string(m.cols()) + " columns");
  }
  Matrix out(m.rows(), count);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto src = m.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const int> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto idx = indices[r];
    if (idx < 0 || static_cast<std::size_t>(idx) >= m.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(idx) + " out of range");
    }
    auto src = m.row(static_cast<std::size_t>(idx));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace e2e
