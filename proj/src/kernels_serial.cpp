#include <string>

#include "e2e/error.hpp"
#include "e2e/kernels.hpp"

namespace e2e::kernels {

namespace detail {

void check_affine(const Matrix& x, const Matrix& w, std::span<const double> bias, const Matrix& y) {
  if (x.cols() != w.rows() || bias.size() != w.cols() || y.rows() != x.rows() ||
      y.cols() != w.cols()) {
    throw ShapeError("affine: x " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", w " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                     ", bias " + std::to_string(bias.size()) + ", y " +
                     std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  }
}

void check_rhs_transposed(const Matrix& dy, const Matrix& w, const Matrix& dx) {
  if (dy.cols() != w.cols() || dx.rows() != dy.rows() || dx.cols() != w.rows()) {
    throw ShapeError("matmul_rhs_transposed: shape mismatch");
  }
}

void check_lhs_transposed(const Matrix& x, const Matrix& dy, const Matrix& dw) {
  if (x.rows() != dy.rows() || dw.rows() != x.cols() || dw.cols() != dy.cols()) {
    throw ShapeError("matmul_lhs_transposed: shape mismatch");
  }
}

}  // namespace detail

namespace serial {

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  detail::check_affine(x, w, bias, y);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    for (std::size_t o = 0; o < w.cols(); ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < w.rows(); ++i) acc += x(b, i) * w(i, o);
      y(b, o) = acc;
    }
  }
}

void matmul_rhs_transposed(const Matrix& dy, const Matrix& w, Matrix& dx) {
  detail::check_rhs_transposed(dy, w, dx);
  for (std::size_t b = 0; b < dy.rows(); ++b) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < w.cols(); ++o) acc += dy(b, o) * w(i, o);
      dx(b, i) = acc;
    }
  }
}

void matmul_lhs_transposed(const Matrix& x, const Matrix& dy, Matrix& dw) {
  detail::check_lhs_transposed(x, dy, dw);
  for (std::size_t i = 0; i < x.cols(); ++i) {
    for (std::size_t o = 0; o < dy.cols(); ++o) {
      double acc = 0.0;
      for (std::size_t b = 0; b < x.rows(); ++b) acc += x(b, i) * dy(b, o);
      dw(i, o) = acc;
    }
  }
}

void column_sums(const Matrix& dy, std::span<double> db) {
  if (db.size() != dy.cols()) throw ShapeError("column_sums: output length mismatch");
  for (std::size_t o = 0; o < dy.cols(); ++o) {
    double acc = 0.0;
    for (std::size_t b = 0; b < dy.rows(); ++b) acc += dy(b, o);
    db[o] = acc;
  }
}

}  // namespace serial
}  // namespace e2e::kernels
