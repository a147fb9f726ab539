#include <algorithm>
#include <cstdint>
#include <vector>

#include "e2e/error.hpp"
#include "e2e/kernels.hpp"

namespace e2e::kernels {

namespace detail {
void check_affine(const Matrix& x, const Matrix& w, std::span<const double> bias, const Matrix& y);
void check_rhs_transposed(const Matrix& dy, const Matrix& w, const Matrix& dx);
void check_lhs_transposed(const Matrix& x, const Matrix& dy, const Matrix& dw);
}  // namespace detail

namespace omp {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

}  // namespace

// Zero inputs (ReLU outputs, gated gradients) are skipped. Skipping only changes
// the sign of an exact zero, never a nonzero value, so results still compare
// equal to the serial kernels.

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y) {
  detail::check_affine(x, w, bias, y);
  const auto batch = static_cast<std::int64_t>(x.rows());
  const std::size_t fan_in = w.rows();
  const std::size_t fan_out = w.cols();
  const double* wp = w.data();
  const bool parallel = batch * static_cast<std::int64_t>(fan_in * fan_out) > kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* xr = x.data() + b * static_cast<std::int64_t>(fan_in);
    double* yr = y.data() + b * static_cast<std::int64_t>(fan_out);
    std::copy(bias.begin(), bias.end(), yr);
    for (std::size_t i = 0; i < fan_in; ++i) {
      const double xv = xr[i];
      if (xv == 0.0) continue;
      const double* wr = wp + i * fan_out;
      for (std::size_t o = 0; o < fan_out; ++o) yr[o] += xv * wr[o];
    }
  }
}

void matmul_rhs_transposed(const Matrix& dy, const Matrix& w, Matrix& dx) {
  detail::check_rhs_transposed(dy, w, dx);
  const auto batch = static_cast<std::int64_t>(dy.rows());
  const std::size_t fan_in = w.rows();
  const std::size_t fan_out = w.cols();

  // w^T so the inner loop runs over contiguous memory.
  std::vector<double> wt(fan_in * fan_out);
  for (std::size_t i = 0; i < fan_in; ++i)
    for (std::size_t o = 0; o < fan_out; ++o) wt[o * fan_in + i] = w(i, o);

  const bool parallel = batch * static_cast<std::int64_t>(fan_in * fan_out) > kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t b = 0; b < batch; ++b) {
    const double* gr = dy.data() + b * static_cast<std::int64_t>(fan_out);
    double* xr = dx.data() + b * static_cast<std::int64_t>(fan_in);
    std::fill(xr, xr + fan_in, 0.0);
    for (std::size_t o = 0; o < fan_out; ++o) {
      const double g = gr[o];
      if (g == 0.0) continue;
      const double* wr = wt.data() + o * fan_in;
      for (std::size_t i = 0; i < fan_in; ++i) xr[i] += g * wr[i];
    }
  }
}

void matmul_lhs_transposed(const Matrix& x, const Matrix& dy, Matrix& dw) {
  detail::check_lhs_transposed(x, dy, dw);
  const auto fan_in = static_cast<std::int64_t>(x.cols());
  const std::size_t batch = x.rows();
  const std::size_t fan_out = dy.cols();
  const bool parallel = fan_in * static_cast<std::int64_t>(batch * fan_out) > kParallelWork;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < fan_in; ++i) {
    double* wr = dw.data() + i * static_cast<std::int64_t>(fan_out);
    std::fill(wr, wr + fan_out, 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      const double xv = x(b, static_cast<std::size_t>(i));
      if (xv == 0.0) continue;
      const double* gr = dy.data() + b * fan_out;
      for (std::size_t o = 0; o < fan_out; ++o) wr[o] += xv * gr[o];
    }
  }
}

void column_sums(const Matrix& dy, std::span<double> db) {
  if (db.size() != dy.cols()) throw ShapeError("column_sums: output length mismatch");
  std::fill(db.begin(), db.end(), 0.0);
  // Row-major sweep; per column the order is still b = 0, 1, ...
  for (std::size_t b = 0; b < dy.rows(); ++b) {
    auto r = dy.row(b);
    for (std::size_t o = 0; o < r.size(); ++o) db[o] += r[o];
  }
}

}  // namespace omp
}  // namespace e2e::kernels
