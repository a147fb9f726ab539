#pragma once

#include <span>

#include "e2e/matrix.hpp"

// Dense-layer kernels. Two builds of the same loops: `serial` is the reference,
// `omp` shards the outer loop across OpenMP threads. Each output element is
// accumulated by exactly one thread in the same order as the serial loop, so
// the two variants are bit-identical for any thread count.
//
// Shapes: batch x (B x I), weight w (I x O), output y (B x O).
namespace e2e::kernels {

namespace serial {

// y = x * w + bias (bias broadcast over rows)
void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
// dx = dy * w^T
void matmul_rhs_transposed(const Matrix& dy, const Matrix& w, Matrix& dx);
// dw = x^T * dy
void matmul_lhs_transposed(const Matrix& x, const Matrix& dy, Matrix& dw);
// db[o] = sum_b dy[b, o]
void column_sums(const Matrix& dy, std::span<double> db);

}  // namespace serial

namespace omp {

void affine(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& y);
void matmul_rhs_transposed(const Matrix& dy, const Matrix& w, Matrix& dx);
void matmul_lhs_transposed(const Matrix& x, const Matrix& dy, Matrix& dw);
void column_sums(const Matrix& dy, std::span<double> db);

}  // namespace omp

}  // namespace e2e::kernels
