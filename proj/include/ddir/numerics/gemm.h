// Matrix product with a fixed per-element summation order.
#pragma once

#include <cstddef>

namespace ddir::numerics {

// Strided read-only view of a matrix operand.
template <typename T>
struct StridedMatrix {
  const T* data;
  std::size_t row_stride;
  std::size_t col_stride;
};

// C[M x N] = A[M x K] * B[K x N], or C += A * B when `accumulate` is set.
//
// B must have unit column stride (row stride `ldb`); A may be any strided
// view, which is how transposed operands are passed. Every output element is
// accumulated as a left-to-right sum over k (starting from zero, or from the
// existing C value when accumulating), so the result of any element does not
// depend on M, N, or how the product is tiled. Build with floating-point
// contraction disabled for this to hold across vectorized and scalar tails.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, StridedMatrix<T> a,
          const T* b, std::size_t ldb, T* c, std::size_t ldc,
          bool accumulate = false);

}  // namespace ddir::numerics
