#include "ddir/numerics/gemm.h"

#include <algorithm>
#include <cstring>
#include <vector>

namespace ddir::numerics {
namespace {

constexpr std::size_t kBlockK = 256;
constexpr std::size_t kRowTile = 6;

template <typename T>
struct Lane {
  typedef T vec __attribute__((vector_size(64)));
  static constexpr std::size_t kWidth = 64 / sizeof(T);
};

// One register tile: kRowTile rows x one vector of columns. `ap` is packed
// k-major (kRowTile values per k), `bp` is packed k-major (kWidth per k).
template <typename T>
inline void micro_tile(std::size_t kc, const T* ap, const T* bp, T* c,
                       std::size_t ldc) {
  using V = typename Lane<T>::vec;
  constexpr std::size_t L = Lane<T>::kWidth;
  V acc[kRowTile];
  for (std::size_t r = 0; r < kRowTile; ++r) {
    std::memcpy(&acc[r], c + r * ldc, sizeof(V));
  }
  for (std::size_t k = 0; k < kc; ++k) {
    V bv;
    std::memcpy(&bv, bp, sizeof(V));
    for (std::size_t r = 0; r < kRowTile; ++r) {
      const V av = ap[r] - V{};
      acc[r] += av * bv;
    }
    ap += kRowTile;
    bp += L;
  }
  for (std::size_t r = 0; r < kRowTile; ++r) {
    std::memcpy(c + r * ldc, &acc[r], sizeof(V));
  }
}

// Leftover rows/columns. Same arithmetic as micro_tile, element by element.
template <typename T>
inline void edge_tile(std::size_t mr, std::size_t nr, std::size_t kc,
                      const StridedMatrix<T>& a, std::size_t row0,
                      std::size_t k0, const T* b, std::size_t ldb, T* c,
                      std::size_t ldc) {
  for (std::size_t r = 0; r < mr; ++r) {
    const T* arow = a.data + (row0 + r) * a.row_stride + k0 * a.col_stride;
    T* crow = c + r * ldc;
    for (std::size_t k = 0; k < kc; ++k) {
      const T av = arow[k * a.col_stride];
      const T* brow = b + k * ldb;
      for (std::size_t j = 0; j < nr; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, StridedMatrix<T> a,
          const T* b, std::size_t ldb, T* c, std::size_t ldc,
          bool accumulate) {
  constexpr std::size_t NR = Lane<T>::kWidth;
  if (!accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(c + i * ldc, c + i * ldc + n, T(0));
    }
  }
  if (m == 0 || n == 0 || k == 0) return;

  const std::size_t full_cols = n / NR;
  std::vector<T> bpack(kBlockK * full_cols * NR);
  std::vector<T> apack(kBlockK * kRowTile);

  for (std::size_t k0 = 0; k0 < k; k0 += kBlockK) {
    const std::size_t kc = std::min(kBlockK, k - k0);
    for (std::size_t jb = 0; jb < full_cols; ++jb) {
      for (std::size_t kk = 0; kk < kc; ++kk) {
        std::memcpy(&bpack[(jb * kBlockK + kk) * NR],
                    b + (k0 + kk) * ldb + jb * NR, NR * sizeof(T));
      }
    }
    std::size_t i0 = 0;
    for (; i0 + kRowTile <= m; i0 += kRowTile) {
      for (std::size_t kk = 0; kk < kc; ++kk) {
        for (std::size_t r = 0; r < kRowTile; ++r) {
          apack[kk * kRowTile + r] =
              a.data[(i0 + r) * a.row_stride + (k0 + kk) * a.col_stride];
        }
      }
      for (std::size_t jb = 0; jb < full_cols; ++jb) {
        micro_tile<T>(kc, apack.data(), &bpack[jb * kBlockK * NR],
                      c + i0 * ldc + jb * NR, ldc);
      }
      if (full_cols * NR < n) {
        edge_tile<T>(kRowTile, n - full_cols * NR, kc, a, i0, k0,
                     b + k0 * ldb + full_cols * NR, ldb,
                     c + i0 * ldc + full_cols * NR, ldc);
      }
    }
    if (i0 < m) {
      edge_tile<T>(m - i0, n, kc, a, i0, k0, b + k0 * ldb, ldb, c + i0 * ldc,
                   ldc);
    }
  }
}

template void gemm<float>(std::size_t, std::size_t, std::size_t,
                          StridedMatrix<float>, const float*, std::size_t,
                          float*, std::size_t, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t,
                           StridedMatrix<double>, const double*, std::size_t,
                           double*, std::size_t, bool);

}  // namespace ddir::numerics
