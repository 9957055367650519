#pragma once

// Small dense matrix products for the parallel kernels. Row-major; every
// output element is accumulated over k in increasing order by a single
// thread, so results are independent of the thread count.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace trafficast::nn::detail {

inline constexpr std::size_t kRowTile = 4;
inline constexpr std::size_t kColTile = 32;

/// C[r][j] += sum_k A(r, k) * B[k][j] for an R x J tile, where A(r, k) is
/// read at a[r * a_row + k * a_col].
template <std::size_t R, std::size_t J>
inline void tile_fixed(std::size_t k_count, const double* a, std::size_t a_row, std::size_t a_col, const double* b,
                       std::size_t ldb, double* c, std::size_t ldc) {
    double acc[R][J];
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < J; ++j) {
            acc[r][j] = c[r * ldc + j];
        }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        const double* brow = b + k * ldb;
        for (std::size_t r = 0; r < R; ++r) {
            const double av = a[r * a_row + k * a_col];
#pragma omp simd
            for (std::size_t j = 0; j < J; ++j) {
                acc[r][j] += av * brow[j];
            }
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t j = 0; j < J; ++j) {
            c[r * ldc + j] = acc[r][j];
        }
    }
}

inline void tile_any(std::size_t rows, std::size_t cols, std::size_t k_count, const double* a, std::size_t a_row,
                     std::size_t a_col, const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* crow = c + r * ldc;
        for (std::size_t k = 0; k < k_count; ++k) {
            const double av = a[r * a_row + k * a_col];
            const double* brow = b + k * ldb;
#pragma omp simd
            for (std::size_t j = 0; j < cols; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

/// C (rows x cols) += A (rows x k_count, strides a_row/a_col) * B (k_count x cols).
inline void gemm_acc(std::size_t rows, std::size_t cols, std::size_t k_count, const double* a, std::size_t a_row,
                     std::size_t a_col, const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    const std::ptrdiff_t row_tiles = static_cast<std::ptrdiff_t>((rows + kRowTile - 1) / kRowTile);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t t = 0; t < row_tiles; ++t) {
        const std::size_t r0 = static_cast<std::size_t>(t) * kRowTile;
        const std::size_t rn = std::min(kRowTile, rows - r0);
        const double* at = a + r0 * a_row;
        double* ct = c + r0 * ldc;
        std::size_t j0 = 0;
        if (rn == kRowTile) {
            for (; j0 + kColTile <= cols; j0 += kColTile) {
                tile_fixed<kRowTile, kColTile>(k_count, at, a_row, a_col, b + j0, ldb, ct + j0, ldc);
            }
            for (; j0 + 8 <= cols; j0 += 8) {
                tile_fixed<kRowTile, 8>(k_count, at, a_row, a_col, b + j0, ldb, ct + j0, ldc);
            }
        }
        if (j0 < cols) {
            tile_any(rn, cols - j0, k_count, at, a_row, a_col, b + j0, ldb, ct + j0, ldc);
        }
    }
}

/// C (rows x cols) = A (rows x k_count) * B^T, with B stored cols x k_count.
/// B is transposed into `scratch` first.
inline void gemm_nt(std::size_t rows, std::size_t cols, std::size_t k_count, const double* a, const double* b,
                    double* c, std::vector<double>& scratch) {
    scratch.resize(k_count * cols);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t k = 0; k < k_count; ++k) {
            scratch[k * cols + j] = b[j * k_count + k];
        }
    }
    std::fill(c, c + rows * cols, 0.0);
    gemm_acc(rows, cols, k_count, a, k_count, 1, scratch.data(), cols, c, cols);
}

}  // namespace trafficast::nn::detail
