#pragma once

// Dense kernels behind the tensor operations.
//
// gemm accumulates every output element sequentially over the inner dimension
// starting from zero, independent of how many rows are in the call or how
// rows are split across threads. Evaluating a subset of rows therefore gives
// bit-identical results to evaluating the whole matrix.

#include <cstddef>

namespace cips3d::kernels {

/// C[m,n] = A[m,k] * B[k,n], all row-major and contiguous.
template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n);

/// dst[cols,rows] = src[rows,cols]^T.
template <typename T>
void transpose(const T* src, T* dst, std::size_t rows, std::size_t cols);

/// Worker count for row-parallel kernels. Initialised from CIPS3D_THREADS,
/// falling back to the hardware concurrency.
int thread_count();
void set_thread_count(int threads);

}  // namespace cips3d::kernels
