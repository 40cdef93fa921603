#include "cips3d/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace cips3d::kernels {
namespace {

std::atomic<int>& thread_setting() {
  static std::atomic<int> threads = [] {
    if (const char* env = std::getenv("CIPS3D_THREADS")) {
      const int v = std::atoi(env);
      if (v > 0) return v;
    }
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }();
  return threads;
}

template <typename T>
struct Blocking;
template <>
struct Blocking<float> {
  static constexpr std::size_t rows = 4;
  static constexpr std::size_t cols = 32;
};
template <>
struct Blocking<double> {
  static constexpr std::size_t rows = 4;
  static constexpr std::size_t cols = 16;
};

// One MR x NB tile with accumulators held in registers.
template <typename T, std::size_t MR, std::size_t NB>
inline void tile(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t k,
                 std::size_t n) {
  T acc[MR][NB] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * n;
    for (std::size_t r = 0; r < MR; ++r) {
      const T av = a[r * k + p];
      for (std::size_t q = 0; q < NB; ++q) acc[r][q] += av * brow[q];
    }
  }
  for (std::size_t r = 0; r < MR; ++r)
    for (std::size_t q = 0; q < NB; ++q) c[r * n + q] = acc[r][q];
}

template <typename T, std::size_t MR>
inline void row_block(const T* a, const T* b, T* c, std::size_t k, std::size_t n) {
  constexpr std::size_t NB = Blocking<T>::cols;
  std::size_t j = 0;
  for (; j + NB <= n; j += NB) tile<T, MR, NB>(a, b + j, c + j, k, n);
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < MR; ++r) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[r * k + p] * b[p * n + j];
      c[r * n + j] = acc;
    }
  }
}

template <typename T>
void gemm_rows(const T* a, const T* b, T* c, std::size_t row_begin, std::size_t row_end,
               std::size_t k, std::size_t n) {
  constexpr std::size_t MR = Blocking<T>::rows;
  std::size_t i = row_begin;
  for (; i + MR <= row_end; i += MR) row_block<T, MR>(a + i * k, b, c + i * n, k, n);
  for (; i < row_end; ++i) row_block<T, 1>(a + i * k, b, c + i * n, k, n);
}

}  // namespace

int thread_count() { return thread_setting().load(); }
void set_thread_count(int threads) { thread_setting().store(std::max(1, threads)); }

template <typename T>
void gemm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    std::fill(c, c + m * n, T{0});
    return;
  }
  const std::size_t workers = static_cast<std::size_t>(thread_count());
  const std::size_t work = m * k * n;
  if (workers <= 1 || m < 2 * workers || work < (std::size_t{1} << 21)) {
    gemm_rows(a, b, c, 0, m, k, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (m + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(m, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([=] { gemm_rows(a, b, c, begin, end, k, n); });
  }
  for (auto& t : pool) t.join();
}

template <typename T>
void transpose(const T* src, T* dst, std::size_t rows, std::size_t cols) {
  constexpr std::size_t B = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += B) {
    const std::size_t i1 = std::min(rows, i0 + B);
    for (std::size_t j0 = 0; j0 < cols; j0 += B) {
      const std::size_t j1 = std::min(cols, j0 + B);
      for (std::size_t i = i0; i < i1; ++i)
        for (std::size_t j = j0; j < j1; ++j) dst[j * rows + i] = src[i * cols + j];
    }
  }
}

template void gemm<float>(const float*, const float*, float*, std::size_t, std::size_t, std::size_t);
template void gemm<double>(const double*, const double*, double*, std::size_t, std::size_t,
                           std::size_t);
template void transpose<float>(const float*, float*, std::size_t, std::size_t);
template void transpose<double>(const double*, double*, std::size_t, std::size_t);

}  // namespace cips3d::kernels
