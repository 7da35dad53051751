#include "msdlstm/core/gemm.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace msd::gemm {
namespace {

constexpr std::size_t kRowTile = 4;
constexpr std::size_t kColTile = 8;

std::atomic<std::size_t> g_threads{0};
thread_local std::size_t t_serial_depth = 0;

// Register tile of ROWS x kColTile outputs with the inner dimension innermost.
template <std::size_t ROWS>
void tile_nn(std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             std::size_t col) {
  Real acc[ROWS][kColTile] = {};
  for (std::size_t p = 0; p < k; ++p) {
    const Real* brow = b + p * n + col;
    for (std::size_t r = 0; r < ROWS; ++r) {
      const Real av = a[r * k + p];
      for (std::size_t j = 0; j < kColTile; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < ROWS; ++r)
    for (std::size_t j = 0; j < kColTile; ++j) c[r * n + col + j] += acc[r][j];
}

template <std::size_t ROWS>
void tail_nn(std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c,
             std::size_t col) {
  for (std::size_t r = 0; r < ROWS; ++r) {
    for (std::size_t j = col; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[r * k + p] * b[p * n + j];
      c[r * n + j] += acc;
    }
  }
}

template <std::size_t ROWS>
void rows_nn(std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  std::size_t col = 0;
  for (; col + kColTile <= n; col += kColTile) tile_nn<ROWS>(n, k, a, b, c, col);
  if (col < n) tail_nn<ROWS>(n, k, a, b, c, col);
}

void block_nn(std::size_t row_begin, std::size_t row_end, std::size_t n, std::size_t k,
              const Real* a, const Real* b, Real* c) {
  std::size_t r = row_begin;
  for (; r + kRowTile <= row_end; r += kRowTile) rows_nn<4>(n, k, a + r * k, b, c + r * n);
  switch (row_end - r) {
    case 3: rows_nn<3>(n, k, a + r * k, b, c + r * n); break;
    case 2: rows_nn<2>(n, k, a + r * k, b, c + r * n); break;
    case 1: rows_nn<1>(n, k, a + r * k, b, c + r * n); break;
    default: break;
  }
}

// Dot product with eight fixed lanes, folded in a fixed order.
Real dot(const Real* x, const Real* y, std::size_t len) {
  Real lanes[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8)
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += x[i + l] * y[i + l];
  Real tail = 0;
  for (; i < len; ++i) tail += x[i] * y[i];
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) +
         ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7])) + tail;
}

void block_nt(std::size_t row_begin, std::size_t row_end, std::size_t n, std::size_t k,
              const Real* a, const Real* b, Real* c) {
  for (std::size_t r = row_begin; r < row_end; ++r)
    for (std::size_t j = 0; j < n; ++j) c[r * n + j] += dot(a + r * k, b + j * k, k);
}

template <typename Fn>
void parallel_rows(std::size_t m, std::size_t work, Fn&& fn) {
  const std::size_t threads = std::min(thread_count(), m / kRowTile);
  if (t_serial_depth > 0 || threads <= 1 || work < (1u << 16)) {
    fn(0, m);
    return;
  }
  // Chunk boundaries are multiples of the row tile; per-element results do not
  // depend on them.
  const std::size_t tiles = (m + kRowTile - 1) / kRowTile;
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  auto bounds = [&](std::size_t t) {
    return std::min(m, (tiles * t / threads) * kRowTile);
  };
  for (std::size_t t = 1; t < threads; ++t)
    pool.emplace_back([&, t] { fn(bounds(t), bounds(t + 1)); });
  fn(0, bounds(1));
  for (auto& th : pool) th.join();
}

}  // namespace

void nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  parallel_rows(m, m * n * k, [&](std::size_t lo, std::size_t hi) {
    block_nn(lo, hi, n, k, a, b, c);
  });
}

void nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  parallel_rows(m, m * n * k, [&](std::size_t lo, std::size_t hi) {
    block_nt(lo, hi, n, k, a, b, c);
  });
}

std::size_t thread_count() {
  std::size_t n = g_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = 1;
    if (const char* env = std::getenv("MSDLSTM_THREADS")) {
      try {
        n = std::max<long>(1, std::stol(env));
      } catch (...) {
        n = 1;
      }
    }
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_thread_count(std::size_t n) { g_threads.store(std::max<std::size_t>(1, n)); }

SerialScope::SerialScope() { ++t_serial_depth; }
SerialScope::~SerialScope() { --t_serial_depth; }

}  // namespace msd::gemm
