#pragma once

#include <cstddef>

#include "msdlstm/core/tensor.hpp"

// Row-major matrix kernels behind conv2d and fully_connected.
//
// Each output element is reduced over the inner dimension in ascending index
// order starting from zero and then added to the destination, independent of
// tiling, matrix height and thread count. Outputs are therefore bit-identical
// when a row is computed as part of a larger or smaller matrix.
namespace msd::gemm {

// C[m x n] += A[m x k] * B[k x n]
void nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c);

// C[m x n] += A[m x k] * B[n x k]^T
void nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c);

// Worker count used for intra-op parallelism: the MSDLSTM_THREADS environment
// variable, default 1.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// While alive, products issued from the current thread run on that thread
// only. Used by callers that already parallelize at a coarser grain.
class SerialScope {
 public:
  SerialScope();
  ~SerialScope();
  SerialScope(const SerialScope&) = delete;
  SerialScope& operator=(const SerialScope&) = delete;
};

}  // namespace msd::gemm
