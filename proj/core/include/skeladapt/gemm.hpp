#pragma once

namespace skeladapt {

/// Row-major C = alpha * op(A) * op(B) + beta * C with op = identity or transpose.
/// Dispatches to BLAS sgemm/dgemm; m, n, k describe op(A) [m x k] and op(B) [k x n].
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb,
          T beta, T* c, int ldc);

}  // namespace skeladapt
