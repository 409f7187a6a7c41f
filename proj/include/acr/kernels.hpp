// Dense matrix kernels, row-major with explicit leading dimensions.
//
// Every kernel has a serial reference implementation and an OpenMP variant
// that partitions output rows. Both orders the per-element accumulation
// identically, so results are bit-exact across thread counts; the *_serial
// functions stay as the comparison baseline for tests and the benchmark.
#pragma once

namespace acr::kernels {

// C[m x n] (+)= A[m x k] * B[k x n]
void gemm_nn_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate = false);
void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate = false);

// C[m x n] (+)= A[m x k] * B[n x k]^T
void gemm_nt_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate = false);
void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate = false);

// C[m x n] (+)= A[k x m]^T * B[k x n]
void gemm_tn_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate = false);
void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate = false);

// Thread control for all parallel kernels (and the feature frontend).
// n <= 0 resets to the OpenMP default.
void set_num_threads(int n);
int num_threads();

}  // namespace acr::kernels
