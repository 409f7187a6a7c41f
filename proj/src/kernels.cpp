#include "acr/kernels.hpp"

#include <algorithm>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace acr::kernels {

namespace {

int g_threads = 0;  // 0 = OpenMP default

inline bool use_parallel(long flops) {
#ifdef _OPENMP
  if (omp_in_parallel()) return false;  // caller already parallelized
  return flops >= (1L << 16) && num_threads() > 1;
#else
  (void)flops;
  return false;
#endif
}

inline void row_nn(int n, int k, const double* a, const double* b, int ldb,
                   double* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(n));
  for (int kk = 0; kk < k; ++kk) {
    double av = a[kk];
    if (av == 0.0) continue;
    const double* brow = b + static_cast<size_t>(kk) * ldb;
    for (int j = 0; j < n; ++j) c[j] += av * brow[j];
  }
}

inline void row_nt(int n, int k, const double* a, const double* b, int ldb,
                   double* c, bool accumulate) {
  for (int j = 0; j < n; ++j) {
    const double* brow = b + static_cast<size_t>(j) * ldb;
    double acc = 0;
    for (int kk = 0; kk < k; ++kk) acc += a[kk] * brow[kk];
    if (accumulate) {
      c[j] += acc;
    } else {
      c[j] = acc;
    }
  }
}

inline void row_tn(int i, int n, int k, const double* a, int lda,
                   const double* b, int ldb, double* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * static_cast<size_t>(n));
  for (int kk = 0; kk < k; ++kk) {
    double av = a[static_cast<size_t>(kk) * lda + i];
    if (av == 0.0) continue;
    const double* brow = b + static_cast<size_t>(kk) * ldb;
    for (int j = 0; j < n; ++j) c[j] += av * brow[j];
  }
}

}  // namespace

void gemm_nn_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate) {
  for (int i = 0; i < m; ++i) {
    row_nn(n, k, a + static_cast<size_t>(i) * lda, b, ldb,
           c + static_cast<size_t>(i) * ldc, accumulate);
  }
}

void gemm_nn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  if (!use_parallel(static_cast<long>(m) * n * k)) {
    gemm_nn_serial(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    row_nn(n, k, a + static_cast<size_t>(i) * lda, b, ldb,
           c + static_cast<size_t>(i) * ldc, accumulate);
  }
}

void gemm_nt_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate) {
  for (int i = 0; i < m; ++i) {
    row_nt(n, k, a + static_cast<size_t>(i) * lda, b, ldb,
           c + static_cast<size_t>(i) * ldc, accumulate);
  }
}

void gemm_nt(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  if (!use_parallel(static_cast<long>(m) * n * k)) {
    gemm_nt_serial(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    row_nt(n, k, a + static_cast<size_t>(i) * lda, b, ldb,
           c + static_cast<size_t>(i) * ldc, accumulate);
  }
}

void gemm_tn_serial(int m, int n, int k, const double* a, int lda,
                    const double* b, int ldb, double* c, int ldc,
                    bool accumulate) {
  for (int i = 0; i < m; ++i) {
    row_tn(i, n, k, a, lda, b, ldb, c + static_cast<size_t>(i) * ldc,
           accumulate);
  }
}

void gemm_tn(int m, int n, int k, const double* a, int lda, const double* b,
             int ldb, double* c, int ldc, bool accumulate) {
  if (!use_parallel(static_cast<long>(m) * n * k)) {
    gemm_tn_serial(m, n, k, a, lda, b, ldb, c, ldc, accumulate);
    return;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    row_tn(i, n, k, a, lda, b, ldb, c + static_cast<size_t>(i) * ldc,
           accumulate);
  }
}

void set_num_threads(int n) {
  g_threads = std::max(0, n);
#ifdef _OPENMP
  if (g_threads > 0) omp_set_num_threads(g_threads);
#endif
}

int num_threads() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace acr::kernels
