// GEMM kernel correctness and serial/parallel agreement.
#include <array>
#include <vector>

#include "acr/kernels.hpp"
#include "acr/rng.hpp"
#include "doctest.h"

using namespace acr;

namespace {

// Textbook reference for C = A(m,k) * B(k,n) with optional transposes,
// deliberately written as the obvious triple loop.
std::vector<double> naive(int m, int n, int k, const std::vector<double>& a,
                          const std::vector<double>& b, bool ta, bool tb) {
  std::vector<double> c(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int kk = 0; kk < k; ++kk) {
        double av = ta ? a[static_cast<size_t>(kk) * m + i]
                       : a[static_cast<size_t>(i) * k + kk];
        double bv = tb ? b[static_cast<size_t>(j) * k + kk]
                       : b[static_cast<size_t>(kk) * n + j];
        acc += av * bv;
      }
      c[static_cast<size_t>(i) * n + j] = acc;
    }
  }
  return c;
}

std::vector<double> random_vec(size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = gaussian(rng);
  return v;
}

}  // namespace

TEST_CASE("gemm variants match the naive reference") {
  auto rng = seeded_rng(41);
  const std::vector<std::array<int, 3>> sizes = {
      {3, 5, 4}, {17, 9, 33}, {64, 64, 64}};
  for (auto [m, n, k] : sizes) {
    auto a = random_vec(static_cast<size_t>(m) * k, rng);
    auto b = random_vec(static_cast<size_t>(k) * n, rng);
    std::vector<double> c(static_cast<size_t>(m) * n);

    kernels::gemm_nn_serial(m, n, k, a.data(), k, b.data(), n, c.data(), n,
                            false);
    CHECK(c == naive(m, n, k, a, b, false, false));

    auto bt = random_vec(static_cast<size_t>(n) * k, rng);
    kernels::gemm_nt_serial(m, n, k, a.data(), k, bt.data(), k, c.data(), n,
                            false);
    auto want_nt = naive(m, n, k, a, bt, false, true);
    for (size_t i = 0; i < c.size(); ++i) {
      CHECK(c[i] == doctest::Approx(want_nt[i]).epsilon(1e-12));
    }

    auto at = random_vec(static_cast<size_t>(k) * m, rng);
    kernels::gemm_tn_serial(m, n, k, at.data(), m, b.data(), n, c.data(), n,
                            false);
    CHECK(c == naive(m, n, k, at, b, true, false));
  }
}

TEST_CASE("accumulate adds on top of existing values") {
  auto rng = seeded_rng(42);
  int m = 8, n = 6, k = 10;
  auto a = random_vec(static_cast<size_t>(m) * k, rng);
  auto b = random_vec(static_cast<size_t>(k) * n, rng);
  std::vector<double> c0(static_cast<size_t>(m) * n, 1.5);
  std::vector<double> c1 = c0;
  kernels::gemm_nn_serial(m, n, k, a.data(), k, b.data(), n, c1.data(), n,
                          true);
  auto prod = naive(m, n, k, a, b, false, false);
  for (size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i] == doctest::Approx(c0[i] + prod[i]));
  }
}

TEST_CASE("parallel kernels are bit-exact against serial") {
  auto rng = seeded_rng(43);
  kernels::set_num_threads(2);
  const std::vector<std::array<int, 3>> sizes = {{128, 96, 64}, {301, 33, 77}};
  for (auto [m, n, k] : sizes) {
    auto a = random_vec(static_cast<size_t>(m) * k, rng);
    auto b = random_vec(static_cast<size_t>(k) * n, rng);
    auto bt = random_vec(static_cast<size_t>(n) * k, rng);
    auto at = random_vec(static_cast<size_t>(k) * m, rng);
    std::vector<double> cs(static_cast<size_t>(m) * n);
    std::vector<double> cp(static_cast<size_t>(m) * n);

    kernels::gemm_nn_serial(m, n, k, a.data(), k, b.data(), n, cs.data(), n, false);
    kernels::gemm_nn(m, n, k, a.data(), k, b.data(), n, cp.data(), n, false);
    CHECK(cs == cp);

    kernels::gemm_nt_serial(m, n, k, a.data(), k, bt.data(), k, cs.data(), n, false);
    kernels::gemm_nt(m, n, k, a.data(), k, bt.data(), k, cp.data(), n, false);
    CHECK(cs == cp);

    kernels::gemm_tn_serial(m, n, k, at.data(), m, b.data(), n, cs.data(), n, false);
    kernels::gemm_tn(m, n, k, at.data(), m, b.data(), n, cp.data(), n, false);
    CHECK(cs == cp);
  }
  kernels::set_num_threads(1);
}

TEST_CASE("strided views multiply the right submatrix") {
  // Columns [2, 2+3) of a row-major 4x8 matrix as the left operand.
  auto rng = seeded_rng(44);
  int rows = 4, cols = 8, sub = 3, n = 5;
  auto a = random_vec(static_cast<size_t>(rows) * cols, rng);
  auto b = random_vec(static_cast<size_t>(sub) * n, rng);
  std::vector<double> c(static_cast<size_t>(rows) * n);
  kernels::gemm_nn_serial(rows, n, sub, a.data() + 2, cols, b.data(), n,
                          c.data(), n, false);

  std::vector<double> a_packed(static_cast<size_t>(rows) * sub);
  for (int r = 0; r < rows; ++r) {
    for (int s = 0; s < sub; ++s) {
      a_packed[static_cast<size_t>(r) * sub + s] =
          a[static_cast<size_t>(r) * cols + 2 + s];
    }
  }
  CHECK(c == naive(rows, n, sub, a_packed, b, false, false));
}
