// Compares the serial reference kernels against their OpenMP variants:
// wall time, speedup, and bit-exactness of the outputs.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "acr/features.hpp"
#include "acr/kernels.hpp"
#include "acr/rng.hpp"
#include "acr/synthdata.hpp"

using namespace acr;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    double t0 = now_seconds();
    fn();
    best = std::min(best, now_seconds() - t0);
  }
  return best;
}

void bench_gemm(const char* name,
                void (*serial)(int, int, int, const double*, int,
                               const double*, int, double*, int, bool),
                void (*parallel)(int, int, int, const double*, int,
                                 const double*, int, double*, int, bool),
                int m, int n, int k, std::mt19937_64& rng) {
  std::vector<double> a(static_cast<size_t>(m) * k);
  std::vector<double> b(static_cast<size_t>(k) * n);
  std::vector<double> c1(static_cast<size_t>(m) * n);
  std::vector<double> c2(static_cast<size_t>(m) * n);
  for (auto& v : a) v = gaussian(rng);
  for (auto& v : b) v = gaussian(rng);

  // Leading dimensions depend on the transpose layout.
  int lda = k, ldb = n;
  if (serial == kernels::gemm_nt_serial) ldb = k;
  if (serial == kernels::gemm_tn_serial) lda = m;

  int reps = std::max(1, static_cast<int>(2e8 / (static_cast<double>(m) * n * k)));
  double ts = time_best_of(reps, [&] {
    serial(m, n, k, a.data(), lda, b.data(), ldb, c1.data(), n, false);
  });
  double tp = time_best_of(reps, [&] {
    parallel(m, n, k, a.data(), lda, b.data(), ldb, c2.data(), n, false);
  });
  bool exact = c1 == c2;
  double gflops = 2.0 * m * n * k / ts / 1e9;
  std::printf("%-10s %4dx%4dx%4d  serial %8.3f ms (%5.2f GF/s)  omp %8.3f ms  speedup %4.2fx  %s\n",
              name, m, n, k, ts * 1e3, gflops, tp * 1e3, ts / tp,
              exact ? "bit-exact" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) kernels::set_num_threads(std::stoi(argv[1]));
  std::printf("threads: %d\n\n", kernels::num_threads());

  auto rng = seeded_rng(7);
  bench_gemm("gemm_nn", kernels::gemm_nn_serial, kernels::gemm_nn, 256, 64, 64, rng);
  bench_gemm("gemm_nn", kernels::gemm_nn_serial, kernels::gemm_nn, 256, 256, 256, rng);
  bench_gemm("gemm_nn", kernels::gemm_nn_serial, kernels::gemm_nn, 512, 512, 512, rng);
  bench_gemm("gemm_nt", kernels::gemm_nt_serial, kernels::gemm_nt, 256, 256, 64, rng);
  bench_gemm("gemm_nt", kernels::gemm_nt_serial, kernels::gemm_nt, 512, 512, 512, rng);
  bench_gemm("gemm_tn", kernels::gemm_tn_serial, kernels::gemm_tn, 256, 256, 256, rng);

  // CQT on one rendered segment.
  SynthSpec spec;
  spec.song_duration = kSegmentSeconds;
  auto label_rng = seeded_rng(7, 0);
  auto audio_rng = seeded_rng(7, 1);
  Timeline labels = generate_progression(spec, label_rng);
  Waveform audio = render_audio(labels, spec, audio_rng);

  CqtTransform transform;
  Spectrogram s1, s2;
  double ts = time_best_of(1, [&] { s1 = transform.transform_serial(audio); });
  double tp = time_best_of(1, [&] { s2 = transform.transform(audio); });
  std::printf("\n%-10s 25.6 s segment  serial %8.1f ms  omp %8.1f ms  speedup %4.2fx  %s\n",
              "cqt", ts * 1e3, tp * 1e3, ts / tp,
              s1 == s2 ? "bit-exact" : "MISMATCH");
  return 0;
}
