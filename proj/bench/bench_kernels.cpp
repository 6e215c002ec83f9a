// Timing comparison between the serial reference kernels and the OpenMP
// variants, plus a whole-pipeline forward/backward rate.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "semlink/dataset.hpp"
#include "semlink/kernels.hpp"
#include "semlink/losses.hpp"
#include "semlink/model.hpp"
#include "semlink/rng.hpp"
#include "semlink/transmit_path.hpp"

using namespace semlink;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<double> random_matrix(std::size_t n, RngStream& rng) {
  std::vector<double> m(n);
  for (double& v : m) v = rng.normal();
  return m;
}

void bench_matmul(std::size_t m, std::size_t k, std::size_t n, int reps) {
  RngStream rng(7);
  const std::vector<double> a = random_matrix(m * k, rng);
  const std::vector<double> b = random_matrix(k * n, rng);
  std::vector<double> c(m * n);

  const double t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    kernels::serial::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
  }
  const double serial_s = now_s() - t0;

  const double t1 = now_s();
  for (int r = 0; r < reps; ++r) {
    kernels::parallel::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
  }
  const double parallel_s = now_s() - t1;

  const double gflop = 2.0 * m * k * n * reps / 1e9;
  std::printf("matmul %4zux%4zux%4zu  serial %7.3f GF/s  omp %7.3f GF/s  "
              "speedup %.2fx\n",
              m, k, n, gflop / serial_s, gflop / parallel_s,
              serial_s / parallel_s);
}

void bench_pipeline(int reps) {
  DatasetConfig dc;
  dc.seed = 3;
  const Dataset data = generate_dataset(dc);
  ModelConfig mc;
  mc.input_dim = dc.pixels();
  mc.tasks = {{TaskKind::kReid, dc.num_identities, 1.0},
              {TaskKind::kColor, dc.num_colors, 0.125},
              {TaskKind::kType, dc.num_types, 0.125}};
  Pipeline pipeline(mc, 11);
  const Batch batch = make_batch(data.train);
  RngStream rng(5);

  const double t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    Graph g;
    Pipeline::Bound bound = pipeline.bind(g);
    const Tensor noise =
        draw_noise(batch.images.rows(), mc.latent_complex, 0.1, rng);
    PathResult path = forward_path(bound, g.input(batch.images),
                                   select_full(mc.latent_complex), 1.0,
                                   cplx{0.9, 0.2}, &noise);
    LossVars losses = compose_losses(g, mc.tasks, path.probs, batch, path.e,
                                     path.e_hat, LossSettings{});
    g.backward(losses.e2e);
  }
  const double dt = now_s() - t0;
  std::printf("pipeline fwd+bwd  batch %zu  %.1f steps/s\n",
              batch.images.rows(), reps / dt);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  bench_matmul(32, 256, 96, 2000);
  bench_matmul(128, 128, 128, 1000);
  bench_matmul(512, 512, 512, 20);
  bench_pipeline(300);
  return 0;
}
