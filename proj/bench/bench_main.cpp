// Compares the OpenMP kernels against their serial reference paths on the
// two workloads that dominate runtime: correction-field sampling and
// Monte-Carlo norm estimation.  Also asserts that both paths agree bitwise.
#include <chrono>
#include <cstdio>
#include <cstring>

#include "oqho/commands.hpp"
#include "oqho/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace oqho;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds(clock_type::time_point a, clock_type::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

int main(int argc, char** argv) {
  int grid_count = 64;
  std::uint64_t mc_count = 200000;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--grid") && i + 1 < argc) grid_count = std::atoi(argv[++i]);
    if (!std::strcmp(argv[i], "--mc") && i + 1 < argc) mc_count = std::atoll(argv[++i]);
  }

  auto cfg = config::parse_config(commands::bundled_config("example1"));
  const auto ss = model::build_state_space(cfg.mdl);
  const Mat P = gaussian::invariant_covariance(ss).P;
  const auto ctx = perturb::make_context(cfg.mdl, ss, P, cfg.variation);
  const auto pair = bounds::find_lyapunov_pair(ss);

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif

  {
    spectral::grid_spec ax{grid_count, 2.0 * 8.0 * std::sqrt(P.diagonal().maxCoeff()) / grid_count};
    std::vector<spectral::grid_spec> grid(2, ax);
    auto t0 = clock_type::now();
    auto serial = spectral::sample_qcf_correction(ctx, grid, spectral::exec_policy::serial);
    auto t1 = clock_type::now();
    auto parallel = spectral::sample_qcf_correction(ctx, grid, spectral::exec_policy::parallel);
    auto t2 = clock_type::now();
    bool identical = serial.cvalues == parallel.cvalues;
    std::printf("field %dx%d   serial %.3fs   openmp %.3fs   speedup %.2fx   identical %s\n",
                grid_count, grid_count, seconds(t0, t1), seconds(t1, t2),
                seconds(t0, t1) / seconds(t1, t2), identical ? "yes" : "NO");
    if (!identical) return 1;
  }
  {
    numerics::seeded_sampler sampler{42, 0};
    auto t0 = clock_type::now();
    auto serial = bounds::mc_norm_bounds(pair, ctx, 1.0, sampler, mc_count,
                                         spectral::exec_policy::serial);
    auto t1 = clock_type::now();
    auto parallel = bounds::mc_norm_bounds(pair, ctx, 1.0, sampler, mc_count,
                                           spectral::exec_policy::parallel);
    auto t2 = clock_type::now();
    bool identical = serial.f_norm.value == parallel.f_norm.value &&
                     serial.g_norm.value == parallel.g_norm.value;
    std::printf("mc %-9llu serial %.3fs   openmp %.3fs   speedup %.2fx   identical %s\n",
                static_cast<unsigned long long>(mc_count), seconds(t0, t1), seconds(t1, t2),
                seconds(t0, t1) / seconds(t1, t2), identical ? "yes" : "NO");
    if (!identical) return 1;
  }
  return 0;
}
