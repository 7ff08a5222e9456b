// Timing comparison of the OpenMP kernels against their serial reference
// implementations: system assembly, sparse matrix-vector product, and the
// error indicators.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "eit/cem.hpp"
#include "eit/estimators.hpp"
#include "eit/experiments.hpp"
#include "eit/mesh.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best,
                    std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  int refinements = argc > 1 ? std::atoi(argv[1]) : 5;
  eit::RunConfig config;
  eit::Mesh mesh = config.initial_mesh();
  for (int i = 0; i < refinements; ++i) mesh = eit::uniform_refine(mesh);
  std::printf("mesh: %d vertices, %d elements\n", mesh.n_vertices(),
              mesh.n_elements());
#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (compiled without OpenMP)\n");
#endif

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(1.0, 2.0);
  eit::NodalField sigma(mesh.n_vertices());
  for (double& s : sigma) s = unif(rng);

  const double t_ser =
      time_best_of(3, [&] { eit::CemSystem::assemble_serial(mesh, sigma); });
  const double t_par =
      time_best_of(3, [&] { eit::CemSystem::assemble(mesh, sigma); });
  std::printf("assemble      serial %8.4f s  parallel %8.4f s  speedup %.2fx\n",
              t_ser, t_par, t_ser / t_par);

  const auto system = eit::CemSystem::assemble(mesh, sigma);
  std::vector<double> x(system.dim(), 1.0), y(system.dim());
  const double m_ser = time_best_of(3, [&] {
    for (int i = 0; i < 200; ++i) system.matrix().multiply_serial(x, y);
  });
  const double m_par = time_best_of(3, [&] {
    for (int i = 0; i < 200; ++i) system.matrix().multiply(x, y);
  });
  std::printf("matvec x200   serial %8.4f s  parallel %8.4f s  speedup %.2fx\n",
              m_ser, m_par, m_ser / m_par);

  const auto currents =
      eit::generate_currents(config.electrode_count, config.pattern_count);
  const eit::CemFactor factor(system);
  std::vector<eit::StateSolution> states, adjoints;
  for (const auto& I : currents) {
    auto s = factor.solve(system.rhs_from_current(I.values));
    adjoints.push_back(factor.solve(
        system.rhs_from_residual(s.voltages.values)));
    states.push_back(std::move(s));
  }
  const double e_par = time_best_of(3, [&] {
    eit::compute_indicators(mesh, sigma, states, adjoints, config.reg,
                            config.q);
  });
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  const double e_ser = time_best_of(3, [&] {
    eit::compute_indicators(mesh, sigma, states, adjoints, config.reg,
                            config.q);
  });
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
  std::printf("indicators    serial %8.4f s  parallel %8.4f s  speedup %.2fx\n",
              e_ser, e_par, e_ser / e_par);
  return 0;
}
