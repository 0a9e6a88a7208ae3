// Serial vs OpenMP timing of the parallel kernels on the desk-scale instance.
// Every parallel result is also compared bitwise against the serial one.

#include "msgfem/experiment.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace msgfem;

namespace {

double time_ms(const std::function<void()>& f, int reps) {
  if (reps > 1) f();  // warm-up: thread pool start, first-touch allocations
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-24s %10.3f %10.3f %8.2fx  %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark"};
  Index n = 64;
  int reps = 20;
  app.add_option("--n", n, "Cells per direction");
  app.add_option("--reps", reps, "Repetitions per timing");
  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  cfg.grid.nx = cfg.grid.ny = n;
  const Problem problem = build_problem(cfg);
  const SparseSym& a = problem.system.a_free;

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  std::printf("grid %dx%d, %d free dofs, %d OpenMP threads\n", n, n, a.size(), threads);
  std::printf("%-24s %10s %10s %9s\n", "kernel", "serial_ms", "omp_ms", "speedup");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist;
  Vector x(a.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = dist(rng);

  Vector ys, yp;
  const double spmv_s = time_ms([&] { ys = a.multiply(x, Exec::serial); }, reps * 50);
  const double spmv_p = time_ms([&] { yp = a.multiply(x, Exec::parallel); }, reps * 50);
  report("spmv", spmv_s, spmv_p, ys == yp);

  TwoLevelSetup setup_s, setup_p;
  const double setup_ser = time_ms([&] { setup_s = build_setup(problem, cfg, BasisKind::msgfem, Exec::serial); }, 1);
  const double setup_par = time_ms([&] { setup_p = build_setup(problem, cfg, BasisKind::msgfem, Exec::parallel); }, 1);
  report("setup (eigensolves)", setup_ser, setup_par, DenseMatrix(setup_s.coarse->basis) == DenseMatrix(setup_p.coarse->basis));

  Preconditioner bs, bp;
  const double fac_s = time_ms(
      [&] { bs = Preconditioner::build(problem.system, setup_s.decomp, setup_s.pu, cfg.scheme, setup_s.coarse, Exec::serial); }, 1);
  const double fac_p = time_ms(
      [&] { bp = Preconditioner::build(problem.system, setup_s.decomp, setup_s.pu, cfg.scheme, setup_s.coarse, Exec::parallel); }, 1);
  report("local factorizations", fac_s, fac_p, true);

  Vector zs, zp;
  const double app_s = time_ms([&] { zs = bs.apply(x, Exec::serial); }, reps);
  const double app_p = time_ms([&] { zp = bs.apply(x, Exec::parallel); }, reps);
  report("preconditioner apply", app_s, app_p, zs == zp);
  return 0;
}
