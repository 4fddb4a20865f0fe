// Benchmark: OpenMP assembly kernels against the serial reference path on a
// cubic lattice, with a deviation check between the two.

#include "latmech/reference.hpp"
#include "latmech/scenario.hpp"
#include "latmech/solver.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <random>

using namespace latmech;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latmech assembly benchmark: parallel kernels vs serial reference"};
  int n = 20;
  int reps = 10;
  app.add_option("--n", n, "grid size per axis");
  app.add_option("--reps", reps, "repetitions per kernel");
  CLI11_PARSE(app, argc, argv);

  const Scenario sc = generate_grid(n, n, n);
  const BuiltScenario built = build_problem(sc);
  const EquilibriumProblem& prob = built.problem;
  const auto states = prob.initial_bond_states();

  std::mt19937 rng(42);
  std::uniform_real_distribution<Real> bump(-0.02, 0.02);
  MatX3 x_p = prob.reference_free_positions();
  for (Eigen::Index i = 0; i < x_p.rows(); ++i)
    x_p.row(i) += Vec3{bump(rng), bump(rng), bump(rng)};
  const MatX3 x = prob.scatter_positions(x_p);

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("grid %dx%dx%d: %d nodes, %d bonds, %d free\n", n, n, n,
              prob.net().node_count(), prob.net().bond_count(),
              prob.partition().free_count());

  // warm both paths once and compare the nodal sums
  const SystemState st = assemble_state(prob, x_p, states);
  const reference::Assembled ref = reference::assemble(prob.net(), prob.laws(), x, states);
  const Real dev = (st.nodal - ref.nodal).cwiseAbs().maxCoeff();
  const Real fscale = st.f.rowwise().norm().sum();
  std::printf("max |parallel - reference| nodal deviation: %.3e (relative %.3e)\n", dev,
              dev / fscale);

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    const reference::Assembled a = reference::assemble(prob.net(), prob.laws(), x, states);
    (void)a;
  }
  const double serial_ms = ms_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    const SystemState a = assemble_state(prob, x_p, states);
    (void)a;
  }
  const double parallel_ms = ms_since(t0) / reps;

  t0 = Clock::now();
  for (int r = 0; r < reps; ++r) {
    const BlockSparseMatrix j = jacobian(prob, x_p, states);
    (void)j;
  }
  const double jac_ms = ms_since(t0) / reps;

  std::printf("reference assemble (serial): %9.3f ms\n", serial_ms);
  std::printf("parallel assemble:           %9.3f ms  (x%.2f)\n", parallel_ms,
              serial_ms / parallel_ms);
  std::printf("parallel jacobian:           %9.3f ms\n", jac_ms);
  return 0;
}
