#include "mpecbt/bundle.hpp"
#include "mpecbt/linalg.hpp"
#include "mpecbt/oracle.hpp"
#include "mpecbt/problems.hpp"
#include "mpecbt/reduced_newton.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace mpecbt;

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = unif(rng);
  return a;
}

void BM_QrPivoted(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const Matrix d = random_matrix(n, n / 2, 1) * random_matrix(n / 2, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(qr_pivoted(d));
}
BENCHMARK(BM_QrPivoted)->Arg(8)->Arg(32)->Arg(128);

void BM_OracleProjection(benchmark::State& state) {
  Vector y0(3);
  y0 << 1.0, 2.0, 3.0;
  const MpecProblem p = projection_bilevel(y0);
  Vector x(3);
  x << 3.0, 1.0, 50.0;
  for (auto _ : state) benchmark::DoNotOptimize(pseudogradient(p, x));
}
BENCHMARK(BM_OracleProjection);

void BM_OracleOligopoly(benchmark::State& state) {
  const LoadedProblem lp = load_problem_file(MPECBT_CONFIG_DIR "/oligopoly_synthetic.json");
  for (auto _ : state) benchmark::DoNotOptimize(pseudogradient(*lp.mpec, lp.x0));
}
BENCHMARK(BM_OracleOligopoly);

void BM_BundleQp(benchmark::State& state) {
  const Eigen::Index n = 10;
  const auto k = static_cast<std::size_t>(state.range(0));
  const Matrix g = random_matrix(n, static_cast<Eigen::Index>(k), 3);
  std::vector<BundleElement> bundle;
  for (std::size_t j = 0; j < k; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    bundle.push_back({Vector::Zero(n), 0.0, g.col(col), 0.1 * static_cast<double>(j)});
  }
  const Polyhedron box = Polyhedron::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_bundle_qp(bundle, Vector::Zero(n), 1.0, box));
}
BENCHMARK(BM_BundleQp)->Arg(5)->Arg(20)->Arg(50);

void BM_BtProjectionRun1(benchmark::State& state) {
  Vector y0(3);
  y0 << 1.0, 2.0, 3.0;
  const MpecProblem p = projection_bilevel(y0);
  const Vector x0 = Vector::Constant(3, 3.0);
  for (auto _ : state) {
    ReducedObjective obj(p);
    benchmark::DoNotOptimize(bt_minimize(
        [&](const Vector& x) {
          const OracleOutput o = obj(x);
          return OracleValue{o.value, o.xi};
        },
        p.admissible, x0, BtOptions{}));
  }
}
BENCHMARK(BM_BtProjectionRun1);

void BM_ReducedNewtonBox(benchmark::State& state) {
  const DecomposableProblem dp = custom_quadratic(quadratic_box_model());
  const Vector x0 = Vector::Zero(5);
  for (auto _ : state) benchmark::DoNotOptimize(ssnewton_minimize(dp, x0));
}
BENCHMARK(BM_ReducedNewtonBox);

}  // namespace

BENCHMARK_MAIN();
