#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include "hons/experiments.hpp"
#include "oracles.hpp"

using namespace hons;
using std::numbers::pi;

namespace {

ExperimentConfig sech_config(double omega = 1.0) {
  ExperimentConfig c;
  c.params = problem_p(omega, 1);
  c.grid = make_grid(-50, 50, 512);
  c.T = 0.2;
  c.dt = 1e-3;
  c.stride = 10;
  c.edge_tol = 1e-2;
  return c;
}

ExperimentConfig rough_config(int n) {
  ExperimentConfig c;
  c.params = problem_p(1, 1);
  c.grid = make_grid(-64, 64, n);
  c.initial.kind = "rough_decaying";
  c.initial.width = 6;
  c.initial.L = 3;
  c.initial.seed = 20240607;
  c.weights = {{0.5, 3, 0}};
  c.T = 0.1;
  c.dt = 1e-3;
  c.stride = 10;
  c.edge_tol = 1e-2;
  return c;
}

ExperimentConfig gauge_config(double omega, double delta = 0, double epsilon = 0) {
  ExperimentConfig c;
  c.params = EquationParams{omega, 1, 1, delta, epsilon};
  c.grid = make_grid(-8 * pi, 8 * pi, 256);
  c.T = 0.1;
  c.dt = 1e-3;
  c.edge_tol = 1e-2;
  return c;
}

}  // namespace

TEST(Initial, SechAndGaussianFormulas) {
  const Grid g = make_grid(-20, 20, 128);
  InitialSpec s;
  s.amplitude = 0.0;
  EXPECT_EQ(max_abs(make_initial(s, g)), 0.0);

  s.amplitude = 1.5;
  s.width = 2.0;
  s.phase_c = 0.3;
  const Field u = make_initial(s, g);
  for (int j = 0; j < g.n; j += 9)
    EXPECT_NEAR(std::abs(u[j] - 1.5 * oracle::sech(g.x(j) / 2.0) * std::exp(cplx(0, 0.3 * g.x(j)))), 0.0, 1e-15);

  s.kind = "gaussian";
  const Field v = make_initial(s, g);
  for (int j = 0; j < g.n; j += 9)
    EXPECT_NEAR(std::abs(v[j] - 1.5 * std::exp(-g.x(j) * g.x(j) / 4.0) * std::exp(cplx(0, 0.3 * g.x(j)))), 0.0, 1e-15);

  s.kind = "soliton";
  EXPECT_THROW(make_initial(s, g), ValidationError);
}

TEST(Initial, RoughDataIsDeterministic) {
  const ExperimentConfig c = rough_config(512);
  const Field a = make_initial(c);
  const Field b = make_initial(c);
  EXPECT_EQ(a.values, b.values);
  ExperimentConfig d = c;
  d.initial.seed += 1;
  EXPECT_GT(max_abs_difference(a, make_initial(d)), 1e-3);
}

TEST(Initial, RoughDataSamplesOneFunctionAcrossGrids) {
  const Field a = make_initial(rough_config(512));
  const Field b = make_initial(rough_config(1024));
  // only the quadrature of the normalization differs between the two grids
  for (int j = 0; j < 512; ++j) EXPECT_NEAR(std::abs(a[j] - b[2 * j]), 0.0, 1e-8 * max_abs(a));
}

TEST(Initial, RoughDataWitness) {
  const ExperimentConfig c = rough_config(1024);
  const Field u = make_initial(c);
  EXPECT_NEAR(l2_norm_squared(u), 1.0, 1e-12);
  const double w = weighted_norm(u, 3, canonical_weight({0, c.L(), 0}), 1.0).value;
  EXPECT_TRUE(std::isfinite(w));
  EXPECT_GE(std::sqrt(sobolev_norm_squared(u, 5) / sobolev_norm_squared(u, 3)), 10.0);
}

TEST(ParallelMap, OrderAndErrors) {
  const auto v = parallel_map(37, [](std::size_t j) { return static_cast<int>(j * j); });
  for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(v[j], static_cast<int>(j * j));
  EXPECT_THROW(parallel_map(5, [](std::size_t j) -> int {
                 if (j == 3) throw std::runtime_error("boom");
                 return 0;
               }),
               std::runtime_error);
  ::setenv("HONS_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3u);
  ::unsetenv("HONS_THREADS");
}

TEST(Persistence, ZeroData) {
  ExperimentConfig c = sech_config();
  c.initial.amplitude = 0.0;
  const PersistenceReport r = persistence_experiment(c);
  EXPECT_EQ(r.sup_norm, 0.0);
  EXPECT_EQ(r.smoothing_integral, 0.0);
  EXPECT_TRUE(r.ok);
}

TEST(Persistence, SechFiniteAndGridStable) {
  ExperimentConfig c = sech_config();
  c.T = 1.0;
  c.stride = 50;
  c.weights = {{0.5, 1, 0}};
  const PersistenceReport a = persistence_experiment(c);
  c.grid = make_grid(-50, 50, 1024);
  const PersistenceReport b = persistence_experiment(c);
  EXPECT_TRUE(a.ok);
  EXPECT_TRUE(std::isfinite(a.smoothing_integral));
  EXPECT_LT(std::abs(a.sup_norm - b.sup_norm), 0.01 * a.sup_norm);
  EXPECT_EQ(a.norm_weight, (WeightSpec{0, 1, 0}));
  EXPECT_EQ(a.eta_weight, (WeightSpec{0.5, 1, 0}));
}

TEST(Persistence, PartialIntegralMatchesLocalSmoothing) {
  ExperimentConfig c = sech_config();
  c.weights = {{0.5, 1, 0}};
  const PersistenceReport r = persistence_experiment(c);
  const Trajectory tr = evolve(make_initial(c), c.T, c.dt, c.scheme, c.params, c.stride, c.evolve_options());
  const double direct = local_smoothing_integral(tr, c.L(), canonical_weight(r.eta_weight));
  EXPECT_NEAR(r.smoothing_integral, direct, 1e-12 * direct);
  EXPECT_EQ(r.partial_integral.front(), 0.0);
  for (std::size_t j = 1; j < r.partial_integral.size(); ++j) EXPECT_GE(r.partial_integral[j], r.partial_integral[j - 1]);
}

TEST(Smoothing, LevelsAndFiniteness) {
  EXPECT_EQ(smoothing_levels(2), 2);
  EXPECT_EQ(smoothing_levels(3), 3);
  EXPECT_EQ(smoothing_levels(10), 6);
  const ExperimentConfig c = rough_config(512);
  const SmoothingReport r = smoothing_experiment(c);
  EXPECT_TRUE(r.finite);
  ASSERT_EQ(r.levels.size(), 3u);
  EXPECT_NEAR(r.window_start, 0.01, 1e-15);
  for (const auto& row : r.rows) {
    EXPECT_GE(row.t, r.window_start - 1e-12);
    EXPECT_TRUE(std::isfinite(row.weighted_norm));
  }
}

TEST(Smoothing, LevelZeroMatchesDirectNormAndWeightOrdering) {
  const ExperimentConfig c = rough_config(512);
  const SmoothingReport r = smoothing_experiment(c);
  const Trajectory tr = evolve(make_initial(c), c.T, c.dt, c.scheme, c.params, c.stride, c.evolve_options());
  const Field& last = tr.states.back();
  const double t = tr.times.back();
  const SmoothingRow* l0 = nullptr;
  const SmoothingRow* l2 = nullptr;
  for (const auto& row : r.rows) {
    if (row.t != t) continue;
    if (row.l == 0) l0 = &row;
    if (row.l == 2) l2 = &row;
  }
  ASSERT_TRUE(l0 && l2);
  const double direct0 = weighted_norm(last, 3, canonical_weight({0.5, 3, 0}), t).value;
  EXPECT_NEAR(l0->weighted_norm, direct0, 1e-12 * direct0);
  // the same level with polynomial power L in place of L - l is at least as large
  const double wrong = weighted_norm(last, 5, canonical_weight({0.5, 3, 2}), t).value;
  EXPECT_GE(wrong, l2->weighted_norm);
}

TEST(Smoothing, Gates) {
  ExperimentConfig c = rough_config(512);
  c.params = problem_p(3, 1);
  EXPECT_THROW(smoothing_experiment(c), ValidationError);
  c = rough_config(512);
  c.initial.L = 1;
  EXPECT_THROW(smoothing_experiment(c), ValidationError);
}

TEST(Gauge, OmegaZeroLegsCoincide) {
  const GaugeReport r = gauge_equivalence_experiment(gauge_config(0.0));
  EXPECT_LE(r.l2, 1e-12);
  EXPECT_FALSE(r.probe.has_value());
}

TEST(Gauge, CubicCaseLegsAgree) {
  const GaugeReport r = gauge_equivalence_experiment(gauge_config(3.0));
  EXPECT_LE(r.l2, 1e-6);
  EXPECT_LE(r.linf, 1e-6);
}

TEST(Gauge, ProbePicksOneCoefficient) {
  const GaugeReport r = gauge_equivalence_experiment(gauge_config(3.0, 1.0, 0.5));
  ASSERT_TRUE(r.probe.has_value());
  EXPECT_GE(r.probe->ratio, 100.0);
  EXPECT_EQ(r.probe->match, "derived");
  EXPECT_DOUBLE_EQ(r.probe->derived_gamma, 1.0 + (0.5 - 1.0) * 1.0);
}

TEST(Gauge, IncompatibleBoxRejected) {
  ExperimentConfig c = gauge_config(3.0);
  c.grid = make_grid(-25, 25, 256);
  EXPECT_THROW(gauge_equivalence_experiment(c), ValidationError);
}

TEST(Convergence, LinearOnlyIsExact) {
  ExperimentConfig c = sech_config();
  c.params = EquationParams{1, 1, 0, 0, 0};
  c.T = 0.05;
  c.convergence.strang_dt = 1e-2;
  c.convergence.ifrk4_dt = 1e-2;
  const ConvergenceReport r = convergence_study(c, 3);
  for (const auto& [s, exact] : r.exact) EXPECT_TRUE(exact) << scheme_name(s);
  for (const auto& row : r.rows) EXPECT_LT(row.error_ref, 1e-12);
  EXPECT_THROW(convergence_study(c, 2), ValidationError);
}

TEST(Smoothing, SteeperLeftWeight) {
  ExperimentConfig c = rough_config(512);
  c.weights = {{1.0, 3, 0}};
  const SmoothingReport r = smoothing_experiment(c);
  EXPECT_TRUE(r.finite);
  EXPECT_EQ(r.sigma, 1.0);
  for (const auto& lv : r.levels) EXPECT_TRUE(std::isfinite(lv.integral));
}
