#include <gtest/gtest.h>

#include <cmath>

#include "hons/integrators.hpp"
#include "oracles.hpp"

using namespace hons;

namespace {

Grid box512() { return make_grid(-50, 50, 512); }

Field sech_on(const Grid& g, double a = 1.0) {
  return Field::sample(g, [a](double x) { return a * oracle::sech(x); });
}

EvolveOptions loose() {
  EvolveOptions o;
  o.edge_tol = 1e-2;
  return o;
}

}  // namespace

TEST(Strang, LinearOnlyIsExactPropagator) {
  const Grid g = box512();
  const EquationParams p{1, 1, 0, 0, 0};
  const Field u = sech_on(g);
  EXPECT_LE(max_abs_difference(strang_step(u, 1e-2, p), linear_propagate(u, p, 1e-2)), 1e-14);
}

TEST(Strang, FirstOrderConsistency) {
  const Grid g = box512();
  const EquationParams p = problem_p(1, 1);
  const Field u = sech_on(g);
  const double a = std::sqrt(l2_norm_squared(strang_step(u, 1e-3, p) - u));
  const double b = std::sqrt(l2_norm_squared(strang_step(u, 5e-4, p) - u));
  EXPECT_NEAR(a / b, 2.0, 0.05);
}

TEST(Strang, CubicStepConservesMass) {
  const Grid g = box512();
  const Field u = sech_on(g, 1.3);
  const double m0 = l2_norm_squared(u);
  EXPECT_NEAR(l2_norm_squared(strang_step(u, 1e-2, problem_p(1, 1))), m0, 1e-12 * m0);
}

TEST(Strang, DerivativeNonlinearityUsesRk4Substep) {
  // plane wave: |u| constant, so N(u) = c u and the flow is a pure rotation
  const Grid g = make_grid(0, 2 * std::numbers::pi, 32);
  const EquationParams p{0.5, 1, 0.8, 0.3, 0.2};
  const double k = g.wavenumber(2);
  const cplx A(0.7, 0);
  const Field u = Field::sample(g, [&](double x) { return A * std::exp(cplx(0, k * x)); });
  const double dt = 1e-3;
  const cplx c = cplx(0, p.gamma * std::norm(A)) - p.delta * std::norm(A) * cplx(0, k) -
                 p.epsilon * std::norm(A) * cplx(0, -k);
  const cplx factor = std::exp((c + dispersion_multiplier(k, p)) * dt);
  const Field v = strang_step(u, dt, p);
  for (int j = 0; j < g.n; ++j) EXPECT_NEAR(std::abs(v[j] - factor * u[j]), 0.0, 1e-13);
}

TEST(IfRk4, LinearOnlyIsExactPropagator) {
  const Grid g = box512();
  const EquationParams p{1, 1, 0, 0, 0};
  const Field u = sech_on(g);
  EXPECT_LE(max_abs_difference(if_rk4_step(u, 1e-2, p), linear_propagate(u, p, 1e-2)), 1e-14);
}

TEST(IfRk4, AgreesWithStrang) {
  const Grid g = box512();
  const EquationParams p = problem_p(1, 1);
  const Field u0 = sech_on(g);
  const Trajectory a = evolve(u0, 0.1, 1e-4, Scheme::strang, p, 1000);
  const Trajectory b = evolve(u0, 0.1, 1e-4, Scheme::ifrk4, p, 1000);
  EXPECT_LE(max_abs_difference(a.states.back(), b.states.back()), 1e-6);
}

TEST(IfRk4, StabilityBoundIsReported) {
  const Grid g = box512();
  const EquationParams p{0, 1, 1, 1, 1};
  const Field u = sech_on(g, 2.0);
  const double bound = ifrk4_max_dt(u, p);
  EXPECT_NEAR(bound, 2.7 / (4.0 * (2.0 + 2.0 * g.k_max())), 1e-12 * bound);
  try {
    if_rk4_step(u, 2 * bound, p);
    FAIL() << "expected a stability error";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("use dt <="), std::string::npos);
  }
  EXPECT_NO_THROW(if_rk4_step(u, 0.5 * bound, p));
  EXPECT_TRUE(std::isinf(ifrk4_max_dt(Field(g), p)));
}

TEST(Evolve, StepCountAndStride) {
  const Grid g = box512();
  const Field u0 = sech_on(g);
  const Trajectory one = evolve(u0, 1e-3, 1e-3, Scheme::strang, problem_p(1, 1), 1);
  ASSERT_EQ(one.states.size(), 2u);
  EXPECT_EQ(one.times[0], 0.0);
  EXPECT_EQ(one.times[1], 1e-3);

  const Trajectory s = evolve(u0, 0.01, 1e-3, Scheme::strang, problem_p(1, 1), 3);
  ASSERT_EQ(s.times.size(), 5u);  // steps 0, 3, 6, 9 and the final 10
  EXPECT_NEAR(s.times.back(), 0.01, 1e-15);
  EXPECT_NEAR(s.times[1], 3e-3, 1e-15);

  EXPECT_THROW(evolve(u0, 0.0105, 1e-3, Scheme::strang, problem_p(1, 1), 1), ValidationError);
  EXPECT_THROW(evolve(u0, 0.0, 1e-3, Scheme::strang, problem_p(1, 1), 1), ValidationError);
  EXPECT_THROW(evolve(u0, 0.01, 1e-3, Scheme::strang, problem_p(1, 1), 0), ValidationError);
  EXPECT_THROW(parse_scheme("euler"), ValidationError);
}

TEST(Evolve, MassConservedOverUnitTime) {
  const Grid g = box512();
  const Field u0 = sech_on(g);
  const Trajectory tr = evolve(u0, 1.0, 5e-4, Scheme::strang, problem_p(1, 1), 2000, loose());
  const double m0 = l2_norm_squared(u0);
  EXPECT_LE(std::abs(l2_norm_squared(tr.states.back()) - m0), 1e-8 * m0);
}

TEST(Evolve, LinearFlowReverses) {
  const Grid g = box512();
  const EquationParams p{1, 1, 0, 0, 0};
  const Field u0 = sech_on(g);
  const Trajectory tr = evolve(u0, 0.5, 1e-2, Scheme::strang, p, 50, loose());
  EXPECT_LE(max_abs_difference(linear_propagate(tr.states.back(), p, -0.5), u0), 1e-10);
}

TEST(Evolve, EdgeGuardReportsTime) {
  const Grid g = make_grid(-10, 10, 128);
  const Field u0 = Field::sample(g, [](double x) { return std::exp(-x * x / 4.0); });
  try {
    evolve(u0, 1.0, 1e-3, Scheme::strang, problem_p(1, 1), 1);
    FAIL() << "expected a guard abort";
  } catch (const GuardError& e) {
    EXPECT_GE(e.time(), 0.0);
    EXPECT_LE(e.time(), 1.0);
  }
}

TEST(Evolve, UniquenessProxy) {
  const Grid g = box512();
  const Field a0 = sech_on(g);
  Field b0 = a0;
  const Field bump = Field::sample(g, [](double x) { return std::exp(-x * x); });
  const double d0 = 1e-8;
  b0 = b0 + (d0 / std::sqrt(h1_norm_squared(bump))) * bump;
  ASSERT_NEAR(std::sqrt(h1_norm_squared(b0 - a0)), d0, 1e-12);
  const Trajectory a = evolve(a0, 0.1, 1e-3, Scheme::strang, problem_p(1, 1), 10);
  const Trajectory b = evolve(b0, 0.1, 1e-3, Scheme::strang, problem_p(1, 1), 10);
  for (std::size_t j = 0; j < a.states.size(); ++j)
    EXPECT_LE(std::sqrt(h1_norm_squared(a.states[j] - b.states[j])), 100 * d0);
}

TEST(Picard, ZeroSourceIsUnitaryFlow) {
  const Grid g = make_grid(-30, 30, 256);
  const EquationParams p = problem_p(1, 1);
  const Field v0 = helmholtz_apply(sech_on(g));
  const int steps = 20;
  const std::vector<Field> z(steps + 1, Field(g));
  const auto out = picard_apply_Z(z, v0, 0.02, 1e-3, p);
  ASSERT_EQ(out.size(), z.size());
  const double m0 = l2_norm_squared(v0);
  for (const auto& v : out) EXPECT_NEAR(l2_norm_squared(v), m0, 1e-10 * m0);
  EXPECT_LE(max_abs_difference(out.back(), linear_propagate(v0, p, 0.02)), 1e-12 * max_abs(v0));
}

TEST(Picard, LinearInInitialValue) {
  const Grid g = make_grid(-30, 30, 256);
  const EquationParams p = problem_p(1, 1);
  const Field u0 = sech_on(g, 0.5);
  const Field v0 = helmholtz_apply(u0);
  const std::vector<Field> z(11, v0);
  const auto zero = picard_apply_Z(z, Field(g), 0.01, 1e-3, p);
  EXPECT_EQ(max_abs(zero.back()), 0.0);
  const auto one = picard_apply_Z(z, v0, 0.01, 1e-3, p);
  const auto three = picard_apply_Z(z, 3.0 * v0, 0.01, 1e-3, p);
  EXPECT_LE(max_abs_difference(three.back(), 3.0 * one.back()), 1e-10 * max_abs(three.back()));
  EXPECT_THROW(picard_apply_Z(std::vector<Field>(5, v0), v0, 0.01, 1e-3, p), ValidationError);
  EXPECT_THROW(picard_apply_Z(z, v0, 0.01, 1e-3, EquationParams{1, 1, 1, 0.5, 0}), ValidationError);
}

TEST(Picard, ZeroDataConvergesAtOnce) {
  const Grid g = make_grid(-30, 30, 128);
  const PicardResult r = picard_solve(Field(g), 0.01, 1e-3, problem_p(1, 1), 10, 1e-12);
  EXPECT_TRUE(r.history.converged);
  ASSERT_EQ(r.history.deltas.size(), 1u);
  EXPECT_EQ(r.history.deltas[0], 0.0);
  EXPECT_EQ(max_abs(r.u), 0.0);
}

TEST(Picard, ContractsAndMatchesStrang) {
  const Grid g = make_grid(-30, 30, 256);
  const EquationParams p = problem_p(1, 1);
  const Field u0 = sech_on(g, 0.5);
  const PicardResult r = picard_solve(u0, 0.02, 1e-4, p, 20, 1e-12);
  EXPECT_TRUE(r.history.converged);
  EXPECT_EQ(r.history.deltas.size() + 1, r.history.iterates.size());
  for (std::size_t j = 2; j < r.history.deltas.size(); ++j)
    EXPECT_LE(r.history.deltas[j], 0.8 * r.history.deltas[j - 1]);
  const Trajectory s = evolve(u0, 0.02, 1e-4, Scheme::strang, p, 200);
  EXPECT_LE(std::sqrt(l2_norm_squared(r.u - s.states.back())), 1e-4);
}

TEST(Picard, ExhaustedIterationsReportNotConverged) {
  const Grid g = make_grid(-30, 30, 128);
  const PicardResult r = picard_solve(sech_on(g, 0.5), 0.01, 1e-3, problem_p(1, 1), 2, 1e-30);
  EXPECT_FALSE(r.history.converged);
  EXPECT_EQ(r.history.deltas.size(), 2u);
  EXPECT_EQ(r.history.iterates.size(), 3u);
  EXPECT_TRUE(all_finite(r.u));
  EXPECT_THROW(picard_solve(sech_on(g), 0.01, 1e-3, problem_p(1, 1), 0, 1e-3), ValidationError);
}
