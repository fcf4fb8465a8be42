#pragma once

// Experiment drivers: initial data, persistence, smoothing diagnostics,
// gauge equivalence and convergence studies. Each driver is a deterministic
// function of its configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hons/error.hpp"
#include "hons/hnls_model.hpp"
#include "hons/identities.hpp"
#include "hons/integrators.hpp"
#include "hons/spectral_grid.hpp"
#include "hons/weights.hpp"

namespace hons {

struct InitialSpec {
  std::string kind = "sech";
  double amplitude = 1.0;
  double width = 1.0;    // sech/gaussian length scale; band cutoff |k| <= width for rough data
  double phase_c = 0.0;  // carrier e^{i c x}
  int L = 3;             // right decay exponent of rough data
  double slope = 3.55;   // spectral slope of rough data
  std::uint64_t seed = 0;
};

struct ConvergenceSpec {
  int levels = 3;
  double strang_dt = 0.0;  // coarsest step; 0 means use the run dt
  double ifrk4_dt = 0.0;
};

struct ExperimentConfig {
  EquationParams params;
  Grid grid;
  InitialSpec initial;
  double T = 1.0;
  double dt = 1e-3;
  Scheme scheme = Scheme::strang;
  int stride = 1;
  std::vector<WeightSpec> weights;
  double edge_tol = 1e-6;
  int precision = 12;
  std::string output_path;
  ConvergenceSpec convergence;
  int picard_max_iter = 30;
  double picard_tol = 1e-10;

  int L() const { return initial.L; }
  std::uint64_t seed() const { return initial.seed; }
  double sigma() const { return weights.empty() ? 0.5 : weights.front().sigma; }

  EvolveOptions evolve_options() const {
    return EvolveOptions{edge_tol, picard_max_iter, picard_tol};
  }
};

// ---- worker fan-out ---------------------------------------------------------

/// Worker cap: HONS_THREADS if set and positive, else the hardware count.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HONS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) hw = static_cast<unsigned>(v);
  }
  return hw;
}

/// out[j] = fn(j) for j < count, spread over worker_count() threads; results
/// land by index so the output order never depends on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  auto work = [&](unsigned w) {
    for (std::size_t j = w; j < count; j += workers) {
      try {
        slots[j].emplace(fn(j));
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<R> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---- initial data -------------------------------------------------------------

namespace detail {

/// Uniform phase in [0, 2 pi) keyed by (seed, mode index); the mode's phase
/// does not depend on the grid, so refining n samples the same function.
inline double mode_phase(std::uint64_t seed, long mode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(mode & 0xffffffff),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(mode) >> 32)};
  std::mt19937_64 eng(seq);
  const double unit = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  return 2.0 * std::numbers::pi * unit;
}

inline double sech(double x) { return 1.0 / std::cosh(x); }

}  // namespace detail

/// Band-limited random synthesis with magnitudes (1+|k|)^{-slope} on |k| <= k_c,
/// times the right envelope (1 + x^2/(1+e^{-2x}))^{-(L+1)/2} (a smoothed
/// (1 + x_+^2)) and the left cutoff 1/(1+e^{-sigma x}), which decays like
/// e^{sigma x} as x -> -inf. Scaled so that the L^2 norm equals amplitude.
inline Field make_rough_decaying(const InitialSpec& s, const Grid& g, double sigma) {
  if (!(s.width > 0.0)) throw ValidationError("rough_decaying: width (band cutoff) must be > 0");
  if (s.L < 0) throw ValidationError("rough_decaying: L must be >= 0");
  const double k1 = 2.0 * std::numbers::pi / g.length();
  const long jmax = static_cast<long>(std::floor(s.width / k1));
  std::vector<double> ks;
  std::vector<cplx> amps;
  for (long j = -jmax; j <= jmax; ++j) {
    const double k = j * k1;
    const double mag = std::pow(1.0 + std::abs(k), -s.slope);
    ks.push_back(k);
    amps.push_back(std::polar(mag, detail::mode_phase(s.seed, j)));
  }
  Field f(g);
  for (int m = 0; m < g.n; ++m) {
    const double x = g.x(m);
    cplx acc{};
    for (std::size_t q = 0; q < ks.size(); ++q) acc += amps[q] * std::exp(cplx(0.0, ks[q] * x));
    const double right = std::pow(1.0 + x * x / (1.0 + std::exp(-2.0 * x)), -0.5 * (s.L + 1));
    const double left = sigma > 0.0 ? 1.0 / (1.0 + std::exp(-sigma * x)) : 1.0;
    f.values[m] = acc * right * left;
  }
  const double norm = std::sqrt(l2_norm_squared(f));
  if (!(norm > 0.0)) return f;
  return (s.amplitude / norm) * std::move(f);
}

inline Field make_initial(const InitialSpec& s, const Grid& g, double sigma = 0.5) {
  if (s.kind == "sech") {
    if (!(s.width > 0.0)) throw ValidationError("sech: width must be > 0");
    return Field::sample(g, [&](double x) {
      return s.amplitude * detail::sech(x / s.width) * std::exp(cplx(0.0, s.phase_c * x));
    });
  }
  if (s.kind == "gaussian") {
    if (!(s.width > 0.0)) throw ValidationError("gaussian: width must be > 0");
    return Field::sample(g, [&](double x) {
      return s.amplitude * std::exp(-x * x / (s.width * s.width)) * std::exp(cplx(0.0, s.phase_c * x));
    });
  }
  if (s.kind == "rough_decaying") return make_rough_decaying(s, g, sigma);
  throw ValidationError("unknown initial kind '" + s.kind + "' (expected sech, gaussian or rough_decaying)");
}

inline Field make_initial(const ExperimentConfig& cfg) {
  return make_initial(cfg.initial, cfg.grid, cfg.sigma());
}

// ---- persistence --------------------------------------------------------------

struct PersistenceReport {
  int L = 0;
  WeightSpec norm_weight;   // (0, i, 0)
  WeightSpec eta_weight;    // (sigma, i, 0)
  std::vector<double> times;
  std::vector<double> norms;  // ||u(t)||^2 in H^L(W_{0,i,0})
  double initial_norm = 0.0;
  double sup_norm = 0.0;
  std::vector<double> partial_integral;  // int_0^t int eta |d^{L+1} u|^2
  double smoothing_integral = 0.0;        // the same over [0, T]
  double max_edge_ratio = 0.0;
  bool ok = false;
};

inline PersistenceReport persistence_experiment(const ExperimentConfig& cfg) {
  if (!cfg.params.cubic_only())
    throw ValidationError("persistence: needs delta = epsilon = 0");
  if (cfg.L() < 0 || cfg.L() + 1 > kMaxDerivativeOrder)
    throw ValidationError("persistence: L must lie in [0, 7]");
  const int i = cfg.weights.empty() ? 1 : cfg.weights.front().i;
  PersistenceReport rep;
  rep.L = cfg.L();
  rep.norm_weight = WeightSpec{0.0, i, 0};
  rep.eta_weight = WeightSpec{cfg.sigma(), i, 0};
  const Weight w = canonical_weight(rep.norm_weight);
  const Weight eta = canonical_weight(rep.eta_weight);

  const Trajectory tr = evolve(make_initial(cfg), cfg.T, cfg.dt, cfg.scheme, cfg.params,
                               cfg.stride, cfg.evolve_options());
  rep.max_edge_ratio = tr.max_edge_ratio;
  const Grid& g = tr.states.front().grid;
  const auto xi = w.sample(g, 1.0);
  const auto eta_x = eta.sample(g, 1.0);
  double prev = 0.0;
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    rep.times.push_back(tr.times[j]);
    rep.norms.push_back(weighted_norm_sampled(tr.states[j], rep.L, xi).value);
    const double f = weighted_norm_sampled(tr.states[j], rep.L + 1, eta_x).per_derivative.back();
    const double acc = j == 0 ? 0.0 : rep.partial_integral.back() + 0.5 * (f + prev) * (tr.times[j] - tr.times[j - 1]);
    rep.partial_integral.push_back(acc);
    prev = f;
  }
  rep.initial_norm = rep.norms.front();
  rep.sup_norm = *std::max_element(rep.norms.begin(), rep.norms.end());
  rep.smoothing_integral = rep.partial_integral.back();
  const bool finite = std::isfinite(rep.sup_norm) && std::isfinite(rep.smoothing_integral);
  rep.ok = finite && (rep.initial_norm == 0.0 ? rep.sup_norm == 0.0 : rep.sup_norm < 10.0 * rep.initial_norm);
  return rep;
}

// ---- smoothing ----------------------------------------------------------------

struct SmoothingRow {
  double t = 0.0;
  int l = 0;
  double weighted_norm = 0.0;        // ||u(t)||^2 in H^{3+l}(W_{sigma, L-l, l})
  double integral_partial = 0.0;     // int_0^t ||u||^2 in H^{4+l}(W_{sigma, L-l-1, l})
};

struct SmoothingLevel {
  int l = 0;
  double max_norm = 0.0;       // max over the window [0.1 T, T]
  double integral = 0.0;       // over [0, T]
};

struct SmoothingReport {
  double sigma = 0.0;
  int L = 0;
  double window_start = 0.0;
  std::vector<SmoothingRow> rows;  // ordered by t, then l; window times only
  std::vector<SmoothingLevel> levels;
  double local_smoothing = 0.0;    // int_0^T int eta |d^{L+1} u|^2, eta in W_{sigma, L, 0}
  double max_edge_ratio = 0.0;
  double roughness_witness = 0.0;  // ||u0||_{H^5} / ||u0||_{H^3}
  bool finite = false;
};

inline int smoothing_levels(int L) { return std::min(L - 1, 5) + 1; }

inline SmoothingReport smoothing_experiment(const ExperimentConfig& cfg) {
  if (!cfg.params.smoothing_condition())
    throw ValidationError("smoothing: needs |omega| < 3 beta");
  if (cfg.L() < 2) throw ValidationError("smoothing: needs L >= 2");
  if (!cfg.params.cubic_only())
    throw ValidationError("smoothing: needs delta = epsilon = 0");
  const double sigma = cfg.sigma();
  if (!(sigma > 0.0)) throw ValidationError("smoothing: sigma must be > 0");

  SmoothingReport rep;
  rep.sigma = sigma;
  rep.L = cfg.L();
  rep.window_start = 0.1 * cfg.T;
  const Field u0 = make_initial(cfg);
  rep.roughness_witness = std::sqrt(sobolev_norm_squared(u0, 5) / sobolev_norm_squared(u0, 3));
  const Trajectory tr = evolve(u0, cfg.T, cfg.dt, cfg.scheme, cfg.params, cfg.stride,
                               cfg.evolve_options());
  rep.max_edge_ratio = tr.max_edge_ratio;
  const int nl = smoothing_levels(rep.L);
  const Grid& g = tr.states.front().grid;

  struct Series {
    std::vector<double> norm, integrand;
  };
  const auto per_l = parallel_map(static_cast<std::size_t>(nl), [&](std::size_t li) {
    const int l = static_cast<int>(li);
    const Weight wn = canonical_weight({sigma, rep.L - l, l});
    const Weight wi = canonical_weight({sigma, rep.L - l - 1, l});
    const auto hn = wn.sample(g, 1.0);
    const auto hi = wi.sample(g, 1.0);
    Series s;
    std::vector<double> xn(hn.size()), xi(hi.size());
    for (std::size_t j = 0; j < tr.states.size(); ++j) {
      const double t = tr.times[j];
      for (std::size_t m = 0; m < hn.size(); ++m) {
        xn[m] = wn.time_factor(t) * hn[m];
        xi[m] = wi.time_factor(t) * hi[m];
      }
      s.norm.push_back(weighted_norm_sampled(tr.states[j], 3 + l, xn).value);
      s.integrand.push_back(weighted_norm_sampled(tr.states[j], 4 + l, xi).value);
    }
    return s;
  });

  rep.levels.resize(static_cast<std::size_t>(nl));
  std::vector<double> partial(static_cast<std::size_t>(nl), 0.0);
  rep.finite = true;
  for (std::size_t j = 0; j < tr.times.size(); ++j) {
    for (int l = 0; l < nl; ++l) {
      const Series& s = per_l[l];
      if (j > 0)
        partial[l] += 0.5 * (s.integrand[j] + s.integrand[j - 1]) * (tr.times[j] - tr.times[j - 1]);
      SmoothingLevel& lev = rep.levels[l];
      lev.l = l;
      lev.integral = partial[l];
      rep.finite = rep.finite && std::isfinite(s.norm[j]) && std::isfinite(partial[l]);
      if (tr.times[j] + 1e-12 < rep.window_start) continue;
      lev.max_norm = std::max(lev.max_norm, s.norm[j]);
      rep.rows.push_back({tr.times[j], l, s.norm[j], partial[l]});
    }
  }
  rep.local_smoothing = local_smoothing_integral(tr, rep.L, canonical_weight({sigma, rep.L, 0}));
  rep.finite = rep.finite && std::isfinite(rep.local_smoothing);
  return rep;
}

// ---- gauge equivalence ----------------------------------------------------------

struct GaugeProbe {
  double derived_gamma = 0.0;
  double printed_gamma = 0.0;
  double derived_l2 = 0.0;   // leg discrepancy with transformed_params
  double printed_l2 = 0.0;   // leg discrepancy with printed_transformed_params
  double ratio = 0.0;        // larger / smaller
  std::string match;         // "derived", "printed" or "none"
};

struct GaugeReport {
  double linf = 0.0;
  double l2 = 0.0;
  double max_edge_ratio = 0.0;
  std::optional<GaugeProbe> probe;
};

namespace detail {

inline Field gauge_leg(const Field& u0, const ExperimentConfig& cfg, const EquationParams& q) {
  const Field v0 = gauge_inverse(u0, cfg.params, 0.0);
  const int steps = step_count(cfg.T, cfg.dt);
  const Trajectory tv = evolve(v0, cfg.T, cfg.dt, cfg.scheme, q, steps, cfg.evolve_options());
  return gauge_forward(tv.states.back(), cfg.params, cfg.T);
}

}  // namespace detail

/// Leg 1 evolves u under the configured equation; leg 2 evolves the gauge
/// image v under the transformed equation and maps back at T. With
/// delta or epsilon nonzero the second leg is rerun with the alternative
/// cubic coefficient and both discrepancies are reported.
inline GaugeReport gauge_equivalence_experiment(const ExperimentConfig& cfg) {
  cfg.params.validate();
  const GaugeCoeffs c = gauge_coeffs(cfg.params);
  detail::require_gauge_compatible(cfg.grid, c.d2);
  const Field u0 = make_initial(cfg);
  const int steps = step_count(cfg.T, cfg.dt);
  const bool probe = !cfg.params.cubic_only();

  const std::size_t jobs = probe ? 3 : 2;
  double edge = 0.0;
  const auto finals = parallel_map(jobs, [&](std::size_t j) {
    if (j == 0) {
      const Trajectory tu = evolve(u0, cfg.T, cfg.dt, cfg.scheme, cfg.params, steps, cfg.evolve_options());
      return std::make_pair(tu.states.back(), tu.max_edge_ratio);
    }
    const EquationParams q = j == 1 ? transformed_params(cfg.params) : printed_transformed_params(cfg.params);
    return std::make_pair(detail::gauge_leg(u0, cfg, q), 0.0);
  });
  edge = finals[0].second;

  GaugeReport rep;
  rep.max_edge_ratio = edge;
  rep.linf = max_abs_difference(finals[0].first, finals[1].first);
  rep.l2 = l2_distance(finals[0].first, finals[1].first);
  if (probe) {
    GaugeProbe pr;
    pr.derived_gamma = transformed_params(cfg.params).gamma;
    pr.printed_gamma = printed_transformed_params(cfg.params).gamma;
    pr.derived_l2 = rep.l2;
    pr.printed_l2 = l2_distance(finals[0].first, finals[2].first);
    const double lo = std::min(pr.derived_l2, pr.printed_l2);
    const double hi = std::max(pr.derived_l2, pr.printed_l2);
    pr.ratio = hi / std::max(lo, std::numeric_limits<double>::min());
    if (pr.ratio >= 100.0) pr.match = pr.derived_l2 < pr.printed_l2 ? "derived" : "printed";
    else pr.match = "none";
    rep.probe = pr;
  }
  return rep;
}

// ---- convergence ----------------------------------------------------------------

struct ConvergenceRow {
  Scheme scheme = Scheme::strang;
  int level = 0;
  double dt = 0.0;
  double diff_next = std::numeric_limits<double>::quiet_NaN();  // max |u_dt - u_{dt/2}|
  double error_ref = 0.0;                                         // max |u_dt - u_ref|
  double order = std::numeric_limits<double>::quiet_NaN();       // Richardson order at this level
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::vector<std::pair<Scheme, double>> orders;  // order from the finest triple
  std::vector<std::pair<Scheme, bool>> exact;     // differences at the roundoff floor
  double reference_dt = 0.0;
};

/// Halves dt across levels from the coarsest step per scheme. The observed
/// order at level j is log2(|u_j - u_{j+1}| / |u_{j+1} - u_{j+2}|); errors
/// against an IF-RK4 reference at a quarter of the finest step are reported
/// alongside.
inline ConvergenceReport convergence_study(const ExperimentConfig& cfg, int levels) {
  if (levels < 3) throw ValidationError("convergence_study: levels must be >= 3");
  const Field u0 = make_initial(cfg);
  const double sdt = cfg.convergence.strang_dt > 0.0 ? cfg.convergence.strang_dt : cfg.dt;
  const double idt = cfg.convergence.ifrk4_dt > 0.0 ? cfg.convergence.ifrk4_dt : cfg.dt;
  struct Job {
    Scheme s;
    double dt;
  };
  std::vector<Job> jobs;
  for (Scheme s : {Scheme::strang, Scheme::ifrk4})
    for (int l = 0; l < levels; ++l)
      jobs.push_back({s, (s == Scheme::strang ? sdt : idt) / std::pow(2.0, l)});
  const double ref_dt = std::min(sdt, idt) / std::pow(2.0, levels + 1);
  jobs.push_back({Scheme::ifrk4, ref_dt});

  const auto finals = parallel_map(jobs.size(), [&](std::size_t j) {
    const int steps = step_count(cfg.T, jobs[j].dt);
    return evolve(u0, cfg.T, jobs[j].dt, jobs[j].s, cfg.params, steps, cfg.evolve_options()).states.back();
  });
  const Field& ref = finals.back();
  const double floor = 1e-12 * std::max(1.0, max_abs(ref));

  ConvergenceReport rep;
  rep.reference_dt = ref_dt;
  for (int si = 0; si < 2; ++si) {
    const Scheme s = si == 0 ? Scheme::strang : Scheme::ifrk4;
    const std::size_t base = static_cast<std::size_t>(si * levels);
    std::vector<ConvergenceRow> rows;
    bool exact = true;
    for (int l = 0; l < levels; ++l) {
      ConvergenceRow r;
      r.scheme = s;
      r.level = l;
      r.dt = jobs[base + l].dt;
      r.error_ref = max_abs_difference(finals[base + l], ref);
      if (l + 1 < levels) {
        r.diff_next = max_abs_difference(finals[base + l], finals[base + l + 1]);
        exact = exact && r.diff_next <= floor;
      }
      rows.push_back(r);
    }
    for (int l = 0; l + 2 < levels; ++l) rows[l].order = std::log2(rows[l].diff_next / rows[l + 1].diff_next);
    rep.orders.emplace_back(s, rows[levels - 3].order);
    rep.exact.emplace_back(s, exact);
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
  }
  return rep;
}

}  // namespace hons
