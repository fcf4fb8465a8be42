#pragma once

// Residuals of the conservation laws and weighted energy identities along a
// computed trajectory, the weighted inequality terms, the local smoothing
// integral and the exponent bookkeeping of the bootstrap.
//
// Time derivatives of integrals are centered differences at interior stored
// times, so every time-derivative check needs stride 1; endpoints are absent.

#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hons/error.hpp"
#include "hons/hnls_model.hpp"
#include "hons/integrators.hpp"
#include "hons/spectral_grid.hpp"
#include "hons/weights.hpp"

namespace hons {

inline constexpr double kResidualFloor = 1e-14;

struct IdentityReport {
  std::string name;
  std::vector<double> times;
  std::vector<double> residuals;
  std::vector<double> scale;
  std::vector<double> relative;

  void push(double t, double residual, double s) {
    times.push_back(t);
    residuals.push_back(residual);
    scale.push_back(s);
    relative.push_back(std::abs(residual) / std::max(s, kResidualFloor));
  }

  double max_relative() const {
    double m = 0.0;
    for (double r : relative) m = std::max(m, r);
    return m;
  }
  double max_abs_residual() const {
    double m = 0.0;
    for (double r : residuals) m = std::max(m, std::abs(r));
    return m;
  }
};

/// One stored time of a time-derivative identity: d/dt mass + rest = 0, with
/// the constituent terms of rest kept for the scale.
struct IdentitySample {
  double t = 0.0;
  double mass = 0.0;
  double rest = 0.0;
  double largest_part = 0.0;
};

/// Centered differences over a uniformly spaced series; endpoints skipped.
inline IdentityReport assemble_identity(std::string name, std::span<const IdentitySample> s) {
  IdentityReport rep;
  rep.name = std::move(name);
  for (std::size_t j = 1; j + 1 < s.size(); ++j) {
    const double rate = (s[j + 1].mass - s[j - 1].mass) / (s[j + 1].t - s[j - 1].t);
    rep.push(s[j].t, rate + s[j].rest, std::max(std::abs(rate), s[j].largest_part));
  }
  return rep;
}

namespace detail {

inline void require_stride_one(const Trajectory& tr) {
  if (tr.stride != 1) throw ValidationError("identity check needs a stride-1 trajectory");
  if (tr.states.size() < 3) throw ValidationError("identity check needs at least three states");
}

inline void require_cubic(const EquationParams& p) {
  if (!p.cubic_only())
    throw ValidationError("identity check applies to delta = epsilon = 0 only");
}

inline double integral_of(const Grid& g, std::size_t n, auto&& integrand) {
  std::vector<double> s(n);
  for (std::size_t m = 0; m < n; ++m) s[m] = integrand(m);
  return integrate(s, g);
}

}  // namespace detail

// ---- conservation -----------------------------------------------------------

inline IdentityReport l2_drift(const Trajectory& tr) {
  IdentityReport rep;
  rep.name = "l2_drift";
  if (tr.states.empty()) return rep;
  const double m0 = l2_norm_squared(tr.states.front());
  for (std::size_t j = 0; j < tr.states.size(); ++j)
    rep.push(tr.times[j], l2_norm_squared(tr.states[j]) - m0, m0);
  return rep;
}

/// Per-state quantities of the two H^1 identities: ||u_x||^2 and the two
/// integral forms 2 Im int u^2 conj(u_x)^2 and -2 Im int |u|^2 u conj(u_xx).
struct H1Terms {
  double ux2 = 0.0;
  double e2_integral = 0.0;
  double e3_integral = 0.0;
};

/// d holds u, u_x, u_xx (and possibly more).
inline H1Terms h1_terms(std::span<const Field> d) {
  const std::size_t n = d[0].size();
  const Grid& g = d[0].grid;
  H1Terms h;
  h.ux2 = l2_norm_squared(d[1]);
  h.e2_integral = 2.0 * detail::integral_of(g, n, [&](std::size_t m) {
    const cplx v = d[0].values[m];
    const cplx vx = std::conj(d[1].values[m]);
    return (v * v * vx * vx).imag();
  });
  h.e3_integral = -2.0 * detail::integral_of(g, n, [&](std::size_t m) {
    const cplx v = d[0].values[m];
    return (std::norm(v) * v * std::conj(d[2].values[m])).imag();
  });
  return h;
}

inline H1Terms h1_terms(const Field& u) { return h1_terms(spectral_derivatives(u, 2)); }

namespace detail {

inline IdentityReport h1_identity(const Trajectory& tr, bool e3, const char* name) {
  require_stride_one(tr);
  require_cubic(tr.params);
  std::vector<IdentitySample> s;
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    const H1Terms h = h1_terms(tr.states[j]);
    // the cubic coefficient scales both integral forms
    const double rest = tr.params.gamma * (e3 ? h.e3_integral : h.e2_integral);
    s.push_back({tr.times[j], h.ux2, rest, std::abs(rest)});
  }
  return assemble_identity(name, s);
}

}  // namespace detail

inline IdentityReport e2_residual(const Trajectory& tr) {
  return detail::h1_identity(tr, false, "e2");
}

inline IdentityReport e3_residual(const Trajectory& tr) {
  return detail::h1_identity(tr, true, "e3");
}

// ---- weighted identity ------------------------------------------------------

inline constexpr int kMaxIdentityAlpha = 3;

/// Weight samples needed at one time: xi, xi', xi''', d_t xi.
struct WeightSamples {
  std::vector<double> xi, d1, d3, dt;
};

inline WeightSamples sample_weight(const Weight& w, const Grid& g, double t) {
  return {w.sample(g, t, 0), w.sample(g, t, 1), w.sample(g, t, 3), w.sample_dt(g, t)};
}

/// Caches the profile samples of a separable weight; other weights are
/// resampled on every call. at() reuses an internal buffer, so one sampler
/// belongs to one thread.
class WeightSampler {
 public:
  WeightSampler(const Weight& w, const Grid& g) : w_(w), g_(g) {
    if (w.is_separable()) profile_ = sample_weight(w, g, 1.0);
  }

  const WeightSamples& at(double t) const {
    if (!w_.is_separable()) {
      scratch_ = sample_weight(w_, g_, t);
      return scratch_;
    }
    if (w_.time_power() == 0) return profile_;  // xi_t samples are zero already
    const double f = w_.time_factor(t);
    const double r = w_.time_rate(t);
    auto scaled = [](std::vector<double>& out, const std::vector<double>& v, double c) {
      out.resize(v.size());
      for (std::size_t m = 0; m < v.size(); ++m) out[m] = c * v[m];
    };
    scaled(scratch_.xi, profile_.xi, f);
    scaled(scratch_.d1, profile_.d1, f);
    scaled(scratch_.d3, profile_.d3, f);
    scaled(scratch_.dt, profile_.xi, r);
    return scratch_;
  }

 private:
  Weight w_;
  Grid g_;
  WeightSamples profile_;
  mutable WeightSamples scratch_;
};

/// The cubic commutator sums
///   2 gamma [ Im int xi (|u|^2)_a u conj(u_a) + sum_{m=1}^{a-1} C(a,m) Im int xi (|u|^2)_{a-m} u_m conj(u_a) ],
/// with (|u|^2)_j = sum_q C(j,q) u_{j-q} conj(u_q) expanded term by term.
inline double cubic_sums(std::span<const Field> d, int alpha, std::span<const double> xi,
                         double gamma) {
  const Grid& g = d[0].grid;
  const std::size_t n = d[0].size();
  auto mod2_derivative = [&](int j, std::size_t m) {
    cplx acc{};
    for (int q = 0; q <= j; ++q)
      acc += detail::binomial(j, q) * d[j - q].values[m] * std::conj(d[q].values[m]);
    return acc;
  };
  double total = 0.0;
  for (int mm = 0; mm < alpha; ++mm) {
    // mm = 0 is the leading term, coefficient 1
    const double coef = mm == 0 ? 1.0 : detail::binomial(alpha, mm);
    total += coef * detail::integral_of(g, n, [&](std::size_t m) {
      return (xi[m] * mod2_derivative(alpha - mm, m) * d[mm].values[m] *
              std::conj(d[alpha].values[m]))
          .imag();
    });
  }
  return 2.0 * gamma * total;
}

/// Per-state pieces of
///   d/dt int xi |u_a|^2 - int xi_t |u_a|^2 - beta int xi''' |u_a|^2 + 3 beta int xi' |u_{a+1}|^2
///   + cubic sums - 2 omega Im int xi' conj(u_a) u_{a+1} = 0.
/// d holds the derivatives u, u_x, ..., at least up to order alpha + 1.
inline IdentitySample weighted_identity_sample(std::span<const Field> d, double t, int alpha,
                                               const WeightSamples& w,
                                               const EquationParams& p) {
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted identity: alpha must be 1, 2 or 3");
  if (d.size() < static_cast<std::size_t>(alpha) + 2)
    throw ValidationError("weighted identity: not enough derivatives supplied");
  detail::require_cubic(p);
  const Grid& g = d[0].grid;
  const std::size_t n = d[0].size();
  const auto& ua = d[alpha].values;
  const auto& ub = d[alpha + 1].values;

  const double mass = detail::integral_of(g, n, [&](std::size_t m) { return w.xi[m] * std::norm(ua[m]); });
  const double t_xi_t = -detail::integral_of(g, n, [&](std::size_t m) { return w.dt[m] * std::norm(ua[m]); });
  const double t_d3 = -p.beta * detail::integral_of(g, n, [&](std::size_t m) { return w.d3[m] * std::norm(ua[m]); });
  const double t_d1 = 3.0 * p.beta * detail::integral_of(g, n, [&](std::size_t m) { return w.d1[m] * std::norm(ub[m]); });
  const double t_cubic = cubic_sums(d, alpha, w.xi, p.gamma);
  const double t_omega = -2.0 * p.omega * detail::integral_of(g, n, [&](std::size_t m) {
    return (w.d1[m] * std::conj(ua[m]) * ub[m]).imag();
  });

  IdentitySample s;
  s.t = t;
  s.mass = mass;
  s.rest = t_xi_t + t_d3 + t_d1 + t_cubic + t_omega;
  for (double v : {t_xi_t, t_d3, t_d1, t_cubic, t_omega}) s.largest_part = std::max(s.largest_part, std::abs(v));
  return s;
}

inline IdentitySample weighted_identity_sample(const Field& u, double t, int alpha,
                                               const WeightSamples& w, const EquationParams& p) {
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted identity: alpha must be 1, 2 or 3");
  return weighted_identity_sample(spectral_derivatives(u, alpha + 1), t, alpha, w, p);
}

inline IdentityReport weighted_identity_residual(const Trajectory& tr, int alpha, const Weight& w) {
  detail::require_stride_one(tr);
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted identity: alpha must be 1, 2 or 3");
  const WeightSampler sampler(w, tr.states.front().grid);
  std::vector<IdentitySample> s;
  for (std::size_t j = 0; j < tr.states.size(); ++j)
    s.push_back(weighted_identity_sample(tr.states[j], tr.times[j], alpha, sampler.at(tr.times[j]), tr.params));
  return assemble_identity("weighted_a" + std::to_string(alpha), s);
}

// ---- weighted inequality ----------------------------------------------------

struct Lemma31Terms {
  int alpha = 0;
  double t = 0.0;
  double A = 0.0;  // d/dt int xi |u_a|^2
  double B = 0.0;  // int eta |u_{a+1}|^2,  eta = (3 beta - |omega|) xi'
  double C = 0.0;  // int theta |u_a|^2,  theta = -(xi_t + beta xi''' + |omega| xi' + c0 xi)
  double R = 0.0;  // cubic commutator sums
  double c0 = 0.0; // max |u|^2 at t

  double lhs() const { return A + B + C + R; }
  double scale() const { return std::max({std::abs(A), std::abs(B), std::abs(C), std::abs(R)}); }
};

/// Everything except A at one state; mass is int xi |u_a|^2 for the centered difference.
struct Lemma31State {
  double mass = 0.0;
  double B = 0.0;
  double C = 0.0;
  double R = 0.0;
  double c0 = 0.0;
};

namespace detail {

inline void require_inequality_gate(const EquationParams& p) {
  if (!p.smoothing_condition())
    throw ValidationError("weighted inequality: needs |omega| < 3 beta");
}

}  // namespace detail

/// d holds the derivatives u, u_x, ..., at least up to order alpha + 1.
inline Lemma31State lemma31_state(std::span<const Field> d, int alpha, const WeightSamples& w,
                                  const EquationParams& p) {
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted inequality: alpha must be 1, 2 or 3");
  if (d.size() < static_cast<std::size_t>(alpha) + 2)
    throw ValidationError("weighted inequality: not enough derivatives supplied");
  detail::require_inequality_gate(p);
  detail::require_cubic(p);
  const Field& u = d[0];
  const Grid& g = u.grid;
  const std::size_t n = u.size();
  const auto& ua = d[alpha].values;
  const auto& ub = d[alpha + 1].values;
  const double aw = std::abs(p.omega);

  Lemma31State s;
  for (const auto& v : u.values) s.c0 = std::max(s.c0, std::norm(v));
  s.mass = detail::integral_of(g, n, [&](std::size_t m) { return w.xi[m] * std::norm(ua[m]); });
  s.B = (3.0 * p.beta - aw) *
        detail::integral_of(g, n, [&](std::size_t m) { return w.d1[m] * std::norm(ub[m]); });
  s.C = -detail::integral_of(g, n, [&](std::size_t m) {
    const double theta = w.dt[m] + p.beta * w.d3[m] + aw * w.d1[m] + s.c0 * w.xi[m];
    return theta * std::norm(ua[m]);
  });
  s.R = cubic_sums(d, alpha, w.xi, p.gamma);
  return s;
}

inline Lemma31State lemma31_state(const Field& u, int alpha, const WeightSamples& w,
                                  const EquationParams& p) {
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted inequality: alpha must be 1, 2 or 3");
  return lemma31_state(spectral_derivatives(u, alpha + 1), alpha, w, p);
}

inline Lemma31Terms lemma31_assemble(int alpha, double t, const Lemma31State& prev,
                                     const Lemma31State& here, const Lemma31State& next,
                                     double dt) {
  Lemma31Terms r;
  r.alpha = alpha;
  r.t = t;
  r.A = (next.mass - prev.mass) / (2.0 * dt);
  r.B = here.B;
  r.C = here.C;
  r.R = here.R;
  r.c0 = here.c0;
  return r;
}

/// Terms at the stored time closest to t, which must be interior.
inline Lemma31Terms lemma31_check(const Trajectory& tr, int alpha, const Weight& w, double t) {
  detail::require_stride_one(tr);
  detail::require_inequality_gate(tr.params);
  const auto it = std::min_element(tr.times.begin(), tr.times.end(), [t](double a, double b) {
    return std::abs(a - t) < std::abs(b - t);
  });
  const std::size_t j = static_cast<std::size_t>(it - tr.times.begin());
  if (j == 0 || j + 1 >= tr.times.size())
    throw ValidationError("lemma31_check: t must be an interior stored time");
  const WeightSampler sampler(w, tr.states.front().grid);
  auto state = [&](std::size_t q) {
    return lemma31_state(tr.states[q], alpha, sampler.at(tr.times[q]), tr.params);
  };
  return lemma31_assemble(alpha, tr.times[j], state(j - 1), state(j), state(j + 1), tr.dt);
}

/// The bounded form of the leading cubic term:
///   2 ||u||_inf sum_k C(a,k) int xi |u_{a-k}| |u_k| |u_a|.
inline double lemma31_bounded_R(const Field& u, int alpha, std::span<const double> xi) {
  if (alpha < 1 || alpha > kMaxIdentityAlpha)
    throw ValidationError("weighted inequality: alpha must be 1, 2 or 3");
  const auto d = spectral_derivatives(u, alpha);
  double acc = 0.0;
  for (int k = 0; k <= alpha; ++k)
    acc += detail::binomial(alpha, k) * detail::integral_of(u.grid, u.size(), [&](std::size_t m) {
      return xi[m] * std::abs(d[alpha - k].values[m]) * std::abs(d[k].values[m]) *
             std::abs(d[alpha].values[m]);
    });
  return 2.0 * max_abs(u) * acc;
}

// ---- local smoothing --------------------------------------------------------

/// int_0^T int eta |d^{L+1} u|^2 dx dt, trapezoid over the stored times.
inline double local_smoothing_integral(const Trajectory& tr, int L, const Weight& eta) {
  if (L < 0 || L + 1 > kMaxDerivativeOrder)
    throw ValidationError("local_smoothing_integral: L + 1 must lie in [1, 8]");
  if (tr.states.empty()) return 0.0;
  const WeightSampler sampler(eta, tr.states.front().grid);
  std::vector<double> f;
  for (std::size_t j = 0; j < tr.states.size(); ++j) {
    const Field d = spectral_derivative(tr.states[j], L + 1);
    const auto& xi = sampler.at(tr.times[j]).xi;
    f.push_back(detail::integral_of(d.grid, d.size(), [&](std::size_t m) { return xi[m] * std::norm(d.values[m]); }));
  }
  double total = 0.0;
  for (std::size_t j = 1; j < f.size(); ++j)
    total += 0.5 * (f[j] + f[j - 1]) * (tr.times[j] - tr.times[j - 1]);
  return total;
}

// ---- exponent bookkeeping ---------------------------------------------------

using Rational = boost::rational<long>;

struct Exponents {
  Rational M;
  Rational T;
};

inline long positive_part(long v) { return v > 0 ? v : 0; }

inline Exponents exponent_bookkeeping(int alpha, int nu1, int nu2, int L) {
  if (!(1 <= nu1 && nu1 <= nu2 && nu2 <= alpha))
    throw ValidationError("exponent_bookkeeping: need 1 <= nu1 <= nu2 <= alpha");
  if (nu1 + nu2 != alpha) throw ValidationError("exponent_bookkeeping: need nu1 + nu2 = alpha");
  if (!(4 <= alpha && alpha <= L + 2))
    throw ValidationError("exponent_bookkeeping: need 4 <= alpha <= L + 2");
  const Rational half(1, 2);
  Exponents e;
  e.M = Rational(alpha - 3) - half * positive_part(nu1 - 2) - half * positive_part(nu2 - 4) -
        half * positive_part(alpha - 4);
  e.T = Rational(L - alpha + 3) - half * (L - positive_part(alpha - 3)) -
        half * (L - positive_part(nu2 - 3)) - half * (L - positive_part(nu1 - 2));
  return e;
}

/// The simplification 2M = 4, 2T = -(L + 2) needs every positive part active.
inline bool bookkeeping_unclipped(int alpha, int nu1, int nu2) {
  return nu1 >= 2 && nu2 >= 4 && alpha >= 4;
}

struct BookkeepingRow {
  int alpha = 0, nu1 = 0, nu2 = 0, L = 0;
  Exponents e;
  bool unclipped = false;
};

/// Every admissible (alpha, nu1, nu2) for L = 2..L_max.
inline std::vector<BookkeepingRow> bookkeeping_sweep(int L_max) {
  std::vector<BookkeepingRow> rows;
  for (int L = 2; L <= L_max; ++L)
    for (int alpha = 4; alpha <= L + 2; ++alpha)
      for (int nu1 = 1; 2 * nu1 <= alpha; ++nu1) {
        const int nu2 = alpha - nu1;
        rows.push_back({alpha, nu1, nu2, L, exponent_bookkeeping(alpha, nu1, nu2, L),
                        bookkeeping_unclipped(alpha, nu1, nu2)});
      }
  return rows;
}

}  // namespace hons
