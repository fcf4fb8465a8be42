#pragma once

// Fixed-step time integration: Strang splitting with the exact linear
// propagator, integrating-factor RK4, and the Picard scheme on v = (I - d^2) u.

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "hons/error.hpp"
#include "hons/hnls_model.hpp"
#include "hons/spectral_grid.hpp"

namespace hons {

enum class Scheme { strang, ifrk4, picard };

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::strang: return "strang";
    case Scheme::ifrk4: return "ifrk4";
    case Scheme::picard: return "picard";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "strang") return Scheme::strang;
  if (s == "ifrk4") return Scheme::ifrk4;
  if (s == "picard") return Scheme::picard;
  throw ValidationError("unknown scheme '" + s + "' (expected strang, ifrk4 or picard)");
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  EquationParams params;
  Scheme scheme = Scheme::strang;
  double dt = 0.0;
  int stride = 1;
  double max_edge_ratio = 0.0;  // largest edge/max magnitude seen at stored states
};

struct EvolveOptions {
  double edge_tol = 1e-6;
  int picard_max_iter = 30;
  double picard_tol = 1e-10;
};

namespace detail {

/// e^{m(k) tau} on every stored mode. The last table per thread is kept,
/// since a fixed-step run asks for the same one every step.
inline const CVec& linear_factors(const Grid& g, const EquationParams& p, double tau) {
  struct Cached {
    double x_min = 0.0, x_max = 0.0;
    int n = 0;
    EquationParams p;
    double tau = std::numeric_limits<double>::quiet_NaN();
    CVec e;
  };
  thread_local Cached c;
  if (c.n == g.n && c.x_min == g.x_min && c.x_max == g.x_max && c.p == p && c.tau == tau) return c.e;
  c.e.resize(static_cast<std::size_t>(g.n));
  for (int m = 0; m < g.n; ++m) c.e[m] = std::exp(dispersion_multiplier(g.wavenumber(m), p) * tau);
  c.x_min = g.x_min;
  c.x_max = g.x_max;
  c.n = g.n;
  c.p = p;
  c.tau = tau;
  return c.e;
}

inline CVec spectral_of(const Field& f) {
  CVec c = f.values;
  fft_forward(c);
  return c;
}

inline Field physical_of(const Grid& g, CVec c) {
  fft_backward(c);
  return Field(g, std::move(c));
}

inline Field rotate_cubic(Field u, double gamma, double tau) {
  for (auto& v : u.values) v *= std::polar(1.0, gamma * std::norm(v) * tau);
  return u;
}

inline Field rk4_nonlinear(const Field& u, const EquationParams& p, double tau) {
  const Field k1 = nonlinear_term(u, p);
  const Field k2 = nonlinear_term(u + (0.5 * tau) * k1, p);
  const Field k3 = nonlinear_term(u + (0.5 * tau) * k2, p);
  const Field k4 = nonlinear_term(u + tau * k3, p);
  return u + (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline Field nonlinear_half(const Field& u, const EquationParams& p, double tau) {
  if (p.cubic_only()) return rotate_cubic(u, p.gamma, tau);
  return rk4_nonlinear(u, p, tau);
}

inline void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step must be positive");
}

}  // namespace detail

/// Exact linear flow over time tau (any sign).
inline Field linear_propagate(const Field& u, const EquationParams& p, double tau) {
  const CVec& e = detail::linear_factors(u.grid, p, tau);
  CVec c = detail::spectral_of(u);
  for (std::size_t m = 0; m < c.size(); ++m) c[m] *= e[m];
  return detail::physical_of(u.grid, std::move(c));
}

inline Field strang_step(const Field& u, double dt, const EquationParams& p) {
  detail::require_positive_dt(dt);
  Field w = detail::nonlinear_half(u, p, 0.5 * dt);
  w = linear_propagate(w, p, dt);
  return detail::nonlinear_half(w, p, 0.5 * dt);
}

/// Largest IF-RK4 step keeping dt times the nonlinear Jacobian scale inside
/// the RK4 imaginary-axis stability interval (2.7).
inline double ifrk4_max_dt(const Field& u, const EquationParams& p) {
  const double a = max_abs(u);
  const double rate = a * a * (2.0 * std::abs(p.gamma) +
                               (std::abs(p.delta) + std::abs(p.epsilon)) * u.grid.k_max());
  if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.7 / rate;
}

inline Field if_rk4_step(const Field& u, double dt, const EquationParams& p) {
  detail::require_positive_dt(dt);
  const double bound = ifrk4_max_dt(u, p);
  if (dt > bound) {
    std::ostringstream msg;
    msg << "if_rk4_step: dt = " << dt << " exceeds the stability bound; use dt <= " << bound;
    throw ValidationError(msg.str());
  }
  const Grid& g = u.grid;
  const CVec& e = detail::linear_factors(g, p, 0.5 * dt);
  const std::size_t n = e.size();
  const CVec v = detail::spectral_of(u);

  const CVec a = detail::spectral_of(nonlinear_term(u, p));
  CVec s(n);
  for (std::size_t m = 0; m < n; ++m) s[m] = e[m] * (v[m] + 0.5 * dt * a[m]);
  const CVec b = detail::spectral_of(nonlinear_term(detail::physical_of(g, s), p));
  for (std::size_t m = 0; m < n; ++m) s[m] = e[m] * v[m] + 0.5 * dt * b[m];
  const CVec c = detail::spectral_of(nonlinear_term(detail::physical_of(g, s), p));
  for (std::size_t m = 0; m < n; ++m) s[m] = e[m] * e[m] * v[m] + dt * e[m] * c[m];
  const CVec d = detail::spectral_of(nonlinear_term(detail::physical_of(g, s), p));

  CVec out(n);
  for (std::size_t m = 0; m < n; ++m) {
    const cplx e2 = e[m] * e[m];
    out[m] = e2 * v[m] + dt / 6.0 * (e2 * a[m] + 2.0 * e[m] * (b[m] + c[m]) + d[m]);
  }
  return detail::physical_of(g, std::move(out));
}

inline int step_count(double T, double dt) {
  detail::require_positive_dt(dt);
  if (!(T > 0.0) || !std::isfinite(T)) throw ValidationError("evolve: T must be positive");
  const double ratio = T / dt;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps))
    throw ValidationError("evolve: T/dt must be an integer");
  return static_cast<int>(steps);
}

// ---- Picard scheme ------------------------------------------------------------

struct PicardHistory {
  std::vector<Field> iterates;  // v^(n) at the final time, n = 0, 1, ...
  std::vector<double> deltas;   // H^1 norm of v^(n)(T) - v^(n-1)(T)
  bool converged = false;
};

struct PicardResult {
  Field u;                   // Lambda v(T) of the last iterate
  PicardHistory history;
  std::vector<Field> path;   // last iterate v(t_s), s = 0..steps
};

namespace detail {

/// Frozen coefficients built from Lambda z: |Lz|^2 and its first two
/// derivatives, kept as samples on the 2n grid.
struct PicardCoefficients {
  CVec q0, q1, q2;
};

inline CVec upsample_spectrum(const CVec& c) {
  CVec p = pad_spectrum(c);
  fft_backward(p);
  return p;
}

inline PicardCoefficients picard_coefficients(const Field& z) {
  const Field lz = helmholtz_smooth(z);
  const Field q = dealiased_product(lz, conj(lz));
  const CVec qh = spectral_of(q);
  const Grid& g = z.grid;
  CVec d1(qh.size()), d2(qh.size());
  for (int m = 0; m < g.n; ++m) {
    const double k = g.wavenumber(m);
    d1[m] = cplx(0.0, k) * qh[m];
    d2[m] = -k * k * qh[m];
  }
  return {upsample_spectrum(qh), upsample_spectrum(d1), upsample_spectrum(d2)};
}

/// -i gamma b(z, v) in spectral space, where
/// b = (|Lz|^2)_2 Lv + 2 (|Lz|^2)_1 Lv_1 + |Lz|^2 Lv_2 - |Lz|^2 Lv.
inline CVec picard_forcing(const Grid& g, const PicardCoefficients& q, const CVec& v_hat,
                           double gamma) {
  const std::size_t n = v_hat.size();
  CVec l0(n), l1(n), l2(n);
  for (int m = 0; m < g.n; ++m) {
    const double k = g.wavenumber(m);
    const cplx lv = v_hat[m] / (1.0 + k * k);
    l0[m] = lv;
    l1[m] = cplx(0.0, k) * lv;
    l2[m] = -k * k * lv;
  }
  const CVec f0 = upsample_spectrum(l0), f1 = upsample_spectrum(l1), f2 = upsample_spectrum(l2);
  CVec prod(f0.size());
  for (std::size_t j = 0; j < prod.size(); ++j)
    prod[j] = (q.q2[j] - q.q0[j]) * f0[j] + 2.0 * q.q1[j] * f1[j] + q.q0[j] * f2[j];
  fft_forward(prod);
  CVec b = unpad_spectrum(prod);
  for (auto& c : b) c *= cplx(0.0, -gamma);
  return b;
}

}  // namespace detail

/// One application of Z: integrates v_t = m(k) v - i gamma b(z, v) from v0 over
/// [0, T] with integrating-factor RK4. Applying (I - d^2) to the cubic equation
/// leaves the constant-coefficient part with the same multiplier m(k) (the
/// Lambda-composed polynomial collapses to it), and the frozen cubic term
/// becomes -i gamma b. z holds the previous iterate at every step; between
/// steps it is interpolated in the interaction picture.
inline std::vector<Field> picard_apply_Z(const std::vector<Field>& z, const Field& v0, double T,
                                         double dt, const EquationParams& p) {
  p.validate();
  if (!p.cubic_only()) throw ValidationError("picard: only delta = epsilon = 0 is supported");
  const int steps = step_count(T, dt);
  if (z.size() != static_cast<std::size_t>(steps) + 1)
    throw ValidationError("picard_apply_Z: z must hold steps + 1 states");
  const Grid& g = v0.grid;
  const CVec& e = detail::linear_factors(g, p, 0.5 * dt);
  const std::size_t n = e.size();

  std::vector<Field> out;
  out.reserve(z.size());
  out.push_back(v0);
  CVec v = detail::spectral_of(v0);
  CVec za = detail::spectral_of(z[0]);
  auto qa = detail::picard_coefficients(z[0]);
  for (int s = 0; s < steps; ++s) {
    const CVec zc = detail::spectral_of(z[s + 1]);
    CVec zh(n);
    for (std::size_t m = 0; m < n; ++m) zh[m] = 0.5 * (e[m] * za[m] + zc[m] / e[m]);
    const auto qh = detail::picard_coefficients(detail::physical_of(g, zh));
    auto qc = detail::picard_coefficients(z[s + 1]);

    const CVec a = detail::picard_forcing(g, qa, v, p.gamma);
    CVec st(n);
    for (std::size_t m = 0; m < n; ++m) st[m] = e[m] * (v[m] + 0.5 * dt * a[m]);
    const CVec b = detail::picard_forcing(g, qh, st, p.gamma);
    for (std::size_t m = 0; m < n; ++m) st[m] = e[m] * v[m] + 0.5 * dt * b[m];
    const CVec c = detail::picard_forcing(g, qh, st, p.gamma);
    for (std::size_t m = 0; m < n; ++m) st[m] = e[m] * e[m] * v[m] + dt * e[m] * c[m];
    const CVec d = detail::picard_forcing(g, qc, st, p.gamma);
    for (std::size_t m = 0; m < n; ++m) {
      const cplx e2 = e[m] * e[m];
      v[m] = e2 * v[m] + dt / 6.0 * (e2 * a[m] + 2.0 * e[m] * (b[m] + c[m]) + d[m]);
    }
    out.push_back(detail::physical_of(g, v));
    za = zc;
    qa = std::move(qc);
  }
  return out;
}

/// (I - d^2) f.
inline Field helmholtz_apply(const Field& f) {
  return apply_multiplier(f, [](double k) { return cplx(1.0 + k * k); });
}

inline PicardResult picard_solve(const Field& u0, double T, double dt, const EquationParams& p,
                                 int max_iter, double tol) {
  if (max_iter < 1) throw ValidationError("picard_solve: max_iter must be >= 1");
  const int steps = step_count(T, dt);
  const Field v0 = helmholtz_apply(u0);
  std::vector<Field> prev(static_cast<std::size_t>(steps) + 1, v0);

  PicardResult res;
  res.history.iterates.push_back(v0);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Field> next = picard_apply_Z(prev, v0, T, dt, p);
    const Field diff = next.back() - prev.back();
    const double delta = std::sqrt(h1_norm_squared(diff));
    res.history.iterates.push_back(next.back());
    res.history.deltas.push_back(delta);
    prev = std::move(next);
    if (delta <= tol) {
      res.history.converged = true;
      break;
    }
  }
  res.u = helmholtz_smooth(prev.back());
  res.path = std::move(prev);
  return res;
}

// ---- driver -----------------------------------------------------------------

namespace detail {

inline double edge_ratio(const Field& u) {
  const double top = max_abs(u);
  return top > 0.0 ? edge_magnitude(u) / top : 0.0;
}

inline void guard(const Field& u, double t, double edge_tol) {
  if (!all_finite(u)) throw GuardError("non-finite values in the solution", t);
  const double r = edge_ratio(u);
  if (r > edge_tol) {
    std::ostringstream msg;
    msg << "boundary contamination at t = " << t << ": edge/max = " << r << " exceeds "
        << edge_tol;
    throw GuardError(msg.str(), t);
  }
}

}  // namespace detail

/// Steps from u0 to T and calls observer(step, t, u) at every step including
/// the initial state; nothing is stored. The edge guard runs on every state.
template <class Observer>
double evolve_streaming(const Field& u0, double T, double dt, Scheme scheme,
                        const EquationParams& p, const EvolveOptions& opts, Observer&& observer) {
  p.validate();
  const int steps = step_count(T, dt);
  double worst = 0.0;
  auto visit = [&](int s, const Field& u) {
    const double t = s * dt;
    detail::guard(u, t, opts.edge_tol);
    worst = std::max(worst, detail::edge_ratio(u));
    observer(s, t, u);
  };

  if (scheme == Scheme::picard) {
    const PicardResult res = picard_solve(u0, T, dt, p, opts.picard_max_iter, opts.picard_tol);
    for (int s = 0; s <= steps; ++s) visit(s, helmholtz_smooth(res.path[s]));
    return worst;
  }
  Field u = u0;
  visit(0, u);
  for (int s = 1; s <= steps; ++s) {
    try {
      u = scheme == Scheme::strang ? strang_step(u, dt, p) : if_rk4_step(u, dt, p);
    } catch (const ValidationError& e) {
      throw GuardError(std::string(e.what()) + " (at t = " + std::to_string(s * dt) + ")", s * dt);
    }
    visit(s, u);
  }
  return worst;
}

inline Trajectory evolve(const Field& u0, double T, double dt, Scheme scheme,
                         const EquationParams& p, int stride, const EvolveOptions& opts = {}) {
  if (stride < 1) throw ValidationError("evolve: stride must be >= 1");
  const int steps = step_count(T, dt);
  Trajectory tr;
  tr.params = p;
  tr.scheme = scheme;
  tr.dt = dt;
  tr.stride = stride;
  tr.max_edge_ratio = evolve_streaming(u0, T, dt, scheme, p, opts, [&](int s, double t, const Field& u) {
    if (s % stride == 0 || s == steps) {
      tr.times.push_back(t);
      tr.states.push_back(u);
    }
  });
  return tr;
}

}  // namespace hons
