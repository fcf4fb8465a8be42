#pragma once

// The equation i u_t + w u_xx + i b u_xxx + g |u|^2 u + i d |u|^2 u_x + i e u^2 conj(u)_x = 0,
// solved for the time derivative:
//   u_t = i w u_xx - b u_xxx + N(u),  N(u) = i g |u|^2 u - d |u|^2 u_x - e u^2 conj(u)_x.
// A plane wave e^{ikx} under the linear part evolves as e^{m(k) t}, m(k) = i (b k^3 - w k^2).

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>

#include "hons/error.hpp"
#include "hons/spectral_grid.hpp"

namespace hons {

struct EquationParams {
  double omega = 0.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 0.0;
  double epsilon = 0.0;

  void validate() const {
    for (double v : {omega, beta, gamma, delta, epsilon})
      if (!std::isfinite(v)) throw ValidationError("equation: coefficients must be finite");
    if (beta == 0.0) throw ValidationError("equation: beta must be nonzero (beta != 0)");
  }

  /// |omega| < 3 beta, the hypothesis of the weighted inequality.
  bool smoothing_condition() const { return std::abs(omega) < 3.0 * beta; }

  /// No derivative nonlinearity: the cubic NLS-type special case.
  bool cubic_only() const { return delta == 0.0 && epsilon == 0.0; }

  bool linear_only() const { return gamma == 0.0 && cubic_only(); }

  friend bool operator==(const EquationParams&, const EquationParams&) = default;
};

/// Special case gamma = 1, delta = epsilon = 0.
inline EquationParams problem_p(double omega, double beta) {
  return EquationParams{omega, beta, 1.0, 0.0, 0.0};
}

inline cplx dispersion_multiplier(double k, const EquationParams& p) {
  return cplx(0.0, p.beta * k * k * k - p.omega * k * k);
}

/// N(u) with all products formed on the 2n grid.
inline Field nonlinear_term(const Field& u, const EquationParams& p) {
  const Grid& g = u.grid;
  CVec c = u.values;
  detail::fft_forward(c);
  CVec cx(c.size());
  for (int m = 0; m < g.n; ++m) cx[m] = cplx(0.0, g.wavenumber(m)) * c[m];

  CVec fu = detail::pad_spectrum(c);
  detail::fft_backward(fu);
  const bool derivative_terms = !p.cubic_only();
  CVec fux;
  if (derivative_terms) {
    fux = detail::pad_spectrum(cx);
    detail::fft_backward(fux);
  }
  CVec out(fu.size());
  for (std::size_t j = 0; j < fu.size(); ++j) {
    const cplx v = fu[j];
    const double a2 = std::norm(v);
    cplx r = cplx(0.0, p.gamma * a2) * v;
    if (derivative_terms) r += -p.delta * a2 * fux[j] - p.epsilon * v * v * std::conj(fux[j]);
    out[j] = r;
  }
  return detail::downsample(g, std::move(out));
}

inline Field linear_term(const Field& u, const EquationParams& p) {
  return apply_multiplier(u, [&p](double k) { return dispersion_multiplier(k, p); });
}

inline Field full_rhs(const Field& u, const EquationParams& p) {
  return linear_term(u, p) + nonlinear_term(u, p);
}

// ---- gauge transformation ---------------------------------------------------

struct GaugeCoeffs {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

inline GaugeCoeffs gauge_coeffs(const EquationParams& p) {
  if (p.beta == 0.0) throw ValidationError("gauge: beta must be nonzero");
  const double w = p.omega;
  const double b = p.beta;
  return GaugeCoeffs{w * w / (3.0 * b), w / (3.0 * b), -2.0 * w * w * w / (27.0 * b * b)};
}

namespace detail {

/// e^{i d2 x} must be periodic on the box: d2 * length in 2 pi Z.
inline void require_gauge_compatible(const Grid& g, double d2) {
  if (d2 == 0.0) return;
  const double turns = d2 * g.length() / (2.0 * std::numbers::pi);
  if (std::abs(turns - std::round(turns)) > 1e-9 || std::round(turns) == 0.0) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "gauge: domain length " << g.length() << " is incompatible with d2 = " << d2
        << "; the length must be a nonzero integer multiple of 2*pi/|d2| = "
        << 2.0 * std::numbers::pi / std::abs(d2);
    throw ValidationError(msg.str());
  }
}

inline Field modulate(Field f, double d2, double phase) {
  for (int j = 0; j < f.grid.n; ++j) f.values[j] *= std::exp(cplx(0.0, d2 * f.grid.x(j) + phase));
  return f;
}

}  // namespace detail

/// u(x, t) = e^{i d2 x + i d3 t} v(x - d1 t, t).
inline Field gauge_forward(const Field& v, const EquationParams& p, double t) {
  const GaugeCoeffs c = gauge_coeffs(p);
  detail::require_gauge_compatible(v.grid, c.d2);
  if (p.omega == 0.0) return v;
  return detail::modulate(translate(v, c.d1 * t), c.d2, c.d3 * t);
}

inline Field gauge_inverse(const Field& u, const EquationParams& p, double t) {
  const GaugeCoeffs c = gauge_coeffs(p);
  detail::require_gauge_compatible(u.grid, c.d2);
  if (p.omega == 0.0) return u;
  return translate(detail::modulate(u, -c.d2, -c.d3 * t), -c.d1 * t);
}

/// Coefficients of the equation satisfied by the gauge image v. Substituting
/// u = e^{i theta} v turns i d |u|^2 u_x into e^{i theta}(i d |v|^2 v_x - d d2 |v|^2 v)
/// and i e u^2 conj(u)_x into e^{i theta}(i e v^2 conj(v)_x + e d2 |v|^2 v), so the
/// cubic coefficient becomes gamma + (e - d) d2.
inline EquationParams transformed_params(const EquationParams& p) {
  const GaugeCoeffs c = gauge_coeffs(p);
  return EquationParams{0.0, p.beta, p.gamma + (p.epsilon - p.delta) * c.d2, p.delta, p.epsilon};
}

/// The alternative cubic coefficient gamma + e d/(3 b) - w d/(3 b), kept for the
/// comparative probe.
inline EquationParams printed_transformed_params(const EquationParams& p) {
  if (p.beta == 0.0) throw ValidationError("gauge: beta must be nonzero");
  const double g = p.gamma + p.epsilon * p.delta / (3.0 * p.beta) - p.omega * p.delta / (3.0 * p.beta);
  return EquationParams{0.0, p.beta, g, p.delta, p.epsilon};
}

}  // namespace hons
