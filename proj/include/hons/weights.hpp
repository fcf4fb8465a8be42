#pragma once

// Weight classes W_{sigma,i,k}: construction, class verification, weighted
// Sobolev norms and the embedding diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hons/error.hpp"
#include "hons/spectral_grid.hpp"

namespace hons {

struct WeightSpec {
  double sigma = 0.0;
  int i = 0;
  int k = 0;

  void validate() const {
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
      throw ValidationError("weight spec: sigma must be finite and >= 0");
    if (i < 0) throw ValidationError("weight spec: i must be >= 0");
    if (k < 0) throw ValidationError("weight spec: k must be >= 0");
  }

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;
};

inline constexpr int kMaxWeightDerivative = 8;

/// A positive weight xi(x, t) with spatial derivatives and a time derivative.
///
/// Separable weights, xi = t^k h(x), keep the profile h around so callers can
/// sample it once and rescale in time.
class Weight {
 public:
  using SpaceFn = std::function<double(double x, double t, int order)>;
  using TimeFn = std::function<double(double x, double t)>;
  using ProfileFn = std::function<double(double x, int order)>;

  static Weight general(WeightSpec spec, SpaceFn d, TimeFn dt) {
    Weight w;
    w.spec_ = spec;
    w.d_ = std::move(d);
    w.dt_ = std::move(dt);
    return w;
  }

  static Weight separable(WeightSpec spec, ProfileFn h, int time_power) {
    if (time_power < 0) throw ValidationError("weight: negative time power");
    Weight w;
    w.spec_ = spec;
    w.profile_ = std::make_shared<ProfileFn>(std::move(h));
    w.time_power_ = time_power;
    return w;
  }

  const WeightSpec& spec() const { return spec_; }
  bool is_separable() const { return static_cast<bool>(profile_); }
  int time_power() const { return time_power_; }

  double eval(double x, double t) const { return d_eval(x, t, 0); }

  double d_eval(double x, double t, int order) const {
    if (order < 0 || order > kMaxWeightDerivative)
      throw ValidationError("weight: derivative order outside [0, 8]");
    if (profile_) return time_factor(t) * (*profile_)(x, order);
    return d_(x, t, order);
  }

  double dt_eval(double x, double t) const {
    if (profile_) return time_rate(t) * (*profile_)(x, 0);
    return dt_(x, t);
  }

  /// t^k for separable weights.
  double time_factor(double t) const { return std::pow(t, time_power_); }
  /// d/dt of t^k.
  double time_rate(double t) const {
    if (time_power_ == 0) return 0.0;
    return time_power_ * std::pow(t, time_power_ - 1);
  }

  double profile(double x, int order) const {
    if (!profile_) throw ValidationError("weight: profile requested on a non-separable weight");
    return (*profile_)(x, order);
  }

  std::vector<double> sample(const Grid& g, double t, int order = 0) const {
    std::vector<double> s(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j) s[j] = d_eval(g.x(j), t, order);
    return s;
  }

  std::vector<double> sample_dt(const Grid& g, double t) const {
    std::vector<double> s(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j) s[j] = dt_eval(g.x(j), t);
    return s;
  }

 private:
  Weight() = default;

  WeightSpec spec_{};
  SpaceFn d_;
  TimeFn dt_;
  std::shared_ptr<const ProfileFn> profile_;
  int time_power_ = 0;
};

namespace detail {

/// Coefficients (ascending powers) of P_j with d^j/dx^j e^{-1/x} = e^{-s} P_j(s),
/// s = 1/x. Recurrence P_{j+1}(s) = s^2 (P_j(s) - P_j'(s)).
inline std::vector<std::vector<double>> example_weight_polys(int max_order) {
  std::vector<std::vector<double>> polys{{1.0}};
  for (int j = 0; j < max_order; ++j) {
    const auto& p = polys.back();
    std::vector<double> diff(p.size(), 0.0);
    for (std::size_t q = 0; q < p.size(); ++q) {
      diff[q] += p[q];
      if (q > 0) diff[q - 1] -= q * p[q];
    }
    std::vector<double> next(diff.size() + 2, 0.0);
    for (std::size_t q = 0; q < diff.size(); ++q) next[q + 2] = diff[q];
    polys.push_back(std::move(next));
  }
  return polys;
}

inline double horner(const std::vector<double>& c, double s) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * s + *it;
  return acc;
}

/// Quintic smoothstep S(s) = 10 s^3 - 15 s^4 + 6 s^5 and its s-derivatives.
inline double smoothstep(double s, int order) {
  switch (order) {
    case 0: return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    case 1: return 30.0 * s * s * (1.0 - s) * (1.0 - s);
    case 2: return 60.0 * s * (1.0 - 3.0 * s + 2.0 * s * s);
    case 3: return 60.0 * (1.0 - 6.0 * s + 6.0 * s * s);
    case 4: return 60.0 * (12.0 * s - 6.0);
    case 5: return 720.0;
    default: return 0.0;
  }
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int q = 1; q <= k; ++q) r = r * (n - k + q) / q;
  return r;
}

/// Falling factorial i (i-1) ... (i-j+1).
inline double falling(int i, int j) {
  double r = 1.0;
  for (int q = 0; q < j; ++q) r *= (i - q);
  return r;
}

inline constexpr std::array<double, 8> kGaussNodes{
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights{
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss8(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (int q = 0; q < 8; ++q) s += kGaussWeights[q] * f(mid + half * kGaussNodes[q]);
  return s * half;
}

/// Composite 8-point Gauss-Legendre on [a, b] with cells no wider than h.
template <class F>
double gauss_composite(F&& f, double a, double b, double h) {
  if (b == a) return 0.0;
  const int cells = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / h)));
  const double w = (b - a) / cells;
  double s = 0.0;
  for (int c = 0; c < cells; ++c) s += gauss8(f, a + c * w, a + (c + 1) * w);
  return s;
}

}  // namespace detail

/// xi(x) = 1 for x <= 0, 1 + e^{-1/x} for x > 0. Time independent.
inline Weight example_weight() {
  auto polys = std::make_shared<const std::vector<std::vector<double>>>(
      detail::example_weight_polys(kMaxWeightDerivative));
  return Weight::separable(
      WeightSpec{0.0, 0, 0},
      [polys](double x, int order) {
        if (x <= 0.0) return order == 0 ? 1.0 : 0.0;
        const double s = 1.0 / x;
        // values below 1e-250 here; also keeps s^16 from overflowing
        if (s > 700.0) return order == 0 ? 1.0 : 0.0;
        const double core = std::exp(-s) * detail::horner((*polys)[order], s);
        return order == 0 ? 1.0 + core : core;
      },
      0);
}

/// t^k h(x): h = e^{sigma x} for x <= -1 (1 when sigma = 0), h = c_R (kappa + x)^i
/// for x >= 1 with kappa = 2, c_R = e^sigma, quintic smoothstep blend between.
/// Since c_R (kappa+x)^i >= e^sigma >= e^{sigma x} on [-1, 1], the blend is
/// nondecreasing, and it is C^2 at both seams.
inline Weight canonical_weight(const WeightSpec& spec) {
  spec.validate();
  const double sigma = spec.sigma;
  const int pi = spec.i;
  constexpr double kappa = 2.0;
  const double c_r = std::exp(sigma);

  auto left = [sigma](double x, int order) {
    return std::pow(sigma, order) * std::exp(sigma * x);
  };
  auto right = [pi, c_r](double x, int order) {
    if (order > pi) return 0.0;
    return c_r * detail::falling(pi, order) * std::pow(kappa + x, pi - order);
  };

  return Weight::separable(
      spec,
      [left, right](double x, int order) {
        if (x <= -1.0) return left(x, order);
        if (x >= 1.0) return right(x, order);
        const double s = 0.5 * (x + 1.0);
        double acc = 0.0;
        for (int q = 0; q <= order; ++q) {
          const double sq = detail::smoothstep(s, q) * std::pow(0.5, q);
          const double one_minus = (q == 0 ? 1.0 : 0.0) - sq;
          acc += detail::binomial(order, q) *
                 (one_minus * left(x, order - q) + sq * right(x, order - q));
        }
        return acc;
      },
      spec.k);
}

/// Antiderivative construction: xi = (1/(3 beta - |omega|)) int_{-inf}^x eta dy.
///
/// The integral is anchored at grid.x_min. The piece left of the anchor is
/// closed form: eta(x_min)/sigma for sigma > 0 (exact when eta is on its
/// exponential branch there, as canonical weights are for x_min <= -1), and
/// eta(x_min) * 1 (one unit of length) when sigma = 0, where the true tail
/// diverges. For x < x_min the sigma > 0 branch uses eta(x)/sigma; the sigma = 0
/// branch holds the anchor value.
inline Weight weight_from_eta(const Weight& eta, double omega, double beta, const Grid& grid) {
  const double c = 3.0 * beta - std::abs(omega);
  if (!(c > 0.0))
    throw ValidationError("weight_from_eta: need |omega| < 3 beta (3 beta - |omega| = " +
                          std::to_string(c) + ")");
  WeightSpec spec = eta.spec();
  spec.i += 1;
  const double sigma = spec.sigma;
  const double x0 = grid.x_min;
  const double h = grid.dx();

  auto tail = [sigma](double eta_x, double) { return sigma > 0.0 ? eta_x / sigma : eta_x; };

  if (eta.is_separable()) {
    // cumulative profile integral at x0 + m*h, m = 0..n
    auto table = std::make_shared<std::vector<double>>(static_cast<std::size_t>(grid.n) + 1);
    auto prof = [eta](double y) { return eta.profile(y, 0); };
    (*table)[0] = tail(eta.profile(x0, 0), x0);
    for (int m = 0; m < grid.n; ++m)
      (*table)[m + 1] = (*table)[m] + detail::gauss8(prof, x0 + m * h, x0 + (m + 1) * h);

    auto primitive = [=](double x) {
      if (x < x0) return sigma > 0.0 ? eta.profile(x, 0) / sigma : (*table)[0];
      const int m = std::min(grid.n, static_cast<int>(std::floor((x - x0) / h)));
      const double start = x0 + m * h;
      if (m == grid.n) return (*table)[m] + detail::gauss_composite(prof, start, x, h);
      return (*table)[m] + detail::gauss8(prof, start, x);
    };
    return Weight::separable(
        spec,
        [eta, primitive, c](double x, int order) {
          if (order == 0) return primitive(x) / c;
          return eta.profile(x, order - 1) / c;
        },
        eta.time_power());
  }

  auto primitive = [=](double x, double t, bool time_derivative) {
    auto f = [&](double y) { return time_derivative ? eta.dt_eval(y, t) : eta.eval(y, t); };
    const double anchor = f(x0);
    if (x < x0) return sigma > 0.0 ? f(x) / sigma : tail(anchor, x0);
    return tail(anchor, x0) + detail::gauss_composite(f, x0, x, h);
  };
  return Weight::general(
      spec,
      [eta, primitive, c](double x, double t, int order) {
        if (order == 0) return primitive(x, t, false) / c;
        return eta.d_eval(x, t, order - 1) / c;
      },
      [primitive, c](double x, double t) { return primitive(x, t, true) / c; });
}

/// Largest |d xi - eta/(3 beta - |omega|)| over the grid points, with d xi from
/// central differences of xi = weight_from_eta(eta, ...), measured relative to
/// max(1, eta/(3 beta - |omega|)).
inline double eta_roundtrip_error(const Weight& eta, double omega, double beta, const Grid& grid,
                                  double t, double h = 1e-4) {
  const Weight xi = weight_from_eta(eta, omega, beta, grid);
  const double c = 3.0 * beta - std::abs(omega);
  double worst = 0.0;
  for (int j = 1; j < grid.n; ++j) {
    const double x = grid.x(j);
    const double fd = (xi.eval(x + h, t) - xi.eval(x - h, t)) / (2.0 * h);
    const double target = eta.eval(x, t) / c;
    worst = std::max(worst, std::abs(fd - target) / std::max(1.0, std::abs(target)));
  }
  return worst;
}

// ---- class verification ---------------------------------------------------

struct WeightClassReport {
  bool ok = true;
  std::string failure;       // violated condition, empty when ok
  double witness_x = 0.0;
  double witness_t = 0.0;
  // inf / sup of t^{-k} e^{-sigma x} xi on x < -1
  double c1 = std::numeric_limits<double>::infinity();
  double c2 = 0.0;
  // inf / sup of t^{-k} x^{-i} xi on x > 1
  double c3 = std::numeric_limits<double>::infinity();
  double c4 = 0.0;
  // sup over j = 1..5 of (t |d_t xi| + |d^j xi|) / xi
  double c5 = 0.0;
};

/// Samples the three class conditions on grid x [t_lo, t_hi] (t_samples
/// equally spaced times including both ends).
inline WeightClassReport verify_weight_class(const Weight& w, double t_lo, double t_hi,
                                             const Grid& grid, int t_samples = 5) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo))
    throw ValidationError("verify_weight_class: need 0 < t_lo <= t_hi");
  if (!(grid.x_min < -1.0 && grid.x_max > 1.0))
    throw ValidationError("verify_weight_class: grid must extend past x = -1 and x = 1");
  if (t_samples < 1) throw ValidationError("verify_weight_class: t_samples must be >= 1");

  const WeightSpec& spec = w.spec();
  WeightClassReport rep;
  auto fail = [&](std::string what, double x, double t) {
    if (!rep.ok) return;
    rep.ok = false;
    rep.failure = std::move(what);
    rep.witness_x = x;
    rep.witness_t = t;
  };

  for (int s = 0; s < t_samples; ++s) {
    const double t = t_samples == 1 ? t_lo : t_lo + (t_hi - t_lo) * s / (t_samples - 1);
    const double tk = std::pow(t, spec.k);
    for (int j = 0; j < grid.n; ++j) {
      const double x = grid.x(j);
      const double xi = w.eval(x, t);
      if (!std::isfinite(xi)) {
        fail("finite: xi is not finite", x, t);
        continue;
      }
      if (!(xi > 0.0)) {
        fail("positivity: xi <= 0", x, t);
        continue;
      }
      const double d1 = w.d_eval(x, t, 1);
      if (!(d1 >= 0.0)) fail("monotonicity: d xi < 0", x, t);

      if (x < -1.0) {
        const double v = xi / (tk * std::exp(spec.sigma * x));
        rep.c1 = std::min(rep.c1, v);
        rep.c2 = std::max(rep.c2, v);
      } else if (x > 1.0) {
        const double v = xi / (tk * std::pow(x, spec.i));
        rep.c3 = std::min(rep.c3, v);
        rep.c4 = std::max(rep.c4, v);
      }
      const double tdt = t * std::abs(w.dt_eval(x, t));
      for (int order = 1; order <= 5; ++order) {
        const double r = (tdt + std::abs(w.d_eval(x, t, order))) / xi;
        if (!std::isfinite(r)) fail("derivative ratio: not finite", x, t);
        else rep.c5 = std::max(rep.c5, r);
      }
    }
  }
  if (rep.ok) {
    if (!(rep.c1 > 0.0) || !std::isfinite(rep.c2)) fail("left bound: constant not positive/finite", grid.x_min, t_lo);
    else if (!(rep.c3 > 0.0) || !std::isfinite(rep.c4)) fail("right bound: constant not positive/finite", grid.x_max, t_lo);
  }
  return rep;
}

// ---- norms ------------------------------------------------------------------

struct NormReport {
  int order = 0;
  double value = 0.0;
  std::vector<double> per_derivative;
};

/// Sum over j = 0..N of int |d^j u|^2 xi(., t) dx, with the weight already
/// sampled on u's grid.
inline NormReport weighted_norm_sampled(const Field& u, int N, std::span<const double> xi) {
  if (N < 0 || N > kMaxDerivativeOrder) throw ValidationError("weighted_norm: N outside [0, 8]");
  if (xi.size() != u.size()) throw ValidationError("weighted_norm: weight sample count mismatch");
  NormReport rep;
  rep.order = N;
  const auto derivs = spectral_derivatives(u, N);
  std::vector<double> integrand(u.size());
  for (int j = 0; j <= N; ++j) {
    for (std::size_t m = 0; m < u.size(); ++m) integrand[m] = std::norm(derivs[j].values[m]) * xi[m];
    rep.per_derivative.push_back(integrate(integrand, u.grid));
  }
  for (double v : rep.per_derivative) rep.value += v;
  return rep;
}

inline NormReport weighted_norm(const Field& u, int N, const Weight& w, double t) {
  if (N < 0 || N > kMaxDerivativeOrder) throw ValidationError("weighted_norm: N outside [0, 8]");
  return weighted_norm_sampled(u, N, w.sample(u.grid, t));
}

/// Unweighted H^N norm squared.
inline double sobolev_norm_squared(const Field& u, int N) {
  std::vector<double> one(u.size(), 1.0);
  return weighted_norm_sampled(u, N, one).value;
}

struct SupBound {
  double sup = 0.0;
  double integral = 0.0;
  double ratio = 0.0;
};

/// sup xi |u|^2 against int (|u|^2 + |u_x|^2) xi.
inline SupBound sup_bound_ratio(const Field& u, const Weight& w, double t) {
  const auto xi = w.sample(u.grid, t);
  SupBound b;
  for (std::size_t m = 0; m < u.size(); ++m) b.sup = std::max(b.sup, xi[m] * std::norm(u.values[m]));
  if (!(b.sup > 0.0)) throw ValidationError("sup_bound_ratio: zero field");
  b.integral = weighted_norm_sampled(u, 1, xi).value;
  b.ratio = b.sup / b.integral;
  return b;
}

namespace detail {

inline double lp_norm(const Field& f, double p) {
  if (std::isinf(p)) return max_abs(f);
  std::vector<double> s(f.size());
  for (std::size_t m = 0; m < f.size(); ++m) s[m] = std::pow(std::abs(f.values[m]), p);
  return std::pow(integrate(s, f.grid), 1.0 / p);
}

inline double reciprocal(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

}  // namespace detail

/// Interpolation exponent a from 1/p = j + a (1/r - m) + (1 - a)/q, clamped to
/// [j/m, 1] when it lies within 1e-12 of that range.
inline double gn_exponent(int j, int m, double p, double q, double r) {
  if (j < 0 || m < 0 || j > m) throw ValidationError("gn_ratio: need 0 <= j <= m");
  for (double e : {p, q, r})
    if (!(e >= 1.0)) throw ValidationError("gn_ratio: exponents must lie in [1, inf]");
  const double lo = m == 0 ? 0.0 : static_cast<double>(j) / m;
  const double num = detail::reciprocal(p) - j - detail::reciprocal(q);
  const double den = detail::reciprocal(r) - m - detail::reciprocal(q);
  constexpr double slack = 1e-12;
  if (std::abs(den) < slack) {
    if (std::abs(num) < slack) return lo;
    throw ValidationError("gn_ratio: no exponent a satisfies the scaling relation");
  }
  double a = num / den;
  if (a < lo - slack || a > 1.0 + slack)
    throw ValidationError("gn_ratio: exponent a = " + std::to_string(a) + " outside [j/m, 1]");
  return std::clamp(a, lo, 1.0);
}

/// ||d^j u||_p / (||d^m u||_r^a ||u||_q^{1-a}); L^inf is the grid max.
inline double gn_ratio(const Field& u, int j, int m, double p, double q, double r) {
  const double a = gn_exponent(j, m, p, q, r);
  const double top = detail::lp_norm(spectral_derivative(u, j), p);
  const double dm = detail::lp_norm(spectral_derivative(u, m), r);
  const double base = detail::lp_norm(u, q);
  return top / (std::pow(dm, a) * std::pow(base, 1.0 - a));
}

}  // namespace hons
