#pragma once

// Uniform periodic grid, discrete Fourier pair, spectral calculus and
// quadrature. Everything else in the library is built on these operations.
//
// Coefficient convention: to_spectral divides the unnormalized forward DFT by
// n, so that from_spectral (the unnormalized backward DFT) is its exact
// inverse. Index m in [0, n) holds wavenumber index j = m for m < n/2 and
// j = m - n otherwise, i.e. j in {-n/2, ..., n/2-1} with k_j = 2*pi*j/length.
// Parseval then reads  integrate(|f|^2) = length * sum_j |c_j|^2.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "hons/error.hpp"

namespace hons {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

inline constexpr cplx kI{0.0, 1.0};

struct Grid {
  double x_min = 0.0;
  double x_max = 0.0;
  int n = 0;

  double length() const { return x_max - x_min; }
  double dx() const { return length() / n; }
  double x(int j) const { return x_min + j * dx(); }

  /// Signed wavenumber index for storage slot m.
  int mode_index(int m) const { return m < n / 2 ? m : m - n; }
  double wavenumber(int m) const {
    return 2.0 * std::numbers::pi * mode_index(m) / length();
  }
  double k_max() const { return std::numbers::pi / dx(); }

  std::vector<double> points() const {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) xs[j] = x(j);
    return xs;
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

inline Grid make_grid(double x_min, double x_max, int n) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min))
    throw ValidationError("grid: need finite x_max > x_min");
  if (n < 16 || !is_power_of_two(n))
    throw ValidationError("grid: n must be a power of two >= 16, got " +
                          std::to_string(n));
  return Grid{x_min, x_max, n};
}

/// Sampled complex function u(x_j).
struct Field {
  Grid grid;
  CVec values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(static_cast<std::size_t>(g.n)) {}
  Field(const Grid& g, CVec v) : grid(g), values(std::move(v)) {
    if (values.size() != static_cast<std::size_t>(g.n))
      throw ValidationError("field: value count does not match grid size");
  }

  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t j) { return values[j]; }
  const cplx& operator[](std::size_t j) const { return values[j]; }

  template <class F>
  static Field sample(const Grid& g, F&& fn) {
    Field f(g);
    for (int j = 0; j < g.n; ++j) f.values[j] = cplx(fn(g.x(j)));
    return f;
  }
};

struct SpectralField {
  Grid grid;
  CVec coeffs;

  SpectralField() = default;
  explicit SpectralField(const Grid& g) : grid(g), coeffs(static_cast<std::size_t>(g.n)) {}
  SpectralField(const Grid& g, CVec c) : grid(g), coeffs(std::move(c)) {}
};

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw ValidationError("fields live on different grids");
}

/// Cached FFTW plans keyed by length. Planning is serialized (the FFTW
/// planner is not thread-safe); execution through fftw_execute_dft on
/// distinct arrays is.
class FftPlans {
 public:
  static const FftPlans& get(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<FftPlans>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) slot.reset(new FftPlans(n));
    return *slot;
  }

  void forward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(fwd_, p, p);
  }
  void backward(cplx* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(bwd_, p, p);
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

 private:
  explicit FftPlans(int n) {
    CVec scratch(static_cast<std::size_t>(n));
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, flags);
    bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, flags);
  }

  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

/// In-place normalized forward transform (values -> coefficients).
inline void fft_forward(CVec& v) {
  const int n = static_cast<int>(v.size());
  FftPlans::get(n).forward(v.data());
  const double s = 1.0 / n;
  for (auto& c : v) c *= s;
}

/// In-place backward transform (coefficients -> values).
inline void fft_backward(CVec& v) {
  FftPlans::get(static_cast<int>(v.size())).backward(v.data());
}

/// (i k)^order, built by repeated multiplication so that composing two
/// multipliers reproduces the higher order one.
inline cplx derivative_symbol(double k, int order) {
  cplx s{1.0, 0.0};
  for (int q = 0; q < order; ++q) s *= cplx(0.0, k);
  return s;
}

}  // namespace detail

inline SpectralField to_spectral(const Field& f) {
  SpectralField s(f.grid, f.values);
  detail::fft_forward(s.coeffs);
  return s;
}

inline Field from_spectral(const SpectralField& s) {
  Field f(s.grid, s.coeffs);
  detail::fft_backward(f.values);
  return f;
}

/// Multiplies every coefficient by symbol(k_j) and returns to physical space.
template <class Symbol>
Field apply_multiplier(const Field& f, Symbol&& symbol) {
  SpectralField s = to_spectral(f);
  for (int m = 0; m < f.grid.n; ++m) s.coeffs[m] *= symbol(f.grid.wavenumber(m));
  return from_spectral(s);
}

inline constexpr int kMaxDerivativeOrder = 8;

inline Field spectral_derivative(const Field& f, int order) {
  if (order < 0) throw ValidationError("spectral_derivative: negative order");
  if (order > kMaxDerivativeOrder)
    throw ValidationError("spectral_derivative: order above 8");
  if (order == 0) return f;
  return apply_multiplier(f, [order](double k) { return detail::derivative_symbol(k, order); });
}

/// All derivatives 0..max_order from a single forward transform.
inline std::vector<Field> spectral_derivatives(const Field& f, int max_order) {
  if (max_order < 0 || max_order > kMaxDerivativeOrder)
    throw ValidationError("spectral_derivatives: order outside [0, 8]");
  const SpectralField s = to_spectral(f);
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(max_order) + 1);
  out.push_back(f);
  for (int order = 1; order <= max_order; ++order) {
    SpectralField d = s;
    for (int m = 0; m < f.grid.n; ++m)
      d.coeffs[m] *= detail::derivative_symbol(f.grid.wavenumber(m), order);
    out.push_back(from_spectral(d));
  }
  return out;
}

/// Lambda = (I - d^2)^{-1}: symbol 1/(1+k^2).
inline Field helmholtz_smooth(const Field& f) {
  return apply_multiplier(f, [](double k) { return cplx(1.0 / (1.0 + k * k)); });
}

/// Samples of f(x - a), via the phase e^{-i k a}.
inline Field translate(const Field& f, double a) {
  if (a == 0.0) return f;
  return apply_multiplier(f, [a](double k) { return std::exp(cplx(0.0, -k * a)); });
}

/// Periodic trapezoid rule.
inline double integrate(std::span<const double> samples, const Grid& grid) {
  if (samples.size() != static_cast<std::size_t>(grid.n))
    throw ValidationError("integrate: sample count does not match grid");
  double s = 0.0;
  for (double v : samples) s += v;
  return s * grid.dx();
}

/// Sum of length * |c_j|^2, equal to integrate(|f|^2) by Parseval.
inline double spectral_energy(const SpectralField& s) {
  double e = 0.0;
  for (const auto& c : s.coeffs) e += std::norm(c);
  return e * s.grid.length();
}

// ---- pointwise helpers --------------------------------------------------

inline std::vector<double> abs2(const Field& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = std::norm(f.values[j]);
  return out;
}

inline double l2_norm_squared(const Field& f) {
  const auto a = abs2(f);
  return integrate(a, f.grid);
}

/// int |f|^2 + |f_x|^2.
inline double h1_norm_squared(const Field& f) {
  const Field fx = spectral_derivative(f, 1);
  return l2_norm_squared(f) + l2_norm_squared(fx);
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (const auto& v : f.values) m = std::max(m, std::abs(v));
  return m;
}

/// Largest magnitude at the two box ends (x_min and the last sample).
inline double edge_magnitude(const Field& f) {
  return std::max(std::abs(f.values.front()), std::abs(f.values.back()));
}

inline bool all_finite(const Field& f) {
  return std::all_of(f.values.begin(), f.values.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

inline Field conj(const Field& f) {
  Field out = f;
  for (auto& v : out.values) v = std::conj(v);
  return out;
}

inline Field operator+(Field a, const Field& b) {
  detail::require_same_grid(a.grid, b.grid);
  for (std::size_t j = 0; j < a.size(); ++j) a.values[j] += b.values[j];
  return a;
}

inline Field operator-(Field a, const Field& b) {
  detail::require_same_grid(a.grid, b.grid);
  for (std::size_t j = 0; j < a.size(); ++j) a.values[j] -= b.values[j];
  return a;
}

inline Field operator*(cplx s, Field a) {
  for (auto& v : a.values) v *= s;
  return a;
}

inline Field operator*(double s, Field a) { return cplx(s) * std::move(a); }

/// Pointwise product without de-aliasing.
inline Field pointwise(const Field& a, const Field& b) {
  detail::require_same_grid(a.grid, b.grid);
  Field out(a.grid);
  for (std::size_t j = 0; j < a.size(); ++j) out.values[j] = a.values[j] * b.values[j];
  return out;
}

inline double max_abs_difference(const Field& a, const Field& b) {
  detail::require_same_grid(a.grid, b.grid);
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a.values[j] - b.values[j]));
  return m;
}

inline double l2_distance(const Field& a, const Field& b) {
  return std::sqrt(l2_norm_squared(a - b));
}

// ---- de-aliased products --------------------------------------------------

namespace detail {

/// Places n coefficients into a 2n spectrum. The Nyquist coefficient is split
/// evenly between +n/2 and -n/2 so padding commutes with conjugation.
inline CVec pad_spectrum(const CVec& c) {
  const std::size_t n = c.size();
  const std::size_t half = n / 2;
  CVec p(2 * n, cplx{});
  for (std::size_t m = 0; m < half; ++m) p[m] = c[m];
  for (std::size_t m = half + 1; m < n; ++m) p[m + n] = c[m];
  p[half] = 0.5 * c[half];
  p[2 * n - half] = 0.5 * c[half];
  return p;
}

inline CVec unpad_spectrum(const CVec& p) {
  const std::size_t n = p.size() / 2;
  const std::size_t half = n / 2;
  CVec c(n);
  for (std::size_t m = 0; m < half; ++m) c[m] = p[m];
  for (std::size_t m = half + 1; m < n; ++m) c[m] = p[m + n];
  c[half] = p[half] + p[2 * n - half];
  return c;
}

/// Physical samples of f on the twice-refined grid (spectral interpolation).
inline CVec upsample(const Field& f) {
  CVec c = f.values;
  fft_forward(c);
  CVec p = pad_spectrum(c);
  fft_backward(p);
  return p;
}

inline Field downsample(const Grid& g, CVec fine) {
  fft_forward(fine);
  CVec c = unpad_spectrum(fine);
  fft_backward(c);
  return Field(g, std::move(c));
}

}  // namespace detail

/// Product of band-limited factors evaluated on a 2n grid and truncated back,
/// which removes all aliasing for up to cubic products.
inline Field dealiased_product(std::initializer_list<const Field*> factors) {
  if (factors.size() == 0) throw ValidationError("dealiased_product: no factors");
  const Grid g = (*factors.begin())->grid;
  CVec acc;
  for (const Field* f : factors) {
    detail::require_same_grid(g, f->grid);
    CVec fine = detail::upsample(*f);
    if (acc.empty()) {
      acc = std::move(fine);
    } else {
      for (std::size_t j = 0; j < acc.size(); ++j) acc[j] *= fine[j];
    }
  }
  return detail::downsample(g, std::move(acc));
}

inline Field dealiased_product(const Field& a, const Field& b) {
  return dealiased_product({&a, &b});
}

inline Field dealiased_product(const Field& a, const Field& b, const Field& c) {
  return dealiased_product({&a, &b, &c});
}

}  // namespace hons
