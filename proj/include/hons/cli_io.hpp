#pragma once

// Run configuration files, CSV output and the subcommand dispatcher.
//
// Configuration is INI-like text:
//
//   [equation]            omega, beta, gamma (required); delta, epsilon (default 0)
//   [grid]                x_min, x_max, n (required); edge_tol (default 1e-6)
//   [time]                t_end, dt (required); scheme (strang), stride (1),
//                         picard_max_iter (30), picard_tol (1e-10)
//   [initial]             kind (required); amplitude, width, phase_c, L, slope, seed
//   [weights]             sigma, i, k (all required); the section may repeat
//   [output]              path (directory, default "."), precision (12)
//   [convergence]         levels (3), strang_dt, ifrk4_dt
//
// '#' and ';' start comment lines. Unknown sections or keys are errors.

#include <algorithm>
#include <charconv>
#include <deque>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hons/error.hpp"
#include "hons/experiments.hpp"
#include "hons/identities.hpp"
#include "hons/integrators.hpp"
#include "hons/weights.hpp"

namespace hons {

/// All problems found in a configuration, each prefixed with its line.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : ValidationError(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& e) {
    std::string s;
    for (const auto& line : e) s += line + "\n";
    return s;
  }
  std::vector<std::string> errors_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::map<std::string, Entry> keys;
};

inline const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"equation", {"omega", "beta", "gamma", "delta", "epsilon"}},
      {"grid", {"x_min", "x_max", "n", "edge_tol"}},
      {"time", {"t_end", "dt", "scheme", "stride", "picard_max_iter", "picard_tol"}},
      {"initial", {"kind", "amplitude", "width", "phase_c", "L", "slope", "seed"}},
      {"weights", {"sigma", "i", "k"}},
      {"output", {"path", "precision"}},
      {"convergence", {"levels", "strang_dt", "ifrk4_dt"}},
  };
  return k;
}

class ConfigReader {
 public:
  explicit ConfigReader(std::string_view text) { scan(text); }

  std::vector<std::string> errors;
  std::deque<Section> sections;  // deque keeps section pointers stable

  const Section* single(const std::string& name) {
    const Section* found = nullptr;
    for (const auto& s : sections) {
      if (s.name != name) continue;
      if (found) error(s.line, "section [" + name + "] appears more than once");
      else found = &s;
    }
    return found;
  }

  void error(int line, const std::string& what) {
    errors.push_back("line " + std::to_string(line) + ": " + what);
  }

  template <class T>
  std::optional<T> get(const Section* s, const char* key, bool required) {
    if (!s) {
      if (required) errors.push_back(std::string("missing required key '") + key + "'");
      return std::nullopt;
    }
    const auto it = s->keys.find(key);
    if (it == s->keys.end()) {
      if (required)
        error(s->line, "[" + s->name + "] is missing required key '" + key + "'");
      return std::nullopt;
    }
    T out{};
    if (!parse(it->second.value, out)) {
      error(it->second.line, "key '" + std::string(key) + "': cannot parse '" + it->second.value +
                                 "' as " + type_name<T>());
      return std::nullopt;
    }
    return out;
  }

  int line_of(const Section* s, const char* key) const {
    if (!s) return 0;
    const auto it = s->keys.find(key);
    return it == s->keys.end() ? s->line : it->second.line;
  }

 private:
  template <class T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, double>) return "a real number";
    else if constexpr (std::is_same_v<T, std::string>) return "text";
    else return "an integer";
  }

  static bool parse(const std::string& v, std::string& out) {
    out = v;
    return !v.empty();
  }

  template <class T>
  static bool parse(const std::string& v, T& out) {
    const char* b = v.data();
    const char* e = b + v.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc{} || p != e) return false;
    if constexpr (std::is_floating_point_v<T>) return std::isfinite(out);
    return true;
  }

  void scan(std::string_view text) {
    int line_no = 0;
    Section* current = nullptr;
    while (!text.empty()) {
      const auto nl = text.find('\n');
      const std::string_view raw = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      const std::string_view line = trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          error(line_no, "malformed section header");
          current = nullptr;
          continue;
        }
        std::string name(trim(line.substr(1, line.size() - 2)));
        if (!allowed_keys().count(name)) {
          error(line_no, "unknown section [" + name + "]");
          current = nullptr;
          continue;
        }
        sections.push_back({name, line_no, {}});
        current = &sections.back();
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        error(line_no, "expected 'key = value'");
        continue;
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (!current) {
        error(line_no, "key '" + key + "' outside a known section");
        continue;
      }
      if (!allowed_keys().at(current->name).count(key)) {
        error(line_no, "unknown key '" + key + "' in [" + current->name + "]");
        continue;
      }
      if (current->keys.count(key)) {
        error(line_no, "duplicate key '" + key + "' in [" + current->name + "]");
        continue;
      }
      current->keys[key] = {value, line_no};
    }
  }
};

}  // namespace detail

/// Parses and validates a configuration, reporting every problem at once.
inline ExperimentConfig parse_config(std::string_view text) {
  detail::ConfigReader r(text);
  ExperimentConfig cfg;

  const auto* eq = r.single("equation");
  if (!eq) r.errors.push_back("missing section [equation]");
  if (eq) {
    cfg.params.omega = r.get<double>(eq, "omega", true).value_or(0.0);
    cfg.params.beta = r.get<double>(eq, "beta", true).value_or(1.0);
    cfg.params.gamma = r.get<double>(eq, "gamma", true).value_or(1.0);
    cfg.params.delta = r.get<double>(eq, "delta", false).value_or(0.0);
    cfg.params.epsilon = r.get<double>(eq, "epsilon", false).value_or(0.0);
    if (eq->keys.count("beta") && cfg.params.beta == 0.0)
      r.error(r.line_of(eq, "beta"), "beta = 0 violates the invariant beta != 0");
  }

  const auto* gr = r.single("grid");
  if (!gr) r.errors.push_back("missing section [grid]");
  if (gr) {
    const auto x0 = r.get<double>(gr, "x_min", true);
    const auto x1 = r.get<double>(gr, "x_max", true);
    const auto n = r.get<int>(gr, "n", true);
    cfg.edge_tol = r.get<double>(gr, "edge_tol", false).value_or(1e-6);
    if (!(cfg.edge_tol > 0.0)) r.error(r.line_of(gr, "edge_tol"), "edge_tol must be > 0");
    if (x0 && x1 && n) {
      try {
        cfg.grid = make_grid(*x0, *x1, *n);
      } catch (const ValidationError& e) {
        r.error(r.line_of(gr, "n"), e.what());
      }
    }
  }

  const auto* tm = r.single("time");
  if (!tm) r.errors.push_back("missing section [time]");
  if (tm) {
    cfg.T = r.get<double>(tm, "t_end", true).value_or(1.0);
    cfg.dt = r.get<double>(tm, "dt", true).value_or(1e-3);
    cfg.stride = r.get<int>(tm, "stride", false).value_or(1);
    cfg.picard_max_iter = r.get<int>(tm, "picard_max_iter", false).value_or(30);
    cfg.picard_tol = r.get<double>(tm, "picard_tol", false).value_or(1e-10);
    if (const auto s = r.get<std::string>(tm, "scheme", false)) {
      try {
        cfg.scheme = parse_scheme(*s);
      } catch (const ValidationError& e) {
        r.error(r.line_of(tm, "scheme"), e.what());
      }
    }
    if (cfg.stride < 1) r.error(r.line_of(tm, "stride"), "stride must be >= 1");
    if (cfg.picard_max_iter < 1) r.error(r.line_of(tm, "picard_max_iter"), "picard_max_iter must be >= 1");
    if (tm->keys.count("t_end") && tm->keys.count("dt")) {
      try {
        step_count(cfg.T, cfg.dt);
      } catch (const ValidationError& e) {
        r.error(r.line_of(tm, "dt"), std::string(e.what()) + " (t_end/dt)");
      }
    }
  }

  const auto* in = r.single("initial");
  if (!in) r.errors.push_back("missing section [initial]");
  if (in) {
    cfg.initial.kind = r.get<std::string>(in, "kind", true).value_or("sech");
    cfg.initial.amplitude = r.get<double>(in, "amplitude", false).value_or(1.0);
    cfg.initial.width = r.get<double>(in, "width", false).value_or(cfg.initial.kind == "rough_decaying" ? 6.0 : 1.0);
    cfg.initial.phase_c = r.get<double>(in, "phase_c", false).value_or(0.0);
    cfg.initial.L = r.get<int>(in, "L", false).value_or(3);
    cfg.initial.slope = r.get<double>(in, "slope", false).value_or(3.55);
    cfg.initial.seed = r.get<std::uint64_t>(in, "seed", false).value_or(0);
    static const std::set<std::string> kinds{"sech", "gaussian", "rough_decaying"};
    if (!kinds.count(cfg.initial.kind))
      r.error(r.line_of(in, "kind"), "unknown initial kind '" + cfg.initial.kind + "'");
    if (!(cfg.initial.width > 0.0)) r.error(r.line_of(in, "width"), "width must be > 0");
    if (cfg.initial.L < 0) r.error(r.line_of(in, "L"), "L must be >= 0");
  }

  for (const auto& s : r.sections) {
    if (s.name != "weights") continue;
    WeightSpec w;
    w.sigma = r.get<double>(&s, "sigma", true).value_or(0.0);
    w.i = r.get<int>(&s, "i", true).value_or(0);
    w.k = r.get<int>(&s, "k", true).value_or(0);
    try {
      w.validate();
    } catch (const ValidationError& e) {
      r.error(s.line, e.what());
    }
    cfg.weights.push_back(w);
  }

  if (const auto* out = r.single("output")) {
    cfg.output_path = r.get<std::string>(out, "path", false).value_or("");
    cfg.precision = r.get<int>(out, "precision", false).value_or(12);
    if (cfg.precision < 1 || cfg.precision > 17)
      r.error(r.line_of(out, "precision"), "precision must lie in [1, 17]");
  }

  if (const auto* cv = r.single("convergence")) {
    cfg.convergence.levels = r.get<int>(cv, "levels", false).value_or(3);
    cfg.convergence.strang_dt = r.get<double>(cv, "strang_dt", false).value_or(0.0);
    cfg.convergence.ifrk4_dt = r.get<double>(cv, "ifrk4_dt", false).value_or(0.0);
    if (cfg.convergence.levels < 3) r.error(r.line_of(cv, "levels"), "levels must be >= 3");
  }

  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  return cfg;
}

// ---- number formatting and CSV ----------------------------------------------

/// Scientific notation with `precision` significant digits, independent of locale.
inline std::string format_real(double v, int precision) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, precision - 1);
  return std::string(buf, r.ptr);
}

/// Shortest round-trip form, used for the resolved configuration.
inline std::string format_exact(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class CsvTable {
 public:
  CsvTable(std::vector<std::string> header, int precision)
      : header_(std::move(header)), precision_(precision) {}

  class Row {
   public:
    Row(CsvTable& t) : t_(t) {}
    Row& operator<<(double v) { return cell(format_real(v, t_.precision_)); }
    Row& operator<<(int v) { return cell(std::to_string(v)); }
    Row& operator<<(const std::string& v) { return cell(v); }
    Row& operator<<(const char* v) { return cell(v); }
    ~Row() { t_.rows_.push_back(std::move(cells_)); }

   private:
    Row& cell(std::string s) {
      cells_.push_back(std::move(s));
      return *this;
    }
    CsvTable& t_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }

  std::string str() const {
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (j) out += ',';
        out += cells[j];
      }
      out += '\n';
    };
    line(header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) throw std::logic_error("csv: row width does not match header");
      line(r);
    }
    return out;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  int precision_;
  std::vector<std::vector<std::string>> rows_;
};

/// Canonical text of a resolved configuration: every value, defaults
/// included, in a fixed order. Hashing it names the output files.
inline std::string resolved_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto kv = [&o](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  o << "[equation]\n";
  kv("omega", format_exact(c.params.omega));
  kv("beta", format_exact(c.params.beta));
  kv("gamma", format_exact(c.params.gamma));
  kv("delta", format_exact(c.params.delta));
  kv("epsilon", format_exact(c.params.epsilon));
  o << "[grid]\n";
  kv("x_min", format_exact(c.grid.x_min));
  kv("x_max", format_exact(c.grid.x_max));
  kv("n", std::to_string(c.grid.n));
  kv("edge_tol", format_exact(c.edge_tol));
  o << "[time]\n";
  kv("t_end", format_exact(c.T));
  kv("dt", format_exact(c.dt));
  kv("scheme", scheme_name(c.scheme));
  kv("stride", std::to_string(c.stride));
  kv("picard_max_iter", std::to_string(c.picard_max_iter));
  kv("picard_tol", format_exact(c.picard_tol));
  o << "[initial]\n";
  kv("kind", c.initial.kind);
  kv("amplitude", format_exact(c.initial.amplitude));
  kv("width", format_exact(c.initial.width));
  kv("phase_c", format_exact(c.initial.phase_c));
  kv("L", std::to_string(c.initial.L));
  kv("slope", format_exact(c.initial.slope));
  kv("seed", std::to_string(c.initial.seed));
  for (const auto& w : c.weights) {
    o << "[weights]\n";
    kv("sigma", format_exact(w.sigma));
    kv("i", std::to_string(w.i));
    kv("k", std::to_string(w.k));
  }
  o << "[output]\n";
  kv("precision", std::to_string(c.precision));
  o << "[convergence]\n";
  kv("levels", std::to_string(c.convergence.levels));
  kv("strang_dt", format_exact(c.convergence.strang_dt));
  kv("ifrk4_dt", format_exact(c.convergence.ifrk4_dt));
  return o.str();
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  const auto r = std::to_chars(buf, buf + 16, fnv1a(resolved_config(c)), 16);
  std::string h(buf, r.ptr);
  return std::string(16 - h.size(), '0') + h;
}

// ---- reports as tables --------------------------------------------------------

inline CsvTable simulate_table(const ExperimentConfig& cfg) {
  CsvTable t({"t", "l2", "h1", "h3", "linf", "edge_mag"}, cfg.precision);
  const Field u0 = make_initial(cfg);
  evolve_streaming(u0, cfg.T, cfg.dt, cfg.scheme, cfg.params, cfg.evolve_options(),
                   [&](int s, double time, const Field& u) {
                     const int steps = step_count(cfg.T, cfg.dt);
                     if (s % cfg.stride != 0 && s != steps) return;
                     t.row() << time << std::sqrt(l2_norm_squared(u)) << std::sqrt(h1_norm_squared(u))
                             << std::sqrt(sobolev_norm_squared(u, 3)) << max_abs(u) << edge_magnitude(u);
                   });
  return t;
}

/// Identity residuals along a stride-1 run. The weighted checks use the first
/// [weights] spec as a canonical weight, or the example weight when none is
/// given. The lemma31 columns report the alpha in {1, 2} with the larger
/// lhs/scale, and are nan when |omega| < 3 beta fails.
inline CsvTable identity_table(const ExperimentConfig& cfg) {
  if (cfg.stride != 1) throw ValidationError("identity-check: stride must be 1");
  if (!cfg.params.cubic_only()) throw ValidationError("identity-check: needs delta = epsilon = 0");
  const Weight w = cfg.weights.empty() ? example_weight() : canonical_weight(cfg.weights.front());
  const WeightSampler sampler(w, cfg.grid);
  const bool gate = cfg.params.smoothing_condition();

  struct PerState {
    double t;
    H1Terms h1;
    IdentitySample wid[2];
    Lemma31State l31[2];
  };
  std::vector<PerState> states;
  evolve_streaming(make_initial(cfg), cfg.T, cfg.dt, cfg.scheme, cfg.params, cfg.evolve_options(),
                   [&](int, double time, const Field& u) {
                     PerState ps{};
                     ps.t = time;
                     const auto d = spectral_derivatives(u, 3);
                     ps.h1 = h1_terms(d);
                     const WeightSamples& ws = sampler.at(time);
                     for (int a = 1; a <= 2; ++a) {
                       ps.wid[a - 1] = weighted_identity_sample(d, time, a, ws, cfg.params);
                       if (gate) ps.l31[a - 1] = lemma31_state(d, a, ws, cfg.params);
                     }
                     states.push_back(ps);
                   });
  if (states.size() < 3) throw ValidationError("identity-check: needs at least two steps");

  std::vector<IdentitySample> e2, e3, w1, w2;
  for (const auto& s : states) {
    const double g = cfg.params.gamma;
    e2.push_back({s.t, s.h1.ux2, g * s.h1.e2_integral, std::abs(g * s.h1.e2_integral)});
    e3.push_back({s.t, s.h1.ux2, g * s.h1.e3_integral, std::abs(g * s.h1.e3_integral)});
    w1.push_back(s.wid[0]);
    w2.push_back(s.wid[1]);
  }
  const IdentityReport r2 = assemble_identity("e2", e2), r3 = assemble_identity("e3", e3);
  const IdentityReport rw1 = assemble_identity("weighted_a1", w1), rw2 = assemble_identity("weighted_a2", w2);

  CsvTable t({"t", "e2_resid", "e2_rel", "e3_resid", "e3_rel", "wid_a1_rel", "wid_a2_rel",
              "lemma31_lhs", "lemma31_scale"},
             cfg.precision);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < r2.times.size(); ++j) {
    double lhs = nan, scale = nan;
    if (gate) {
      double worst = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 2; ++a) {
        const Lemma31Terms L = lemma31_assemble(a + 1, states[j + 1].t, states[j].l31[a],
                                                states[j + 1].l31[a], states[j + 2].l31[a], cfg.dt);
        const double norm = L.lhs() / std::max(L.scale(), kResidualFloor);
        if (norm > worst) {
          worst = norm;
          lhs = L.lhs();
          scale = L.scale();
        }
      }
    }
    t.row() << r2.times[j] << r2.residuals[j] << r2.relative[j] << r3.residuals[j] << r3.relative[j]
            << rw1.relative[j] << rw2.relative[j] << lhs << scale;
  }
  return t;
}

inline CsvTable smoothing_table(const ExperimentConfig& cfg) {
  const SmoothingReport rep = smoothing_experiment(cfg);
  CsvTable t({"t", "l", "weighted_norm", "smoothing_integral_partial"}, cfg.precision);
  for (const auto& r : rep.rows) t.row() << r.t << r.l << r.weighted_norm << r.integral_partial;
  return t;
}

inline CsvTable persistence_table(const ExperimentConfig& cfg) {
  const PersistenceReport rep = persistence_experiment(cfg);
  CsvTable t({"t", "weighted_norm", "smoothing_integral_partial"}, cfg.precision);
  for (std::size_t j = 0; j < rep.times.size(); ++j)
    t.row() << rep.times[j] << rep.norms[j] << rep.partial_integral[j];
  return t;
}

inline CsvTable gauge_table(const ExperimentConfig& cfg) {
  const GaugeReport rep = gauge_equivalence_experiment(cfg);
  CsvTable t({"metric", "value"}, cfg.precision);
  t.row() << "linf" << rep.linf;
  t.row() << "l2" << rep.l2;
  t.row() << "max_edge_ratio" << rep.max_edge_ratio;
  if (rep.probe) {
    t.row() << "derived_gamma" << rep.probe->derived_gamma;
    t.row() << "printed_gamma" << rep.probe->printed_gamma;
    t.row() << "derived_l2" << rep.probe->derived_l2;
    t.row() << "printed_l2" << rep.probe->printed_l2;
    t.row() << "candidate_ratio" << rep.probe->ratio;
    t.row() << "match_" + rep.probe->match << 1;
  }
  return t;
}

inline CsvTable convergence_table(const ExperimentConfig& cfg) {
  const ConvergenceReport rep = convergence_study(cfg, cfg.convergence.levels);
  CsvTable t({"scheme", "level", "dt", "diff_next", "error_ref", "order"}, cfg.precision);
  for (const auto& r : rep.rows)
    t.row() << scheme_name(r.scheme) << r.level << r.dt << r.diff_next << r.error_ref << r.order;
  return t;
}

/// Class constants for each configured spec (canonical weight) and for the
/// example weight, on t in [T/10, T]. eta_roundtrip is the largest
/// |d xi - eta/(3 beta - |omega|)| of the antiderivative weight built from
/// the canonical weight, by central differences on the box interior (nan when
/// |omega| >= 3 beta).
inline CsvTable weights_table(const ExperimentConfig& cfg) {
  CsvTable t({"weight", "sigma", "i", "k", "ok", "c1", "c2", "c3", "c4", "c5", "eta_roundtrip", "failure"},
             cfg.precision);
  struct Item {
    std::string name;
    Weight w;
  };
  std::vector<Item> items;
  for (const auto& s : cfg.weights) items.push_back({"canonical", canonical_weight(s)});
  items.push_back({"example", example_weight()});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& it : items) {
    const auto rep = verify_weight_class(it.w, 0.1 * cfg.T, cfg.T, cfg.grid);
    double rt = nan;
    if (cfg.params.smoothing_condition() && it.name == "canonical")
      rt = eta_roundtrip_error(it.w, cfg.params.omega, cfg.params.beta, cfg.grid, cfg.T);
    const auto& s = it.w.spec();
    t.row() << it.name << s.sigma << s.i << s.k << (rep.ok ? 1 : 0) << rep.c1 << rep.c2 << rep.c3
            << rep.c4 << rep.c5 << rt << (rep.ok ? std::string("") : rep.failure);
  }
  return t;
}

// ---- dispatcher ---------------------------------------------------------------

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"simulate",    "gauge-check", "identity-check", "smoothing",
                                          "persistence", "convergence", "weights-verify"};
  return s;
}

inline std::string report_kind(const std::string& sub) {
  if (sub == "simulate") return "simulate";
  if (sub == "gauge-check") return "gauge";
  if (sub == "identity-check") return "identity";
  if (sub == "smoothing") return "smoothing";
  if (sub == "persistence") return "persistence";
  if (sub == "convergence") return "convergence";
  if (sub == "weights-verify") return "weights";
  throw ValidationError("unknown subcommand '" + sub + "'");
}

inline CsvTable run_table(const std::string& sub, const ExperimentConfig& cfg) {
  if (sub == "simulate") return simulate_table(cfg);
  if (sub == "gauge-check") return gauge_table(cfg);
  if (sub == "identity-check") return identity_table(cfg);
  if (sub == "smoothing") return smoothing_table(cfg);
  if (sub == "persistence") return persistence_table(cfg);
  if (sub == "convergence") return convergence_table(cfg);
  if (sub == "weights-verify") return weights_table(cfg);
  throw ValidationError("unknown subcommand '" + sub + "'");
}

struct RunFlags {
  bool dry_run = false;
  std::string out_dir;  // overrides [output] path when set
};

struct RunResult {
  int status = 0;
  std::string output_file;  // empty on dry runs and failures
  std::string message;      // plan (dry run) or error text
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string output_file_for(const std::string& sub, const ExperimentConfig& cfg,
                                   const RunFlags& flags) {
  std::filesystem::path dir = !flags.out_dir.empty() ? flags.out_dir
                              : !cfg.output_path.empty() ? cfg.output_path
                                                         : ".";
  return (dir / (report_kind(sub) + "_" + config_hash(cfg) + ".csv")).string();
}

/// Executes one subcommand. Status 0 on success, 2 on invalid input, 3 when a
/// numerical guard aborts the run.
inline RunResult run(const std::string& sub, const std::string& config_path, const RunFlags& flags) {
  RunResult res;
  try {
    report_kind(sub);
    const ExperimentConfig cfg = parse_config(read_file(config_path));
    const std::string file = output_file_for(sub, cfg, flags);
    if (flags.dry_run) {
      res.message = "subcommand: " + sub + "\noutput: " + file + "\nsteps: " +
                    std::to_string(step_count(cfg.T, cfg.dt)) + "\n" + resolved_config(cfg);
      return res;
    }
    const CsvTable table = run_table(sub, cfg);
    std::filesystem::create_directories(std::filesystem::path(file).parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + file + "'");
    out << table.str();
    out.close();
    if (!out) throw ValidationError("failed writing '" + file + "'");
    res.output_file = file;
  } catch (const GuardError& e) {
    res.status = 3;
    res.message = e.what();
  } catch (const ValidationError& e) {
    res.status = 2;
    res.message = e.what();
  } catch (const std::filesystem::filesystem_error& e) {
    res.status = 2;
    res.message = e.what();
  }
  return res;
}

}  // namespace hons
