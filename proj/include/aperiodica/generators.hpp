#pragma once

// Window-parameterized producers of the example combs: lattices, 1-D model
// sets, substitution combs, perturbed and Bernoulli lattices. A generator is
// a value; produce(window) is a pure function of (spec, window).

#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "measures.hpp"
#include "quadratic.hpp"

namespace aperiodica {

enum class GeneratorKind { lattice, cut_and_project, substitution, perturbed_lattice, bernoulli_lattice };
enum class SubstitutionRule { fibonacci, thue_morse, period_doubling };
enum class DisplacementRule { iid, quasiperiodic };
enum class WeightRule { constant, alternating };

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::lattice: return "lattice";
    case GeneratorKind::cut_and_project: return "cut-and-project-1d";
    case GeneratorKind::substitution: return "substitution";
    case GeneratorKind::perturbed_lattice: return "perturbed-lattice";
    case GeneratorKind::bernoulli_lattice: return "bernoulli-lattice";
  }
  return "lattice";
}
inline std::string to_string(SubstitutionRule r) {
  switch (r) {
    case SubstitutionRule::fibonacci: return "fibonacci";
    case SubstitutionRule::thue_morse: return "thue-morse";
    case SubstitutionRule::period_doubling: return "period-doubling";
  }
  return "fibonacci";
}
inline std::string to_string(DisplacementRule r) { return r == DisplacementRule::iid ? "iid" : "quasiperiodic"; }
inline std::string to_string(WeightRule r) { return r == WeightRule::constant ? "constant" : "alternating"; }

inline GeneratorKind generator_kind_from_string(const std::string& s) {
  if (s == "lattice") return GeneratorKind::lattice;
  if (s == "cut-and-project-1d" || s == "cut-and-project" || s == "fibonacci-model-set")
    return GeneratorKind::cut_and_project;
  if (s == "substitution") return GeneratorKind::substitution;
  if (s == "perturbed-lattice") return GeneratorKind::perturbed_lattice;
  if (s == "bernoulli-lattice") return GeneratorKind::bernoulli_lattice;
  fail(ErrorCode::parse_error, "unknown generator kind '" + s + "'");
}
inline SubstitutionRule substitution_rule_from_string(const std::string& s) {
  if (s == "fibonacci") return SubstitutionRule::fibonacci;
  if (s == "thue-morse") return SubstitutionRule::thue_morse;
  if (s == "period-doubling") return SubstitutionRule::period_doubling;
  fail(ErrorCode::parse_error, "unknown substitution rule '" + s + "'");
}
inline DisplacementRule displacement_rule_from_string(const std::string& s) {
  if (s == "iid") return DisplacementRule::iid;
  if (s == "quasiperiodic") return DisplacementRule::quasiperiodic;
  fail(ErrorCode::parse_error, "unknown displacement rule '" + s + "'");
}
inline WeightRule weight_rule_from_string(const std::string& s) {
  if (s == "constant") return WeightRule::constant;
  if (s == "alternating") return WeightRule::alternating;
  fail(ErrorCode::parse_error, "unknown weight rule '" + s + "'");
}

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::lattice;
  std::uint64_t seed = 0;
  GroupSpec group = real_group(1);

  // lattice, perturbed-lattice, bernoulli-lattice
  double spacing = 1.0;
  WeightRule weight_rule = WeightRule::constant;
  cplx weight{1.0, 0.0};

  // cut-and-project: points x = a + b tau whose star image lies in
  // [window_lo, window_hi), both given as elements of Z[tau].
  QuadraticRing ring = kGolden;
  QuadInt window_lo{-1, 0, kGolden};
  QuadInt window_hi{-1, 1, kGolden};
  // Physical placement x = a + b slope; 0 selects the ring's tau.
  double slope = 0.0;

  // substitution: letter 0 = a, letter 1 = b
  SubstitutionRule rule = SubstitutionRule::fibonacci;
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<cplx, 2> letter_weights{cplx{1.0, 0.0}, cplx{1.0, 0.0}};

  // perturbed-lattice
  double epsilon = 0.0;
  DisplacementRule displacement = DisplacementRule::iid;

  // bernoulli-lattice
  double occupation = 0.5;
};

namespace detail {

struct SubstitutionTable {
  std::array<std::vector<std::uint8_t>, 2> image;
  std::uint8_t right_seed;
  std::uint8_t left_seed;
};

inline SubstitutionTable substitution_table(SubstitutionRule r) {
  switch (r) {
    case SubstitutionRule::fibonacci: return {{{{0, 1}, {0}}}, 0, 1};        // a->ab, b->a; seed b|a
    case SubstitutionRule::thue_morse: return {{{{0, 1}, {1, 0}}}, 0, 0};    // a->ab, b->ba; seed a|a
    case SubstitutionRule::period_doubling: return {{{{0, 1}, {0, 0}}}, 0, 0};  // a->ab, b->aa; seed a|a
  }
  return {};
}

inline std::vector<std::uint8_t> apply(const SubstitutionTable& t, const std::vector<std::uint8_t>& w) {
  std::vector<std::uint8_t> r;
  r.reserve(w.size() * 2);
  for (auto c : w) r.insert(r.end(), t.image[c].begin(), t.image[c].end());
  return r;
}

/// Letter frequencies (Perron-Frobenius eigenvector of the substitution matrix).
inline std::array<double, 2> letter_frequencies(SubstitutionRule r) {
  const auto t = substitution_table(r);
  double m[2][2] = {{0, 0}, {0, 0}};  // m[i][j] = # of letter i in image of j
  for (int j = 0; j < 2; ++j)
    for (auto c : t.image[j]) m[c][j] += 1.0;
  std::array<double, 2> v{0.5, 0.5};
  for (int it = 0; it < 200; ++it) {
    std::array<double, 2> n{m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
    const double s = n[0] + n[1];
    v = {n[0] / s, n[1] / s};
  }
  return v;
}

}  // namespace detail

class Generator {
 public:
  Generator() = default;
  explicit Generator(GeneratorSpec spec) : spec_(std::move(spec)) { validate(); }

  const GeneratorSpec& spec() const { return spec_; }
  GeneratorKind kind() const { return spec_.kind; }

  /// The comb restricted to the half-open window.
  WeightedComb<1> produce(const Box<1>& window) const {
    std::vector<Vec<1>> pts;
    std::vector<cplx> ws;
    const double A = window.lo[0], B = window.hi[0];
    switch (spec_.kind) {
      case GeneratorKind::lattice: produce_lattice(A, B, pts, ws); break;
      case GeneratorKind::cut_and_project: produce_model_set(A, B, pts, ws); break;
      case GeneratorKind::substitution: produce_substitution(A, B, pts, ws); break;
      case GeneratorKind::perturbed_lattice: produce_perturbed(A, B, pts, ws); break;
      case GeneratorKind::bernoulli_lattice: produce_bernoulli(A, B, pts, ws); break;
    }
    WeightedComb<1> c;
    c.window = window;
    c.group = spec_.group;
    c.points = std::move(pts);
    c.weights = std::move(ws);
    return c;
  }

  /// Expected points per unit length.
  double density() const {
    switch (spec_.kind) {
      case GeneratorKind::lattice: return 1.0 / spec_.spacing;
      case GeneratorKind::cut_and_project:
        return (spec_.window_hi.value() - spec_.window_lo.value()) / spec_.ring.sqrt_disc();
      case GeneratorKind::substitution: {
        const auto f = detail::letter_frequencies(spec_.rule);
        return 1.0 / (f[0] * spec_.lengths[0] + f[1] * spec_.lengths[1]);
      }
      case GeneratorKind::perturbed_lattice: return 1.0 / spec_.spacing;
      case GeneratorKind::bernoulli_lattice: return spec_.occupation / spec_.spacing;
    }
    return 0.0;
  }

  /// Published (C, V): any translate of the open interval V carries total
  /// variation at most C.
  TranslationBound<1> translation_bound() const {
    switch (spec_.kind) {
      case GeneratorKind::lattice:
        return {std::abs(spec_.weight), interval(0.0, spec_.spacing)};
      case GeneratorKind::cut_and_project: return {1.0, interval(0.0, min_model_set_gap())};
      case GeneratorKind::substitution:
        return {std::max(std::abs(spec_.letter_weights[0]), std::abs(spec_.letter_weights[1])),
                interval(0.0, std::min(spec_.lengths[0], spec_.lengths[1]))};
      case GeneratorKind::perturbed_lattice: return {1.0, interval(0.0, spec_.spacing - 2.0 * spec_.epsilon)};
      case GeneratorKind::bernoulli_lattice: return {1.0, interval(0.0, spec_.spacing)};
    }
    return {};
  }

  /// Spacing s if every point lies on sZ (then FFT paths apply).
  std::optional<double> lattice_spacing() const {
    switch (spec_.kind) {
      case GeneratorKind::lattice:
      case GeneratorKind::bernoulli_lattice: return spec_.spacing;
      case GeneratorKind::perturbed_lattice:
        if (spec_.epsilon == 0.0) return spec_.spacing;
        return std::nullopt;
      case GeneratorKind::substitution:
        if (spec_.lengths[0] == std::round(spec_.lengths[0]) && spec_.lengths[1] == std::round(spec_.lengths[1]) &&
            spec_.lengths[0] >= 1.0 && spec_.lengths[1] >= 1.0)
          return 1.0;
        return std::nullopt;
      case GeneratorKind::cut_and_project: return std::nullopt;
    }
    return std::nullopt;
  }

  /// Maximum |w| over the comb.
  double max_weight() const {
    switch (spec_.kind) {
      case GeneratorKind::lattice: return std::abs(spec_.weight);
      case GeneratorKind::substitution:
        return std::max(std::abs(spec_.letter_weights[0]), std::abs(spec_.letter_weights[1]));
      default: return 1.0;
    }
  }

  /// Exact Z[tau] coordinates of the model-set points in [A, B).
  std::vector<QuadInt> model_set_points(double A, double B) const {
    std::vector<QuadInt> out;
    enumerate_model_set(A, B, [&](const QuadInt& q) { out.push_back(q); });
    return out;
  }

  std::string describe() const {
    std::string s = to_string(spec_.kind);
    switch (spec_.kind) {
      case GeneratorKind::substitution: s += ":" + to_string(spec_.rule); break;
      case GeneratorKind::perturbed_lattice: s += ":" + to_string(spec_.displacement); break;
      default: break;
    }
    return s;
  }

 private:
  GeneratorSpec spec_;

  void validate() const {
    const auto& s = spec_;
    if (s.group.dim() != 1) fail(ErrorCode::invalid_argument, "generators are one-dimensional");
    switch (s.kind) {
      case GeneratorKind::lattice:
      case GeneratorKind::bernoulli_lattice:
      case GeneratorKind::perturbed_lattice:
        if (!(s.spacing > 0.0)) fail(ErrorCode::invalid_argument, "spacing must be positive");
        if (s.group.discrete() && s.spacing != std::round(s.spacing))
          fail(ErrorCode::invalid_argument, "integer group needs integer spacing");
        break;
      default: break;
    }
    if (s.kind == GeneratorKind::perturbed_lattice) {
      if (s.epsilon < 0.0) fail(ErrorCode::invalid_argument, "epsilon must be nonnegative");
      if (!(s.epsilon < s.spacing / 2.0)) fail(ErrorCode::epsilon_too_large, "need epsilon < spacing/2");
      if (s.group.discrete() && s.epsilon != 0.0)
        fail(ErrorCode::invalid_argument, "perturbations are not defined on an integer group");
    }
    if (s.kind == GeneratorKind::bernoulli_lattice && !(s.occupation >= 0.0 && s.occupation <= 1.0))
      fail(ErrorCode::invalid_argument, "occupation probability must lie in [0, 1]");
    if (s.kind == GeneratorKind::cut_and_project) {
      if (s.group.discrete()) fail(ErrorCode::invalid_argument, "model sets live on the real line");
      if (!(s.ring.discriminant() > 0) || s.ring.sqrt_disc() == std::floor(s.ring.sqrt_disc()))
        fail(ErrorCode::invalid_argument, "ring must be real quadratic with irrational tau");
      if (sign(s.window_hi - s.window_lo) <= 0) fail(ErrorCode::degenerate_window, "internal window has empty interior");
    }
    if (s.kind == GeneratorKind::substitution) {
      for (double l : s.lengths)
        if (!(l > 0.0)) fail(ErrorCode::invalid_argument, "letter lengths must be positive");
      if (s.group.discrete() && !lattice_spacing())
        fail(ErrorCode::invalid_argument, "integer group needs integer letter lengths");
    }
  }

  cplx lattice_weight(long long n) const {
    if (spec_.weight_rule == WeightRule::alternating && (n % 2 != 0)) return -spec_.weight;
    return spec_.weight;
  }

  void produce_lattice(double A, double B, std::vector<Vec<1>>& pts, std::vector<cplx>& ws) const {
    const double s = spec_.spacing;
    for (long long n = static_cast<long long>(std::ceil(A / s)) - 1;; ++n) {
      const double x = static_cast<double>(n) * s;
      if (x >= B) break;
      if (x < A) continue;
      pts.push_back({x});
      ws.push_back(lattice_weight(n));
    }
  }

  void produce_bernoulli(double A, double B, std::vector<Vec<1>>& pts, std::vector<cplx>& ws) const {
    const double s = spec_.spacing;
    for (long long n = static_cast<long long>(std::ceil(A / s)) - 1;; ++n) {
      const double x = static_cast<double>(n) * s;
      if (x >= B) break;
      if (x < A) continue;
      if (hashed_uniform(spec_.seed, n) < spec_.occupation) {
        pts.push_back({x});
        ws.push_back(lattice_weight(n));
      }
    }
  }

  double displacement(long long n) const {
    if (spec_.epsilon == 0.0) return 0.0;
    if (spec_.displacement == DisplacementRule::iid)
      return spec_.epsilon * (2.0 * hashed_uniform(spec_.seed, n) - 1.0);
    constexpr double alpha = 0.41421356237309503;  // sqrt(2) - 1
    const double phase = hashed_uniform(spec_.seed, -1);
    const double arg = static_cast<double>(n) * alpha + phase;
    return spec_.epsilon * std::sin(kTwoPi * (arg - std::floor(arg)));
  }

  void produce_perturbed(double A, double B, std::vector<Vec<1>>& pts, std::vector<cplx>& ws) const {
    const double s = spec_.spacing;
    const double e = spec_.epsilon;
    for (long long n = static_cast<long long>(std::floor((A - e) / s)) - 1;; ++n) {
      const double base = static_cast<double>(n) * s;
      if (base - e >= B) break;
      const double x = base + displacement(n);
      if (x < A || x >= B) continue;
      pts.push_back({x});
      ws.push_back(1.0);
    }
  }

  double physical_slope() const { return spec_.slope != 0.0 ? spec_.slope : spec_.ring.tau(); }

  template <class F>
  void enumerate_model_set(double A, double B, F&& emit) const {
    const auto& ring = spec_.ring;
    const double tau = physical_slope(), tauc = ring.tau_conj();
    const double s = tau - tauc;
    const double wlo = spec_.window_lo.value(), whi = spec_.window_hi.value();
    // x - x* = b (tau - tau') = b s
    const auto bmin = static_cast<std::int64_t>(std::floor((A - whi) / s)) - 1;
    const auto bmax = static_cast<std::int64_t>(std::ceil((B - wlo) / s)) + 1;
    for (std::int64_t b = bmin; b <= bmax; ++b) {
      // a + b tau' in [wlo, whi)
      const auto amin = static_cast<std::int64_t>(std::floor(wlo - static_cast<double>(b) * tauc)) - 1;
      const auto amax = static_cast<std::int64_t>(std::ceil(whi - static_cast<double>(b) * tauc)) + 1;
      for (std::int64_t a = amin; a <= amax; ++a) {
        const QuadInt q{a, b, ring};
        const QuadInt qs = q.star();
        if (sign(qs - spec_.window_lo) < 0 || sign(qs - spec_.window_hi) >= 0) continue;
        const double x = static_cast<double>(a) + static_cast<double>(b) * tau;
        if (x < A || x >= B) continue;
        emit(q);
      }
    }
  }

  void produce_model_set(double A, double B, std::vector<Vec<1>>& pts, std::vector<cplx>& ws) const {
    std::vector<double> xs;
    const double tau = physical_slope();
    enumerate_model_set(A, B, [&](const QuadInt& q) { xs.push_back(static_cast<double>(q.a) + static_cast<double>(q.b) * tau); });
    std::sort(xs.begin(), xs.end());
    for (double x : xs) {
      pts.push_back({x});
      ws.push_back(1.0);
    }
  }

  double min_model_set_gap() const {
    std::vector<double> xs;
    enumerate_model_set(-500.0, 500.0, [&](const QuadInt& q) { xs.push_back(static_cast<double>(q.a) + static_cast<double>(q.b) * physical_slope()); });
    std::sort(xs.begin(), xs.end());
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < xs.size(); ++i) g = std::min(g, xs[i] - xs[i - 1]);
    return std::isfinite(g) ? g * (1.0 - 1e-12) : 1.0;
  }

  void produce_substitution(double A, double B, std::vector<Vec<1>>& pts, std::vector<cplx>& ws) const {
    const auto table = detail::substitution_table(spec_.rule);
    const double La = spec_.lengths[0], Lb = spec_.lengths[1];
    auto word_length = [&](const std::vector<std::uint8_t>& w) {
      std::size_t nb = 0;
      for (auto c : w) nb += c;
      return static_cast<double>(w.size() - nb) * La + static_cast<double>(nb) * Lb;
    };
    // Right half: letters 0, 1, ... at x_i = (#a before i) La + (#b before i) Lb.
    if (B > 0.0) {
      std::vector<std::uint8_t> w{table.right_seed};
      while (word_length(w) < B + La + Lb) w = detail::apply(table, detail::apply(table, w));
      std::int64_t na = 0, nb = 0;
      for (auto c : w) {
        const double x = static_cast<double>(na) * La + static_cast<double>(nb) * Lb;
        if (x >= B) break;
        if (x >= A) {
          pts.push_back({x});
          ws.push_back(spec_.letter_weights[c]);
        }
        (c == 0 ? na : nb) += 1;
      }
    }
    // Left half: letters -1, -2, ... at x_{-i} = -(lengths of letters -i..-1).
    if (A < 0.0) {
      std::vector<std::uint8_t> w{table.left_seed};
      while (word_length(w) < -A + La + Lb) w = detail::apply(table, detail::apply(table, w));
      std::vector<Vec<1>> lp;
      std::vector<cplx> lw;
      std::int64_t na = 0, nb = 0;
      for (auto it = w.rbegin(); it != w.rend(); ++it) {
        (*it == 0 ? na : nb) += 1;
        const double x = -(static_cast<double>(na) * La + static_cast<double>(nb) * Lb);
        if (x < A) break;
        if (x < B) {
          lp.push_back({x});
          lw.push_back(spec_.letter_weights[*it]);
        }
      }
      pts.insert(pts.begin(), lp.rbegin(), lp.rend());
      ws.insert(ws.begin(), lw.rbegin(), lw.rend());
    }
  }
};

// Named constructors ---------------------------------------------------------

inline Generator lattice(double spacing = 1.0, WeightRule rule = WeightRule::constant, cplx weight = 1.0,
                         GroupSpec group = real_group(1)) {
  GeneratorSpec s;
  s.kind = GeneratorKind::lattice;
  s.spacing = spacing;
  s.weight_rule = rule;
  s.weight = weight;
  s.group = group;
  return Generator(s);
}

inline Generator cut_and_project_1d(QuadraticRing ring, QuadInt window_lo, QuadInt window_hi) {
  GeneratorSpec s;
  s.kind = GeneratorKind::cut_and_project;
  s.ring = ring;
  window_lo.ring = ring;
  window_hi.ring = ring;
  s.window_lo = window_lo;
  s.window_hi = window_hi;
  return Generator(s);
}

/// Fibonacci chain: golden ring, internal window [-1, tau - 1).
inline Generator fibonacci_model_set() { return cut_and_project_1d(kGolden, {-1, 0, kGolden}, {-1, 1, kGolden}); }

inline Generator substitution(SubstitutionRule rule, std::array<double, 2> lengths, std::array<cplx, 2> weights,
                              GroupSpec group = real_group(1)) {
  GeneratorSpec s;
  s.kind = GeneratorKind::substitution;
  s.rule = rule;
  s.lengths = lengths;
  s.letter_weights = weights;
  s.group = group;
  return Generator(s);
}

inline Generator fibonacci_substitution() {
  return substitution(SubstitutionRule::fibonacci, {kGolden.tau(), 1.0}, {cplx{1.0}, cplx{1.0}});
}

inline Generator thue_morse(GroupSpec group = real_group(1)) {
  return substitution(SubstitutionRule::thue_morse, {1.0, 1.0}, {cplx{1.0}, cplx{-1.0}}, group);
}

/// Weights (1, c); c = -1 by default.
inline Generator period_doubling(cplx c = -1.0, GroupSpec group = real_group(1)) {
  return substitution(SubstitutionRule::period_doubling, {1.0, 1.0}, {cplx{1.0}, c}, group);
}

inline Generator perturbed_lattice(double spacing, double epsilon, DisplacementRule rule, std::uint64_t seed) {
  GeneratorSpec s;
  s.kind = GeneratorKind::perturbed_lattice;
  s.spacing = spacing;
  s.epsilon = epsilon;
  s.displacement = rule;
  s.seed = seed;
  return Generator(s);
}

inline Generator bernoulli_lattice(double spacing, double occupation, std::uint64_t seed,
                                   GroupSpec group = real_group(1)) {
  GeneratorSpec s;
  s.kind = GeneratorKind::bernoulli_lattice;
  s.spacing = spacing;
  s.occupation = occupation;
  s.seed = seed;
  s.group = group;
  return Generator(s);
}

/// spacing * Z^d inside the window, constant weight (used for d = 2).
template <int D>
WeightedComb<D> lattice_comb(const Vec<D>& spacing, cplx weight, const Box<D>& window, GroupSpec group = real_group(D)) {
  std::array<long long, D> lo, hi;
  for (int i = 0; i < D; ++i) {
    lo[i] = static_cast<long long>(std::ceil(window.lo[i] / spacing[i])) - 1;
    hi[i] = static_cast<long long>(std::ceil(window.hi[i] / spacing[i])) + 1;
  }
  std::vector<Vec<D>> pts;
  std::vector<cplx> ws;
  std::array<long long, D> n = lo;
  while (true) {
    Vec<D> x;
    for (int i = 0; i < D; ++i) x[i] = static_cast<double>(n[i]) * spacing[i];
    if (window.contains_half_open(x)) {
      pts.push_back(x);
      ws.push_back(weight);
    }
    int a = D - 1;
    while (a >= 0 && ++n[a] > hi[a]) {
      n[a] = lo[a];
      --a;
    }
    if (a < 0) break;
  }
  return make_comb<D>(std::move(pts), std::move(ws), window, group);
}

}  // namespace aperiodica
