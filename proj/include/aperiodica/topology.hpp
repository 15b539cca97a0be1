#pragma once

// Local rubber topology on finite windowed point sets: the U_{K,V}
// relations, a vague-topology metric, repetitivity and FLC diagnostics, and
// the two conversions between U_{K,V} neighbourhoods and Fell basis sets.

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "core.hpp"
#include "measures.hpp"

namespace aperiodica {

/// Finite union of closed boxes.
template <int D>
struct BoxUnion {
  std::vector<Box<D>> boxes;

  bool empty() const {
    return std::none_of(boxes.begin(), boxes.end(), [](const Box<D>& b) { return b.contains_closed(b.lo); });
  }
  bool contains(const Vec<D>& x) const {
    return std::any_of(boxes.begin(), boxes.end(), [&](const Box<D>& b) { return b.contains_closed(x); });
  }
  /// Bounding box of the nonempty members.
  Box<D> hull() const {
    Box<D> h{filled<D>(std::numeric_limits<double>::infinity()), filled<D>(-std::numeric_limits<double>::infinity())};
    for (const auto& b : boxes)
      for (int i = 0; i < D; ++i) {
        if (b.lo[i] > b.hi[i]) continue;
        h.lo[i] = std::min(h.lo[i], b.lo[i]);
        h.hi[i] = std::max(h.hi[i], b.hi[i]);
      }
    return h;
  }
};

template <int D>
BoxUnion<D> single(const Box<D>& b) {
  return {{b}};
}

/// K closed, V = (-radius, radius) per axis.
template <int D>
struct UKVParams {
  BoxUnion<D> K;
  Vec<D> radius{};
};

template <int D>
struct PointSetWindowed {
  std::vector<Vec<D>> points;  // lexicographically sorted
  Box<D> window;               // half-open
};

template <int D>
PointSetWindowed<D> make_point_set(std::vector<Vec<D>> points, const Box<D>& window) {
  std::sort(points.begin(), points.end(), [](const Vec<D>& a, const Vec<D>& b) { return lex_less<D>(a, b); });
  for (const auto& p : points)
    if (!window.contains_half_open(p)) fail(ErrorCode::invalid_argument, "point outside window");
  return {std::move(points), window};
}

template <int D>
PointSetWindowed<D> support_of(const WeightedComb<D>& c) {
  return {c.points, c.window};
}

template <int D>
PointSetWindowed<D> translate(const PointSetWindowed<D>& p, const Vec<D>& t) {
  PointSetWindowed<D> r{p.points, p.window.translated(t)};
  for (auto& x : r.points) x = x + t;
  return r;
}

namespace detail {

template <int D>
std::pair<std::size_t, std::size_t> axis0_range(const std::vector<Vec<D>>& pts, double a, double b) {
  auto lo = std::lower_bound(pts.begin(), pts.end(), a, [](const Vec<D>& p, double v) { return p[0] < v; });
  auto hi = std::upper_bound(lo, pts.end(), b, [](double v, const Vec<D>& p) { return v < p[0]; });
  return {static_cast<std::size_t>(lo - pts.begin()), static_cast<std::size_t>(hi - pts.begin())};
}

/// Some q in Q with |q - p|_i < r_i on every axis.
template <int D>
bool has_neighbour(const std::vector<Vec<D>>& Q, const Vec<D>& p, const Vec<D>& r) {
  auto [first, last] = axis0_range<D>(Q, p[0] - r[0], p[0] + r[0]);
  for (std::size_t j = first; j < last; ++j) {
    bool in = true;
    for (int i = 0; i < D && in; ++i) in = std::abs(Q[j][i] - p[i]) < r[i];
    if (in) return true;
  }
  return false;
}

template <int D>
bool one_sided(const PointSetWindowed<D>& P, const PointSetWindowed<D>& Q, const UKVParams<D>& u) {
  for (const auto& k : u.K.boxes) {
    if (!k.contains_closed(k.lo)) continue;
    auto [first, last] = axis0_range<D>(P.points, k.lo[0], k.hi[0]);
    for (std::size_t j = first; j < last; ++j)
      if (k.contains_closed(P.points[j]) && !has_neighbour<D>(Q.points, P.points[j], u.radius)) return false;
  }
  return true;
}

template <int D>
void require_margin(const PointSetWindowed<D>& P, const UKVParams<D>& u) {
  for (const auto& k : u.K.boxes) {
    if (k.lo[0] > k.hi[0]) continue;
    const Box<D> grown = k.inflated(u.radius);
    if (!P.window.contains_box(grown))
      fail(ErrorCode::k_outside_window, "window does not contain K + V");
  }
}

}  // namespace detail

/// (P1, P2) ∈ U_{K,V}: P1 ∩ K ⊂ P2 + V and P2 ∩ K ⊂ P1 + V. Both windows
/// must contain K + V so that no relevant point is cut off.
template <int D>
bool ukv_related(const PointSetWindowed<D>& P1, const PointSetWindowed<D>& P2, const UKVParams<D>& u) {
  detail::require_margin(P1, u);
  detail::require_margin(P2, u);
  return detail::one_sided(P1, P2, u) && detail::one_sided(P2, P1, u);
}

// ---------------------------------------------------------------------------
// Vague metric

template <int D>
struct DyadicTent {
  int level = 0;
  Vec<D> center{};
  double halfwidth = 1.0;
};

/// The first N members of the fixed family: level ℓ = 0, 1, ... has tents of
/// halfwidth 2^-ℓ centred on 2^-ℓ Z^d ∩ [-2^ℓ, 2^ℓ]^d, ordered by distance
/// to the origin and then lexicographically.
template <int D>
std::vector<DyadicTent<D>> dyadic_family(std::size_t N) {
  std::vector<DyadicTent<D>> out;
  for (int level = 0; out.size() < N; ++level) {
    const double h = std::ldexp(1.0, -level);
    const long long m = 1LL << (2 * level);  // 2^ℓ / 2^-ℓ
    std::vector<Vec<D>> centers;
    std::array<long long, D> idx;
    idx.fill(-m);
    while (true) {
      Vec<D> c;
      for (int i = 0; i < D; ++i) c[i] = static_cast<double>(idx[i]) * h;
      centers.push_back(c);
      int a = 0;
      while (a < D && ++idx[a] > m) idx[a++] = -m;
      if (a == D) break;
    }
    std::stable_sort(centers.begin(), centers.end(), [](const Vec<D>& x, const Vec<D>& y) {
      const double nx = max_norm(x), ny = max_norm(y);
      if (nx != ny) return nx < ny;
      return lex_less<D>(x, y);
    });
    for (const auto& c : centers) {
      if (out.size() == N) break;
      out.push_back({level, c, h});
    }
  }
  return out;
}

/// d(μ, ν) = Σ_{n=1..N} 2^-n x_n / (1 + x_n), x_n = |μ(φ_n) - ν(φ_n)|.
template <int D>
double vague_metric(const WeightedComb<D>& mu, const WeightedComb<D>& nu, std::size_t N) {
  CompensatedSum<double> acc;
  const auto family = dyadic_family<D>(N);
  for (std::size_t n = 0; n < family.size(); ++n) {
    const TestFunction<D> phi = tent<D>(family[n].center, family[n].halfwidth);
    const double x = std::abs(evaluate(mu, phi).value - evaluate(nu, phi).value);
    acc.add(std::ldexp(1.0, -static_cast<int>(n + 1)) * x / (1.0 + x));
  }
  return acc.value();
}

// ---------------------------------------------------------------------------
// Fell basis

/// 𝒰(C, F) = {closed L : L ∩ C = ∅ and L ∩ A ≠ ∅ for every A ∈ F}; the
/// members of F are open boxes.
template <int D>
struct FellBasisElement {
  BoxUnion<D> C;
  std::vector<Box<D>> F;
};

template <int D>
bool fell_member(const PointSetWindowed<D>& L, const FellBasisElement<D>& b) {
  for (const auto& c : b.C.boxes) {
    auto [first, last] = detail::axis0_range<D>(L.points, c.lo[0], c.hi[0]);
    for (std::size_t j = first; j < last; ++j)
      if (c.contains_closed(L.points[j])) return false;
  }
  for (const auto& a : b.F) {
    auto [first, last] = detail::axis0_range<D>(L.points, a.lo[0], a.hi[0]);
    bool hit = false;
    for (std::size_t j = first; j < last && !hit; ++j) hit = a.contains_open(L.points[j]);
    if (!hit) return false;
  }
  return true;
}

namespace detail {

/// Closed cells of the grid spanned by all box faces that lie inside some
/// member of `keep` and inside none of `remove` (cells with empty interior
/// are dropped).
template <int D>
std::vector<Box<D>> cell_difference(const std::vector<Box<D>>& keep, const std::vector<Box<D>>& remove) {
  std::array<std::vector<double>, D> cuts;
  for (const auto* list : {&keep, &remove})
    for (const auto& b : *list)
      for (int i = 0; i < D; ++i) {
        cuts[i].push_back(b.lo[i]);
        cuts[i].push_back(b.hi[i]);
      }
  for (auto& c : cuts) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  std::vector<Box<D>> out;
  for (std::size_t i = 0; i < D; ++i)
    if (cuts[i].size() < 2) return out;
  std::array<std::size_t, D> idx{};
  while (true) {
    Box<D> cell;
    for (int i = 0; i < D; ++i) {
      cell.lo[i] = cuts[i][idx[i]];
      cell.hi[i] = cuts[i][idx[i] + 1];
    }
    const Vec<D> mid = cell.center();
    const bool in = std::any_of(keep.begin(), keep.end(), [&](const Box<D>& b) { return b.contains_open(mid); });
    const bool out_of =
        std::any_of(remove.begin(), remove.end(), [&](const Box<D>& b) { return b.contains_open(mid); });
    if (in && !out_of) out.push_back(cell);
    int a = 0;
    while (a < D && ++idx[a] + 1 >= cuts[a].size()) idx[a++] = 0;
    if (a == D) break;
  }
  return out;
}

}  // namespace detail

struct FellFromUkvInfo {
  bool empty_cover = false;  // K ∩ H = ∅, so F = ∅ and C = K
};

/// Given H and U_{K,V}, builds 𝒰(C, F) with every member L satisfying
/// (L, H) ∈ U_{K,V}: W = V/2, C = K \ (H + W), F = {h + W : h ∈ H ∩ K}.
template <int D>
FellBasisElement<D> fell_refines_ukv(const PointSetWindowed<D>& H, const UKVParams<D>& u,
                                     FellFromUkvInfo* info = nullptr) {
  detail::require_margin(H, u);
  const Vec<D> w = 0.5 * u.radius;
  std::vector<Box<D>> holes;
  FellBasisElement<D> b;
  for (const auto& h : H.points) {
    const Box<D> open{h - w, h + w};
    // Points of H just outside K still carve C; only those inside K need a
    // member of F.
    bool near = false;
    for (const auto& k : u.K.boxes) near = near || k.inflated(w).contains_open(h);
    if (near) holes.push_back(open);
    if (u.K.contains(h)) b.F.push_back(open);
  }
  b.C.boxes = detail::cell_difference<D>(u.K.boxes, holes);
  if (info) info->empty_cover = b.F.empty();
  return b;
}

namespace detail {

/// Centres x with x + [-r, r]^d ⊆ A \ C, as cells (possibly empty list).
template <int D>
std::vector<Box<D>> deep_cells(const Box<D>& A, const BoxUnion<D>& C, double r) {
  const Box<D> shrunk = A.inflated(filled<D>(-r));
  if (shrunk.empty()) return {};
  std::vector<Box<D>> grown;
  for (const auto& c : C.boxes)
    if (c.lo[0] <= c.hi[0]) grown.push_back(c.inflated(filled<D>(r)));
  return cell_difference<D>({shrunk}, grown);
}

}  // namespace detail

template <int D>
struct UkvFromFell {
  PointSetWindowed<D> H;
  UKVParams<D> u;
  std::vector<double> depth;  // r* per member of F
};

/// Given 𝒰(C, F), picks one point x_A deep inside each A \ C and returns
/// H = {x_A}, V with x_A + cl V ⊆ A \ C, and K = C ∪ (H + cl V); every L
/// with (L, H) ∈ U_{K,V} then lies in 𝒰(C, F).
template <int D>
UkvFromFell<D> ukv_refines_fell(const FellBasisElement<D>& b) {
  UkvFromFell<D> out;
  double rmin = std::numeric_limits<double>::infinity();
  std::vector<Vec<D>> xs;
  for (const auto& A : b.F) {
    double side = std::numeric_limits<double>::infinity();
    for (int i = 0; i < D; ++i) side = std::min(side, 0.5 * (A.hi[i] - A.lo[i]));
    if (!(side > 0.0) || detail::deep_cells<D>(A, b.C, 0.0).empty())
      fail(ErrorCode::empty_basis, "A \\ C is empty for some A in F");
    double lo = 0.0, hi = side;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (detail::deep_cells<D>(A, b.C, mid).empty() ? hi : lo) = mid;
    }
    if (!(lo > 0.0)) fail(ErrorCode::empty_basis, "A \\ C has no interior for some A in F");
    auto cells = detail::deep_cells<D>(A, b.C, 0.99 * lo);
    if (cells.empty()) fail(ErrorCode::empty_basis, "A \\ C has no interior for some A in F");
    std::vector<Vec<D>> centers;
    for (const auto& c : cells) centers.push_back(c.center());
    xs.push_back(*std::min_element(centers.begin(), centers.end(),
                                   [](const Vec<D>& p, const Vec<D>& q) { return lex_less<D>(p, q); }));
    out.depth.push_back(lo);
    rmin = std::min(rmin, lo);
  }
  const double r = b.F.empty() ? 1.0 : 0.9 * rmin;
  out.u.radius = filled<D>(r);
  out.u.K = b.C;
  for (const auto& x : xs) out.u.K.boxes.push_back(Box<D>{x - out.u.radius, x + out.u.radius});
  Box<D> window = out.u.K.boxes.empty() ? Box<D>{filled<D>(-1.0), filled<D>(1.0)} : out.u.K.hull();
  window = window.inflated(filled<D>(2.0 * r + 1.0));
  out.H = make_point_set<D>(xs, window);
  return out;
}

// ---------------------------------------------------------------------------
// Randomized implication trials for the two Fell conversions (1-D). Each
// instance draws a random input, builds the refinement, then probes it with
// random finite L; a probe counts when its premise holds and is a violation
// when the conclusion then fails.

struct ImplicationTrialReport {
  std::size_t instances = 0;
  std::size_t probes = 0;
  std::size_t premise_true = 0;
  std::size_t violations = 0;
  std::size_t redraws = 0;  // rejected inputs (empty basis)
  bool all_hold() const { return violations == 0; }
};

namespace detail {

template <class Rng>
double uniform(Rng& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

template <class Rng>
bool coin(Rng& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

inline PointSetWindowed<1> probe_set(std::vector<double> xs, const Box<1>& window) {
  std::vector<Vec<1>> pts;
  for (double x : xs)
    if (window.contains_half_open({x})) pts.push_back({x});
  std::sort(pts.begin(), pts.end(), [](const Vec<1>& a, const Vec<1>& b) { return a[0] < b[0]; });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return make_point_set<1>(std::move(pts), window);
}

}  // namespace detail

/// Random H and U_{K,V}; probes L near H + W plus stray points. Checks
/// L ∈ 𝒰(C, F) ⇒ (L, H) ∈ U_{K,V}.
template <class Rng>
ImplicationTrialReport fell_refines_ukv_trials(Rng& rng, std::size_t instances, std::size_t probes) {
  using detail::coin;
  using detail::uniform;
  ImplicationTrialReport rep;
  for (std::size_t n = 0; n < instances; ++n) {
    UKVParams<1> u;
    const int nk = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nk; ++i) {
      const double a = uniform(rng, -4.0, 3.0);
      u.K.boxes.push_back(interval(a, a + uniform(rng, 0.3, 3.0)));
    }
    const double r = uniform(rng, 0.05, 0.6);
    u.radius = {r};
    const Box<1> window = u.K.hull().inflated({r + 2.0});
    const Box<1> inner = u.K.hull().inflated({r + 1.0});
    std::vector<double> hs;
    const int nh = static_cast<int>(rng() % 11);
    for (int i = 0; i < nh; ++i) hs.push_back(uniform(rng, inner.lo[0], inner.hi[0]));
    const PointSetWindowed<1> H = detail::probe_set(hs, window);
    const FellBasisElement<1> b = fell_refines_ukv<1>(H, u);
    ++rep.instances;
    for (std::size_t p = 0; p < probes; ++p) {
      const int mode = static_cast<int>(rng() % 3);
      std::vector<double> ls;
      if (mode != 1) {
        const double spread = mode == 0 ? 0.49 * r : 0.6 * r;
        for (const auto& h : H.points)
          if (coin(rng, 0.85)) ls.push_back(h[0] + uniform(rng, -spread, spread));
      }
      const int extra = static_cast<int>(rng() % 5);
      for (int i = 0; i < extra; ++i) {
        const double x = uniform(rng, window.lo[0], window.hi[0]);
        if (mode == 1 || !u.K.contains({x}) || coin(rng, 0.2)) ls.push_back(x);
      }
      const PointSetWindowed<1> L = detail::probe_set(ls, window);
      ++rep.probes;
      if (!fell_member<1>(L, b)) continue;
      ++rep.premise_true;
      if (!ukv_related<1>(L, H, u)) ++rep.violations;
    }
  }
  return rep;
}

/// Random (C, F); probes L near {x_A} plus stray points. Checks
/// (L, H) ∈ U_{K,V} ⇒ L ∈ 𝒰(C, F).
template <class Rng>
ImplicationTrialReport ukv_refines_fell_trials(Rng& rng, std::size_t instances, std::size_t probes) {
  using detail::coin;
  using detail::uniform;
  ImplicationTrialReport rep;
  while (rep.instances < instances) {
    FellBasisElement<1> b;
    const int nf = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < nf; ++i) {
      const double a = uniform(rng, -4.0, 3.0);
      b.F.push_back(interval(a, a + uniform(rng, 0.2, 2.0)));
    }
    const int nc = static_cast<int>(rng() % 4);
    for (int i = 0; i < nc; ++i) {
      const double a = uniform(rng, -5.0, 4.0);
      b.C.boxes.push_back(interval(a, a + uniform(rng, 0.1, 2.0)));
    }
    UkvFromFell<1> ref;
    try {
      ref = ukv_refines_fell<1>(b);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::empty_basis) throw;
      ++rep.redraws;
      continue;
    }
    ++rep.instances;
    const double r = ref.u.radius[0];
    const Box<1> window = ref.H.window;
    for (std::size_t p = 0; p < probes; ++p) {
      std::vector<double> ls;
      for (const auto& x : ref.H.points)
        if (coin(rng, 0.9)) ls.push_back(x[0] + uniform(rng, -0.99 * r, 0.99 * r));
      const int extra = static_cast<int>(rng() % 4);
      for (int i = 0; i < extra; ++i) ls.push_back(uniform(rng, window.lo[0], window.hi[0]));
      const PointSetWindowed<1> L = detail::probe_set(ls, window);
      ++rep.probes;
      if (!ukv_related<1>(L, ref.H, ref.u)) continue;
      ++rep.premise_true;
      if (!fell_member<1>(L, b)) ++rep.violations;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Repetitivity and FLC

struct RepetitivityReport {
  bool dense = false;
  double max_gap = 0.0;
  std::vector<double> witnesses;
  std::size_t tested = 0;
};

/// T = {t : (P - t, P) ∈ U_{K,V}}, i.e. the patch of P on t + K reappears
/// on K up to V. Scanned on the grid t = t0 + i step, i = 0..count-1.
inline RepetitivityReport repetitivity_scan(const PointSetWindowed<1>& P, const UKVParams<1>& u, double t0,
                                            double step, std::size_t count, double R) {
  if (!(step > 0.0) || count == 0) fail(ErrorCode::invalid_argument, "empty t grid");
  const double t1 = t0 + step * static_cast<double>(count - 1);
  const Box<1> kh = u.K.hull().inflated(u.radius);
  if (!P.window.contains_box(kh) || !P.window.contains_box(kh.translated({t0})) ||
      !P.window.contains_box(kh.translated({t1})))
    fail(ErrorCode::window_too_small, "window does not contain t + K + V over the grid");
  RepetitivityReport rep;
  rep.tested = count;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = t0 + step * static_cast<double>(i);
    if (ukv_related<1>(translate<1>(P, {-t}), P, u)) rep.witnesses.push_back(t);
  }
  if (rep.witnesses.empty()) {
    rep.max_gap = std::numeric_limits<double>::infinity();
  } else {
    rep.max_gap = std::max(rep.witnesses.front() - t0, t1 - rep.witnesses.back());
    for (std::size_t i = 1; i < rep.witnesses.size(); ++i)
      rep.max_gap = std::max(rep.max_gap, rep.witnesses[i] - rep.witnesses[i - 1]);
  }
  rep.dense = rep.max_gap <= R;
  return rep;
}

struct FlcReport {
  bool flc = false;
  std::vector<double> window_lengths;
  std::vector<std::size_t> counts;
};

namespace detail {

inline std::vector<double> patch_at(const PointSetWindowed<1>& P, std::size_t j, double r) {
  const double x = P.points[j][0];
  auto [first, last] = axis0_range<1>(P.points, x - r - 1e-9, x + r + 1e-9);
  std::vector<double> out;
  out.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) out.push_back(P.points[i][0] - x);
  return out;
}

inline bool patches_match(const std::vector<double>& a, const std::vector<double>& b, double eps) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > eps) return false;
  return true;
}

}  // namespace detail

/// Number of r-patches up to ε-matching, for points in the nested windows
/// [lo, lo + L/4), [lo, lo + L/2), [lo, lo + L) whose patch lies inside the
/// data window. FLC is reported when the last two counts agree.
inline FlcReport flc_check(const PointSetWindowed<1>& P, double r, double eps) {
  FlcReport rep;
  const double lo = P.window.lo[0], L = P.window.hi[0] - P.window.lo[0];
  std::map<std::size_t, std::vector<std::vector<double>>> classes;  // by point count
  std::size_t count = 0;
  std::size_t j = 0;
  for (double f : {0.25, 0.5, 1.0}) {
    const double end = lo + f * L;
    for (; j < P.points.size() && P.points[j][0] < end; ++j) {
      const double x = P.points[j][0];
      if (x - r < lo || x + r >= P.window.hi[0]) continue;
      std::vector<double> p = detail::patch_at(P, j, r);
      auto& bucket = classes[p.size()];
      bool found = false;
      for (const auto& q : bucket)
        if (detail::patches_match(p, q, eps)) {
          found = true;
          break;
        }
      if (!found) {
        bucket.push_back(std::move(p));
        ++count;
      }
    }
    rep.window_lengths.push_back(f * L);
    rep.counts.push_back(count);
  }
  rep.flc = rep.counts[1] == rep.counts[2];
  return rep;
}

}  // namespace aperiodica
