#pragma once

// Van Hove averaging: finite-volume autocorrelations η_B(z), boundary terms,
// the closed formula over an empirical hull measure, and the pairing
// (φ̃ * ψ * γ)(t).

#include <algorithm>
#include <concepts>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include "core.hpp"
#include "fourier.hpp"
#include "generators.hpp"
#include "measures.hpp"
#include "test_function.hpp"

namespace aperiodica {

// ---------------------------------------------------------------------------
// Van Hove sequences and K-boundaries

template <int D>
struct VanHoveSequence {
  std::vector<Box<D>> boxes;
  Box<D> K = cube<D>(-1.0, 1.0);
};

/// B_n = [0, base * factor^n)^d, n = 0..nmax.
template <int D>
VanHoveSequence<D> default_van_hove(double base = 100.0, double factor = 2.0, int nmax = 8) {
  VanHoveSequence<D> s;
  double side = base;
  for (int n = 0; n <= nmax; ++n) {
    s.boxes.push_back(cube<D>(0.0, side));
    side *= factor;
  }
  return s;
}

/// |∂^K B| for boxes: the outer shell cl((B+K)∖B) plus the inner shell
/// B ∖ {b : b + K ⊆ int B}.
template <int D>
double boundary_volume(const Box<D>& B, const Box<D>& K) {
  const Box<D> grown = minkowski_sum(B, K);
  const double outer = grown.volume() - intersect(grown, B).volume();
  const Box<D> eroded = erosion(B, K);
  const double inner = B.volume() - (eroded.empty() ? 0.0 : intersect(eroded, B).volume());
  return outer + inner;
}

template <int D>
double boundary_ratio(const Box<D>& B, const Box<D>& K) {
  return boundary_volume(B, K) / B.volume();
}

// ---------------------------------------------------------------------------
// Autocorrelation coefficients

template <int D>
struct Autocorrelation {
  std::vector<Vec<D>> z;  // lexicographically sorted, symmetric under z -> -z
  std::vector<cplx> eta;
  double epsilon = 0.0;
  double range = 0.0;
  double volume = 0.0;
  int n = 0;  // index in the van Hove sequence
  GroupSpec group = real_group(D);

  std::size_t size() const { return z.size(); }

  /// η at z (exact match within tol), or 0.
  cplx at(const Vec<D>& q, double tol = 1e-9) const {
    auto it = std::lower_bound(z.begin(), z.end(), q[0] - tol, [](const Vec<D>& a, double v) { return a[0] < v; });
    for (; it != z.end() && (*it)[0] <= q[0] + tol; ++it)
      if (nearly_equal<D>(*it, q, tol)) return eta[static_cast<std::size_t>(it - z.begin())];
    return {0.0, 0.0};
  }

  /// Index range of coefficients with first coordinate in [a, b].
  std::pair<std::size_t, std::size_t> slab(double a, double b) const {
    auto lo = std::lower_bound(z.begin(), z.end(), a, [](const Vec<D>& p, double v) { return p[0] < v; });
    auto hi = std::upper_bound(lo, z.end(), b, [](double v, const Vec<D>& p) { return v < p[0]; });
    return {static_cast<std::size_t>(lo - z.begin()), static_cast<std::size_t>(hi - z.begin())};
  }

  /// γ(φ) = Σ_z η(z) φ(z).
  cplx apply(const TestFunction<D>& phi) const {
    const Box<D> s = phi.support();
    CompensatedSum<cplx> acc;
    auto [first, last] = slab(s.lo[0], s.hi[0]);
    for (std::size_t i = first; i < last; ++i)
      if (s.contains_closed(z[i])) acc.add(eta[i] * phi(z[i]));
    return acc.value();
  }
};

/// Distinct displacements per unit range volume above which exact matching
/// is refused.
inline constexpr double kMaxDistinctDisplacementDensity = 1000.0;

namespace detail {

template <int D>
struct PairTerms {
  std::vector<Vec<D>> z;
  std::vector<cplx> v;
};

/// Groups of indices (into sorted z) that are equal within tol, axis by axis.
template <int D>
void cluster_exact(const std::vector<Vec<D>>& z, const std::vector<std::size_t>& order, double tol,
                   std::vector<std::pair<std::size_t, std::size_t>>& runs) {
  // order is sorted lexicographically; split into runs along axis 0, then
  // for d = 2 re-sort each run along axis 1 and split again.
  std::size_t start = 0;
  const std::size_t n = order.size();
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && z[order[end]][0] - z[order[end - 1]][0] <= tol) ++end;
    runs.emplace_back(start, end);
    start = end;
  }
}

}  // namespace detail

/// η_B(z) = (1/|B|) Σ_{x, y ∈ B, y - x ≈ z} conj(w_x) w_y for |z|_∞ <= R.
///
/// epsilon = 0 merges displacements equal within 1e-9 (FLC input);
/// epsilon > 0 bins by round(z / epsilon) with bin centres as support.
/// Pair contributions are produced in a fixed order independent of the
/// worker count and summed with compensation, so the result is bit-stable.
template <int D>
Autocorrelation<D> autocorrelation(const WeightedComb<D>& comb, const Box<D>& B, double epsilon, double R,
                                   int workers = 1) {
  if (epsilon < 0.0) fail(ErrorCode::invalid_argument, "binning epsilon must be nonnegative");
  if (!(R >= 0.0)) fail(ErrorCode::invalid_argument, "range must be nonnegative");
  const WeightedComb<D> c = restrict_to(comb, B);
  const std::size_t N = c.size();
  const double vol = haar_volume(B, comb.group);
  if (!(vol > 0.0)) fail(ErrorCode::invalid_argument, "box has zero volume");

  // Pairs with y lexicographically after x (z > 0); z = 0 handled exactly.
  const int blocks = std::max(1, workers);
  std::vector<detail::PairTerms<D>> parts(static_cast<std::size_t>(blocks));
  parallel_blocks(N, blocks, [&](int b, std::size_t begin, std::size_t end) {
    auto& out = parts[static_cast<std::size_t>(b)];
    for (std::size_t i = begin; i < end; ++i) {
      const cplx cw = std::conj(c.weights[i]);
      for (std::size_t j = i + 1; j < N; ++j) {
        const double dx = c.points[j][0] - c.points[i][0];
        if (dx > R) break;
        Vec<D> z = c.points[j] - c.points[i];
        if (max_norm(z) > R) continue;
        cplx v = cw * c.weights[j];
        if constexpr (D == 2) {
          // Keep near-vertical displacements pointing up so that mirror
          // images never land in the same bin as a direct term.
          if (z[0] <= 1e-9 && z[1] < 0.0) {
            z = -z;
            v = std::conj(v);
          }
        }
        out.z.push_back(z);
        out.v.push_back(v);
      }
    }
  });
  detail::PairTerms<D> all;
  for (auto& p : parts) {
    all.z.insert(all.z.end(), p.z.begin(), p.z.end());
    all.v.insert(all.v.end(), p.v.begin(), p.v.end());
    p = {};
  }

  std::vector<Vec<D>> zs;
  std::vector<cplx> etas;
  if (epsilon > 0.0) {
    using Key = std::array<long long, D>;
    std::vector<Key> keys(all.z.size());
    for (std::size_t i = 0; i < keys.size(); ++i)
      for (int a = 0; a < D; ++a) keys[i][a] = std::llround(all.z[i][a] / epsilon);
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    Key zero{};
    // Pairs rounding to the zero bin pair with their mirror images; keep
    // only the lexicographically positive bins and rebuild the rest by symmetry.
    CompensatedSum<cplx> at_zero;
    for (std::size_t k = 0; k < order.size();) {
      std::size_t e = k;
      CompensatedSum<cplx> acc;
      while (e < order.size() && keys[order[e]] == keys[order[k]]) acc.add(all.v[order[e++]]);
      if (keys[order[k]] == zero) {
        at_zero.add(acc.value());
        at_zero.add(std::conj(acc.value()));
      } else {
        Vec<D> zc;
        for (int a = 0; a < D; ++a) zc[a] = static_cast<double>(keys[order[k]][a]) * epsilon;
        zs.push_back(zc);
        etas.push_back(acc.value());
      }
      k = e;
    }
    CompensatedSum<double> diag;
    for (const auto& w : c.weights) diag.add(std::norm(w));
    at_zero.add(diag.value());
    zs.insert(zs.begin(), Vec<D>{});
    etas.insert(etas.begin(), at_zero.value());
  } else {
    std::vector<std::size_t> order(all.z.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lex_less<D>(all.z[a], all.z[b]); });
    constexpr double tol = 1e-9;
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    detail::cluster_exact<D>(all.z, order, tol, runs);
    for (auto [s, e] : runs) {
      if constexpr (D == 1) {
        CompensatedSum<cplx> acc;
        for (std::size_t k = s; k < e; ++k) acc.add(all.v[order[k]]);
        zs.push_back(all.z[order[s]]);
        etas.push_back(acc.value());
      } else {
        std::vector<std::size_t> sub(order.begin() + static_cast<long>(s), order.begin() + static_cast<long>(e));
        std::stable_sort(sub.begin(), sub.end(),
                         [&](std::size_t a, std::size_t b) { return all.z[a][1] < all.z[b][1]; });
        for (std::size_t k = 0; k < sub.size();) {
          std::size_t m = k + 1;
          while (m < sub.size() && all.z[sub[m]][1] - all.z[sub[m - 1]][1] <= tol) ++m;
          CompensatedSum<cplx> acc;
          for (std::size_t q = k; q < m; ++q) acc.add(all.v[sub[q]]);
          zs.push_back(all.z[sub[k]]);
          etas.push_back(acc.value());
          k = m;
        }
      }
    }
    double unit = 1.0;
    for (int a = 0; a < D; ++a) unit *= std::max(2.0 * R, 1.0);
    if (static_cast<double>(zs.size()) / unit > kMaxDistinctDisplacementDensity)
      fail(ErrorCode::non_flc_with_zero_binning,
           std::to_string(zs.size()) + " distinct displacements within range; use epsilon > 0");
    CompensatedSum<double> diag;
    for (const auto& w : c.weights) diag.add(std::norm(w));
    zs.insert(zs.begin(), Vec<D>{});
    etas.insert(etas.begin(), cplx{diag.value(), 0.0});
  }

  // zs[0] = 0, zs[1..] lexicographically positive; mirror and normalize.
  Autocorrelation<D> a;
  a.epsilon = epsilon;
  a.range = R;
  a.volume = vol;
  a.group = comb.group;
  const std::size_t P = zs.size();
  a.z.reserve(2 * P - 1);
  a.eta.reserve(2 * P - 1);
  std::vector<std::size_t> pos(P - 1);
  std::iota(pos.begin(), pos.end(), 1);
  std::stable_sort(pos.begin(), pos.end(), [&](std::size_t x, std::size_t y) { return lex_less<D>(zs[x], zs[y]); });
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
    a.z.push_back(-zs[*it]);
    a.eta.push_back(std::conj(etas[*it]) / vol);
  }
  a.z.push_back(zs[0]);
  a.eta.push_back(etas[0] / vol);
  for (std::size_t p : pos) {
    a.z.push_back(zs[p]);
    a.eta.push_back(etas[p] / vol);
  }
  return a;
}

/// Same coefficients for combs supported on s Z (1-D), via FFT correlation.
inline Autocorrelation<1> autocorrelation_lattice(const WeightedComb<1>& comb, const Box<1>& B, double spacing,
                                                  double R) {
  const WeightedComb<1> c = restrict_to(comb, B);
  const double vol = haar_volume(B, comb.group);
  Autocorrelation<1> a;
  a.range = R;
  a.volume = vol;
  a.group = comb.group;
  const auto max_lag = static_cast<std::int64_t>(std::floor(R / spacing + 1e-9));
  std::vector<std::int64_t> idx(c.size());
  std::int64_t base = 0, top = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double q = c.points[i][0] / spacing;
    const auto n = std::llround(q);
    if (std::abs(q - static_cast<double>(n)) > 1e-9) fail(ErrorCode::invalid_argument, "comb is not lattice supported");
    idx[i] = n;
  }
  if (!idx.empty()) {
    base = *std::min_element(idx.begin(), idx.end());
    top = *std::max_element(idx.begin(), idx.end());
  }
  for (auto& n : idx) n -= base;
  const std::vector<cplx> corr = lattice_correlation(idx, c.weights, top - base + 1, max_lag);
  CompensatedSum<double> diag;
  for (const auto& w : c.weights) diag.add(std::norm(w));
  for (std::int64_t m = max_lag; m >= 1; --m) {
    a.z.push_back({-static_cast<double>(m) * spacing});
    a.eta.push_back(std::conj(corr[static_cast<std::size_t>(m)]) / vol);
  }
  a.z.push_back({0.0});
  a.eta.push_back(cplx{diag.value(), 0.0} / vol);
  for (std::int64_t m = 1; m <= max_lag; ++m) {
    a.z.push_back({static_cast<double>(m) * spacing});
    a.eta.push_back(corr[static_cast<std::size_t>(m)] / vol);
  }
  return a;
}

/// γ_n for every box of the sequence, from one materialization on the
/// largest box.
template <int D, class Source>
  requires std::invocable<Source&, const Box<D>&>
std::vector<Autocorrelation<D>> autocorr_van_hove(Source&& source, const VanHoveSequence<D>& seq, double epsilon,
                                                  double R, int workers = 1) {
  if (seq.boxes.empty()) fail(ErrorCode::invalid_argument, "empty van Hove sequence");
  const std::size_t first = seq.boxes.size() > 1 ? 1 : 0;
  if (R > seq.boxes[first].diameter() / 2.0) fail(ErrorCode::invalid_argument, "range exceeds diam(B_1)/2");
  const WeightedComb<D> comb = source(seq.boxes.back());
  std::vector<Autocorrelation<D>> out;
  for (std::size_t n = 0; n < seq.boxes.size(); ++n) {
    out.push_back(autocorrelation<D>(comb, seq.boxes[n], epsilon, R, workers));
    out.back().n = static_cast<int>(n);
  }
  return out;
}

inline std::vector<Autocorrelation<1>> autocorr_van_hove(const Generator& gen, const VanHoveSequence<1>& seq,
                                                         double epsilon, double R, int workers = 1) {
  return autocorr_van_hove<1>([&](const Box<1>& b) { return gen.produce(b); }, seq, epsilon, R, workers);
}

/// sup_{|z| <= R} |η_a(z) - η_b(z)| over the union of both supports.
template <int D>
double max_coefficient_change(const Autocorrelation<D>& a, const Autocorrelation<D>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.eta[i] - b.at(a.z[i])));
  for (std::size_t i = 0; i < b.size(); ++i) m = std::max(m, std::abs(b.eta[i] - a.at(b.z[i])));
  return m;
}

// ---------------------------------------------------------------------------
// Boundary term

/// (1/|B|) |((μ_B)~ * ν_B - μ~ * ν_B)(φ)|.
///
/// The difference consists exactly of the pairs with x outside B, so it is
/// summed directly (no cancellation between two large sums). μ is
/// materialized on B ⊖ supp φ grown by the support.
template <int D, class SourceMu, class SourceNu>
  requires std::invocable<SourceMu&, const Box<D>&>
double eberlein_boundary_check(SourceMu&& mu, SourceNu&& nu, const Box<D>& B, const TestFunction<D>& phi) {
  const Box<D> s = phi.support();
  Box<D> wide{B.lo - s.hi, B.hi - s.lo};
  for (int i = 0; i < D; ++i) wide.hi[i] = std::nextafter(wide.hi[i], std::numeric_limits<double>::infinity());
  const WeightedComb<D> m = mu(wide);
  const WeightedComb<D> n = restrict_to(nu(B), B);
  CompensatedSum<cplx> acc;
  for (std::size_t j = 0; j < n.size(); ++j) {
    const Vec<D>& y = n.points[j];
    // y - x ∈ supp φ  <=>  x ∈ y - supp φ
    auto [first, last] = m.slab(y[0] - s.hi[0], y[0] - s.lo[0]);
    for (std::size_t i = first; i < last; ++i) {
      const Vec<D>& x = m.points[i];
      if (B.contains_half_open(x)) continue;
      const Vec<D> d = y - x;
      if (!s.contains_closed(d)) continue;
      acc.add(std::conj(m.weights[i]) * n.weights[j] * phi(d));
    }
  }
  return std::abs(acc.value()) / haar_volume(B, n.group);
}

inline double eberlein_boundary_check(const Generator& mu, const Generator& nu, const Box<1>& B,
                                      const TestFunction<1>& phi) {
  return eberlein_boundary_check<1>([&](const Box<1>& b) { return mu.produce(b); },
                                    [&](const Box<1>& b) { return nu.produce(b); }, B, phi);
}

// ---------------------------------------------------------------------------
// Closed formula over an empirical hull measure

template <int D>
struct EmpiricalHullMeasure {
  std::vector<WeightedComb<D>> samples;  // uniform weights 1/M
};

/// Samples α_{-s_i} ω restricted to `window`, with shifts s_i = start + i step
/// along the first axis (a regular lattice rule over [start, start + M step)).
inline EmpiricalHullMeasure<1> hull_from_translates(const Generator& gen, const Box<1>& window, double start,
                                                    double step, std::size_t M) {
  EmpiricalHullMeasure<1> m;
  const double last = start + step * static_cast<double>(M > 0 ? M - 1 : 0);
  const Box<1> master = interval(window.lo[0] + start, window.hi[0] + last);
  const WeightedComb<1> big = gen.produce(master);
  m.samples.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    const double s = start + step * static_cast<double>(i);
    WeightedComb<1> piece = restrict_to(big, window.translated({s}));
    piece.window = window.translated({s});
    m.samples.push_back(translate<1>(piece, Vec<1>{-s}));
  }
  return m;
}

/// γ_{σ,m}(φ) = E_m Σ_t w_t σ(t) Σ_x conj(w_x) φ(t - x), i.e. the closed
/// formula ∫∫ f_φ(α_{-t} ω̄) σ(t) dω(t) dm(ω) written out for point measures.
template <int D>
Evaluated<cplx> autocorr_closed_formula(const EmpiricalHullMeasure<D>& m, const TestFunction<D>& sigma,
                                        const TestFunction<D>& phi, int workers = 1) {
  Evaluated<cplx> out;
  if (m.samples.empty()) return out;
  const GroupSpec g = m.samples.front().group;
  const cplx mass = sigma.integral(g);
  if (std::abs(mass - cplx{1.0, 0.0}) > 1e-9) fail(ErrorCode::sigma_not_normalized, "∫σ must equal 1");
  const Box<D> ss = sigma.support();
  const Box<D> ps = phi.support();
  const Box<D> reach{ss.lo - ps.hi, ss.hi - ps.lo};
  std::vector<cplx> per = parallel_map<cplx>(m.samples.size(), workers, [&](std::size_t i) {
    const WeightedComb<D>& w = m.samples[i];
    CompensatedSum<cplx> acc;
    auto [t0, t1] = w.slab(ss.lo[0], ss.hi[0]);
    for (std::size_t a = t0; a < t1; ++a) {
      const Vec<D>& t = w.points[a];
      if (!ss.contains_closed(t)) continue;
      const cplx st = sigma(t);
      if (st == cplx{0.0, 0.0}) continue;
      auto [x0, x1] = w.slab(t[0] - ps.hi[0], t[0] - ps.lo[0]);
      CompensatedSum<cplx> inner;
      for (std::size_t b = x0; b < x1; ++b) {
        const Vec<D> d = t - w.points[b];
        if (ps.contains_closed(d)) inner.add(std::conj(w.weights[b]) * phi(d));
      }
      acc.add(w.weights[a] * st * inner.value());
    }
    return acc.value();
  });
  for (const auto& w : m.samples)
    if (!w.window.contains_box(reach) || !w.window.contains_box(ss)) out.truncated = true;
  CompensatedSum<cplx> total;
  for (const auto& v : per) total.add(v);
  out.value = total.value() / static_cast<double>(m.samples.size());
  return out;
}

// ---------------------------------------------------------------------------
// Pairing with two test functions

/// (φ̃ * ψ * γ)(t) = Σ_z η(z) (φ̃ * ψ)(t - z).
template <int D>
cplx pairing(const Autocorrelation<D>& gamma, const TestFunction<D>& phi, const TestFunction<D>& psi,
             const Vec<D>& t) {
  // (φ̃ * ψ)(s) ≠ 0 only for s ∈ (c_ψ - c_φ) ± (h_φ + h_ψ).
  Box<D> need;
  for (int i = 0; i < D; ++i) {
    const double c = psi.center[i] - phi.center[i];
    const double r = phi.halfwidth[i] + psi.halfwidth[i];
    need.lo[i] = t[i] - c - r;
    need.hi[i] = t[i] - c + r;
    if (std::max(std::abs(need.lo[i]), std::abs(need.hi[i])) > gamma.range + 1e-9)
      fail(ErrorCode::range_exceeded, "pairing needs displacements beyond the autocorrelation range");
  }
  CompensatedSum<cplx> acc;
  auto [first, last] = gamma.slab(need.lo[0], need.hi[0]);
  for (std::size_t i = first; i < last; ++i) {
    if (!need.contains_closed(gamma.z[i])) continue;
    acc.add(gamma.eta[i] * cross_correlation<D>(phi, psi, t - gamma.z[i], gamma.group));
  }
  return acc.value();
}

}  // namespace aperiodica
