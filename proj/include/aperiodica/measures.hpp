#pragma once

// Finite restrictions of translation-bounded complex Dirac combs.

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "core.hpp"
#include "test_function.hpp"

namespace aperiodica {

/// Points kept in lexicographic order; weights on coincident points summed.
template <int D>
struct WeightedComb {
  std::vector<Vec<D>> points;
  std::vector<cplx> weights;
  Box<D> window{};  // half-open
  GroupSpec group = real_group(D);

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Index range [first, last) of points whose first coordinate lies in [a, b].
  std::pair<std::size_t, std::size_t> slab(double a, double b) const {
    auto lo = std::lower_bound(points.begin(), points.end(), a,
                               [](const Vec<D>& p, double v) { return p[0] < v; });
    auto hi = std::upper_bound(lo, points.end(), b, [](double v, const Vec<D>& p) { return v < p[0]; });
    return {static_cast<std::size_t>(lo - points.begin()), static_cast<std::size_t>(hi - points.begin())};
  }

  friend bool operator==(const WeightedComb&, const WeightedComb&) = default;
};

/// Sorts, merges coincident points (summing weights) and checks the window.
template <int D>
WeightedComb<D> make_comb(std::vector<Vec<D>> points, std::vector<cplx> weights, const Box<D>& window,
                          GroupSpec group = real_group(D)) {
  if (points.size() != weights.size()) fail(ErrorCode::invalid_argument, "points and weights differ in length");
  if (group.dim() != D) fail(ErrorCode::invalid_argument, "group dimension mismatch");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lex_less<D>(points[a], points[b]); });
  WeightedComb<D> c;
  c.window = window;
  c.group = group;
  for (std::size_t i : order) {
    if (!window.contains_half_open(points[i])) fail(ErrorCode::invalid_argument, "point outside window");
    if (group.discrete())
      for (int a = 0; a < D; ++a)
        if (points[i][a] != std::round(points[i][a]))
          fail(ErrorCode::invalid_argument, "non-integer point on an integer group");
    // In 2-D coincident points are adjacent in lexicographic order except
    // for ties broken within 1e-12 on the first axis; scan the short run.
    bool merged = false;
    for (std::size_t j = c.points.size(); j-- > 0;) {
      if (points[i][0] - c.points[j][0] > kCoincidence) break;
      if (nearly_equal<D>(points[i], c.points[j], kCoincidence)) {
        c.weights[j] += weights[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      c.points.push_back(points[i]);
      c.weights.push_back(weights[i]);
    }
  }
  return c;
}

/// Points lying in the half-open box b, keeping the original window unless a
/// new one is given.
template <int D>
WeightedComb<D> restrict_to(const WeightedComb<D>& c, const Box<D>& b) {
  WeightedComb<D> r;
  r.window = intersect(c.window, b);
  r.group = c.group;
  auto [first, last] = c.slab(b.lo[0], b.hi[0]);
  for (std::size_t i = first; i < last; ++i)
    if (b.contains_half_open(c.points[i])) {
      r.points.push_back(c.points[i]);
      r.weights.push_back(c.weights[i]);
    }
  return r;
}

/// Σ_x w_x φ(x); flagged truncated if supp φ is not inside the window.
template <int D, class F>
Evaluated<cplx> evaluate_fn(const WeightedComb<D>& c, const Box<D>& support, F&& f) {
  Evaluated<cplx> out;
  Box<D> closed_window = c.window;
  out.truncated = !closed_window.contains_box(support);
  CompensatedSum<cplx> acc;
  auto [first, last] = c.slab(support.lo[0], support.hi[0]);
  for (std::size_t i = first; i < last; ++i)
    if (support.contains_closed(c.points[i])) acc.add(c.weights[i] * f(c.points[i]));
  out.value = acc.value();
  return out;
}

template <int D>
Evaluated<cplx> evaluate(const WeightedComb<D>& c, const TestFunction<D>& phi) {
  return evaluate_fn(c, phi.support(), [&](const Vec<D>& x) { return phi(x); });
}

/// Σ_{x ∈ V} |w_x| for an open box V.
template <int D>
double total_variation_on(const WeightedComb<D>& c, const Box<D>& v) {
  CompensatedSum<double> acc;
  auto [first, last] = c.slab(v.lo[0], v.hi[0]);
  for (std::size_t i = first; i < last; ++i)
    if (v.contains_open(c.points[i])) acc.add(std::abs(c.weights[i]));
  return acc.value();
}

template <int D>
struct TranslationBound {
  double C = 1.0;
  Box<D> V{};  // open
};

template <int D>
struct BoundednessReport {
  bool bounded = true;
  Vec<D> worst_t{};
  double worst_value = 0.0;
  std::size_t samples = 0;
};

/// Samples t on a grid of window ⊖ V and checks |ω|(t + V) <= C.
/// The reported offender is the midpoint of the first maximal run of grid
/// points attaining the largest value (1-D), or the first maximiser (2-D).
template <int D>
BoundednessReport<D> is_translation_bounded(const WeightedComb<D>& c, const TranslationBound<D>& bound,
                                            double step) {
  if (!(step > 0.0)) fail(ErrorCode::invalid_argument, "grid step must be positive");
  if (bound.V.empty()) fail(ErrorCode::invalid_argument, "V must be nonempty");
  const Box<D> range = erosion(c.window, bound.V);
  for (int i = 0; i < D; ++i)
    if (range.lo[i] > range.hi[i]) fail(ErrorCode::window_too_small, "window ⊖ V is empty");
  std::array<long long, D> counts;
  for (int i = 0; i < D; ++i)
    counts[i] = static_cast<long long>(std::floor((range.hi[i] - range.lo[i]) / step + 1e-9)) + 1;
  BoundednessReport<D> rep;
  rep.worst_value = -1.0;
  long long run_start = -1, run_end = -1;
  bool in_run = false, run_closed = false;
  long long total = 1;
  for (int i = 0; i < D; ++i) total *= counts[i];
  for (long long idx = 0; idx < total; ++idx) {
    Vec<D> t;
    long long rem = idx;
    for (int i = D - 1; i >= 0; --i) {
      t[i] = range.lo[i] + static_cast<double>(rem % counts[i]) * step;
      rem /= counts[i];
    }
    const double v = total_variation_on(c, bound.V.translated(t));
    ++rep.samples;
    if (v > rep.worst_value + 1e-12) {
      rep.worst_value = v;
      rep.worst_t = t;
      run_start = run_end = idx;
      in_run = true;
      run_closed = false;
    } else if (in_run && !run_closed && std::abs(v - rep.worst_value) <= 1e-12 && idx == run_end + 1) {
      run_end = idx;
    } else if (in_run) {
      run_closed = true;
    }
  }
  if constexpr (D == 1) {
    if (run_start >= 0) rep.worst_t[0] = range.lo[0] + 0.5 * static_cast<double>(run_start + run_end) * step;
  }
  if (rep.worst_value < 0.0) rep.worst_value = 0.0;
  rep.bounded = rep.worst_value <= bound.C;
  return rep;
}

/// α_t ω = δ_t * ω.
template <int D>
WeightedComb<D> translate(const WeightedComb<D>& c, const Vec<D>& t) {
  WeightedComb<D> r = c;
  for (auto& p : r.points) p = p + t;
  r.window = c.window.translated(t);
  return r;
}

/// ω̃: points negated, weights conjugated, window [a, b) -> [-b, -a). If a
/// point sits on a, the upper end is nudged up one ulp to keep it inside.
template <int D>
WeightedComb<D> reflect(const WeightedComb<D>& c) {
  WeightedComb<D> r;
  r.group = c.group;
  r.window = c.window.negated();
  for (const auto& p : c.points)
    for (int i = 0; i < D; ++i)
      if (p[i] == c.window.lo[i])
        r.window.hi[i] = std::nextafter(-c.window.lo[i], std::numeric_limits<double>::infinity());
  const std::size_t n = c.size();
  r.points.reserve(n);
  r.weights.reserve(n);
  for (std::size_t i = n; i-- > 0;) {
    r.points.push_back(-c.points[i]);
    r.weights.push_back(std::conj(c.weights[i]));
  }
  if constexpr (D == 2) {
    // Reversal keeps the first axis ordered; re-sort ties on the second.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return lex_less<2>(r.points[a], r.points[b]); });
    WeightedComb<D> s = r;
    for (std::size_t i = 0; i < n; ++i) {
      s.points[i] = r.points[order[i]];
      s.weights[i] = r.weights[order[i]];
    }
    return s;
  }
  return r;
}

/// (φ * ω)(t) = Σ w_x φ(t - x) = f_φ(α_{-t} ω).
template <int D>
Evaluated<cplx> f_phi_at(const TestFunction<D>& phi, const WeightedComb<D>& c, const Vec<D>& t) {
  const Box<D> support = phi.support().negated().translated(t);
  return evaluate_fn(c, support, [&](const Vec<D>& x) { return phi(t - x); });
}

/// f_φ(ω) = (φ * ω)(0) = Σ w_x φ(-x).
template <int D>
Evaluated<cplx> f_phi(const TestFunction<D>& phi, const WeightedComb<D>& c) {
  return f_phi_at<D>(phi, c, Vec<D>{});
}

/// μ * ν for finite combs; coincident sums merged within 1e-12.
template <int D>
WeightedComb<D> convolve_finite(const WeightedComb<D>& a, const WeightedComb<D>& b) {
  std::vector<Vec<D>> pts;
  std::vector<cplx> ws;
  pts.reserve(a.size() * b.size());
  ws.reserve(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      pts.push_back(a.points[i] + b.points[j]);
      ws.push_back(a.weights[i] * b.weights[j]);
    }
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return lex_less<D>(pts[x], pts[y]); });
  WeightedComb<D> r;
  r.group = a.group;
  r.window = minkowski_sum(a.window, b.window);
  // The Minkowski sum of half-open boxes [a1,b1)+[a2,b2) is [a1+a2, b1+b2-),
  // so the half-open sum box contains every pair sum.
  std::vector<CompensatedSum<cplx>> acc;
  for (std::size_t k : order) {
    if (!r.points.empty() && nearly_equal<D>(pts[k], r.points.back(), kCoincidence)) {
      acc.back().add(ws[k]);
      continue;
    }
    bool merged = false;
    if constexpr (D == 2) {
      for (std::size_t j = r.points.size(); j-- > 0;) {
        if (pts[k][0] - r.points[j][0] > kCoincidence) break;
        if (nearly_equal<D>(pts[k], r.points[j], kCoincidence)) {
          acc[j].add(ws[k]);
          merged = true;
          break;
        }
      }
    }
    if (!merged) {
      r.points.push_back(pts[k]);
      acc.emplace_back();
      acc.back().add(ws[k]);
    }
  }
  r.weights.reserve(acc.size());
  for (const auto& s : acc) r.weights.push_back(s.value());
  return r;
}

/// Σ |w_x| / |window|, the mean total variation density.
template <int D>
double mean_variation_density(const WeightedComb<D>& c) {
  CompensatedSum<double> acc;
  for (const auto& w : c.weights) acc.add(std::abs(w));
  const double vol = haar_volume(c.window, c.group);
  return vol > 0.0 ? acc.value() / vol : 0.0;
}

}  // namespace aperiodica
