#pragma once

// Dynamical side: correlation averages (1/|B|) ∫_B conj(f_φ(α_{t-v}ω)) f_ψ(α_{-v}ω) dv,
// Weyl sums, eigenvalue detection and the spectral identities that tie
// them to the diffraction atoms. One-dimensional.

#include <algorithm>
#include <map>
#include <vector>

#include "autocorrelation.hpp"
#include "core.hpp"
#include "diffraction.hpp"
#include "generators.hpp"
#include "measures.hpp"
#include "test_function.hpp"

namespace aperiodica {

namespace detail {

/// (φ * ω)(v) for nondecreasing v, with a sliding window over the points.
class SmearCursor {
 public:
  SmearCursor(const WeightedComb<1>& c, const TestFunction<1>& phi) : c_(c), phi_(phi) {
    lo_off_ = phi.center[0] - phi.halfwidth[0];
    hi_off_ = phi.center[0] + phi.halfwidth[0];
  }

  cplx operator()(double v) {
    // φ(v - x) ≠ 0 needs v - x ∈ (c - h, c + h), i.e. x ∈ (v - c - h, v - c + h).
    const double xlo = v - hi_off_, xhi = v - lo_off_;
    while (first_ < c_.size() && c_.points[first_][0] <= xlo) ++first_;
    cplx s{0.0, 0.0};
    for (std::size_t i = first_; i < c_.size() && c_.points[i][0] < xhi; ++i)
      s += c_.weights[i] * phi_({v - c_.points[i][0]});
    return s;
  }

 private:
  const WeightedComb<1>& c_;
  TestFunction<1> phi_;
  double lo_off_, hi_off_;
  std::size_t first_ = 0;
};

/// Kinks of (φ * ω)(v - shift) inside [a, b].
inline void smear_breakpoints(const WeightedComb<1>& c, const TestFunction<1>& phi, double shift, double a, double b,
                              std::vector<double>& out) {
  const Profile p = phi.profile(0);
  const std::vector<double> kinks = p.breakpoints();
  const double lo = a - shift - phi.center[0] - p.halfwidth, hi = b - shift - phi.center[0] + p.halfwidth;
  auto [first, last] = c.slab(lo, hi);
  for (std::size_t i = first; i < last; ++i)
    for (double k : kinks) {
      const double v = c.points[i][0] + shift + phi.center[0] + k;
      if (v > a && v < b) out.push_back(v);
    }
}

inline bool piecewise_linear(const TestFunction<1>& f) { return f.shape != Shape::raised_cosine; }

}  // namespace detail

/// Region of the comb needed to evaluate (φ * ω)(v - shift) for v ∈ B.
inline Box<1> smear_support(const Box<1>& B, const TestFunction<1>& phi, double shift) {
  const Box<1> s = phi.support();
  return interval(B.lo[0] - shift - s.hi[0], B.hi[0] - shift - s.lo[0]);
}

// ---------------------------------------------------------------------------
// Correlation

/// (1/|B|) ∫_B conj((φ * ω)(v - t)) (ψ * ω)(v) dv.
///
/// The integrand is piecewise polynomial between kinks; the v-axis is split
/// at every kink and into pieces no longer than min(h)/8, each integrated
/// with 4-point Gauss-Legendre (exact for tents and trapezoids).
inline Evaluated<cplx> correlation(const WeightedComb<1>& comb, const TestFunction<1>& phi,
                                   const TestFunction<1>& psi, double t, const Box<1>& B) {
  Evaluated<cplx> out;
  const Box<1> need_phi = smear_support(B, phi, t), need_psi = smear_support(B, psi, 0.0);
  out.truncated = !(comb.window.contains_box(need_phi) && comb.window.contains_box(need_psi));
  std::vector<double> breaks;
  detail::smear_breakpoints(comb, phi, t, B.lo[0], B.hi[0], breaks);
  detail::smear_breakpoints(comb, psi, 0.0, B.lo[0], B.hi[0], breaks);
  detail::SmearCursor f(comb, phi), g(comb, psi);
  auto integrand = [&](double v) { return std::conj(f(v - t)) * g(v); };
  const double step = std::min(phi.halfwidth[0], psi.halfwidth[0]) / 8.0;
  const cplx integral = integrate_piecewise<4>(integrand, B.lo[0], B.hi[0], std::move(breaks), step);
  out.value = integral / B.volume();
  return out;
}

inline Evaluated<cplx> correlation(const Generator& gen, const TestFunction<1>& phi, const TestFunction<1>& psi,
                                   double t, const Box<1>& B) {
  const Box<1> a = smear_support(B, phi, t), b = smear_support(B, psi, 0.0);
  const Box<1> w = interval(std::min(a.lo[0], b.lo[0]) - 1.0, std::max(a.hi[0], b.hi[0]) + 1.0);
  return correlation(gen.produce(w), phi, psi, t, B);
}

struct DworkinReport {
  std::vector<double> t;
  std::vector<cplx> correlation;
  std::vector<cplx> pairing;
  double max_rel_error = 0.0;
  /// Error normalized by sqrt(pairing_φφ(0) pairing_ψψ(0)) (Cauchy-Schwarz scale).
  double max_scaled_error = 0.0;
  bool truncated = false;
};

/// Compares the time average with (φ̃ * ψ * γ)(t) from the autocorrelation
/// of the same box.
inline DworkinReport dworkin_identity_report(const WeightedComb<1>& comb, const Autocorrelation<1>& gamma,
                                             const TestFunction<1>& phi, const TestFunction<1>& psi,
                                             const std::vector<double>& ts, const Box<1>& B, int workers = 1) {
  DworkinReport r;
  r.t = ts;
  const double scale = std::sqrt(std::abs(pairing<1>(gamma, phi, phi, {0.0}).real() *
                                          pairing<1>(gamma, psi, psi, {0.0}).real()));
  std::vector<Evaluated<cplx>> corr =
      parallel_map<Evaluated<cplx>>(ts.size(), workers, [&](std::size_t i) { return correlation(comb, phi, psi, ts[i], B); });
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const cplx p = pairing<1>(gamma, phi, psi, {ts[i]});
    r.correlation.push_back(corr[i].value);
    r.pairing.push_back(p);
    r.truncated = r.truncated || corr[i].truncated;
    const double err = std::abs(corr[i].value - p);
    r.max_rel_error = std::max(r.max_rel_error, err / (std::abs(p) + 1e-12));
    r.max_scaled_error = std::max(r.max_scaled_error, scale > 0.0 ? err / scale : err);
  }
  return r;
}

/// Materializes the comb around the largest box and runs the comparison
/// there, with γ from exact-match van Hove averaging on the same box.
inline DworkinReport dworkin_identity_report(const Generator& gen, const TestFunction<1>& phi,
                                             const TestFunction<1>& psi, const std::vector<double>& ts,
                                             const VanHoveSequence<1>& seq, int workers = 1) {
  const Box<1>& B = seq.boxes.back();
  double tmax = 0.0;
  for (double t : ts) tmax = std::max(tmax, std::abs(t));
  const double reach = tmax + std::abs(psi.center[0] - phi.center[0]) + phi.halfwidth[0] + psi.halfwidth[0];
  const double margin = tmax + std::abs(phi.center[0]) + std::abs(psi.center[0]) + phi.halfwidth[0] + psi.halfwidth[0] + 1.0;
  const WeightedComb<1> comb = gen.produce(interval(B.lo[0] - margin, B.hi[0] + margin));
  const Autocorrelation<1> gamma = autocorrelation<1>(comb, B, 0.0, std::ceil(reach) + 1.0, workers);
  return dworkin_identity_report(comb, gamma, phi, psi, ts, B, workers);
}

// ---------------------------------------------------------------------------
// Weyl sums

/// W_B(k, φ) = (1/|B|) ∫_B exp(-2πi k v) (φ * ω)(v) dv for many k.
///
/// For piecewise-linear φ the integral over each linear piece is done in
/// closed form; for the raised cosine, 8-point Gauss-Legendre on pieces of
/// length <= h/8.
class WeylEvaluator {
 public:
  WeylEvaluator(const WeightedComb<1>& comb, const TestFunction<1>& phi, const Box<1>& B) : B_(B) {
    truncated_ = !comb.window.contains_box(smear_support(B, phi, 0.0));
    std::vector<double> breaks;
    detail::smear_breakpoints(comb, phi, 0.0, B.lo[0], B.hi[0], breaks);
    breaks.push_back(B.lo[0]);
    breaks.push_back(B.hi[0]);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    linear_ = detail::piecewise_linear(phi);
    detail::SmearCursor f(comb, phi);
    if (linear_) {
      nodes_ = breaks;
      values_.reserve(nodes_.size());
      for (double v : nodes_) values_.push_back(f(v));
    } else {
      const double step = phi.halfwidth[0] / 8.0;
      for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double a = breaks[i], b = breaks[i + 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / step)));
        const double h = (b - a) / pieces;
        for (int p = 0; p < pieces; ++p) {
          const double mid = a + (p + 0.5) * h;
          for (int q = 0; q < 8; ++q) {
            const double v = mid + 0.5 * h * GaussLegendre<8>::x[q];
            nodes_.push_back(v);
            values_.push_back(0.5 * h * GaussLegendre<8>::w[q] * f(v));
          }
        }
      }
    }
  }

  bool truncated() const { return truncated_; }

  cplx operator()(double k) const {
    CompensatedSum<cplx> acc;
    const double kappa = kTwoPi * k;
    if (linear_) {
      for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
        const double a = nodes_[i], len = nodes_[i + 1] - a;
        if (!(len > 0.0)) continue;
        const double theta = kappa * len;
        auto [e0, e1] = moments(theta);
        acc.add(std::polar(len, -kappa * a) * (values_[i] * e0 + (values_[i + 1] - values_[i]) * e1));
      }
    } else {
      for (std::size_t i = 0; i < nodes_.size(); ++i) acc.add(values_[i] * std::polar(1.0, -kappa * nodes_[i]));
    }
    return acc.value() / B_.volume();
  }

 private:
  /// E0 = ∫_0^1 exp(-iθs) ds, E1 = ∫_0^1 s exp(-iθs) ds.
  static std::pair<cplx, cplx> moments(double theta) {
    if (std::abs(theta) < 0.25) {
      cplx e0{0.0, 0.0}, e1{0.0, 0.0};
      cplx p{1.0, 0.0};  // (-iθ)^n / n!
      for (int n = 0; n < 14; ++n) {
        e0 += p / static_cast<double>(n + 1);
        e1 += p / static_cast<double>(n + 2);
        p *= cplx{0.0, -theta} / static_cast<double>(n + 1);
      }
      return {e0, e1};
    }
    const cplx e = std::polar(1.0, -theta);
    const cplx e0 = (1.0 - e) / cplx{0.0, theta};
    const cplx e1 = cplx{0.0, 1.0} * (e - e0) / theta;
    return {e0, e1};
  }

  Box<1> B_;
  bool linear_ = true;
  bool truncated_ = false;
  std::vector<double> nodes_;
  std::vector<cplx> values_;
};

inline Evaluated<cplx> weyl_sum(const WeightedComb<1>& comb, const TestFunction<1>& phi, double k, const Box<1>& B) {
  WeylEvaluator w(comb, phi, B);
  return {w(k), w.truncated()};
}

inline Evaluated<cplx> weyl_sum(const Generator& gen, const TestFunction<1>& phi, double k, const Box<1>& B) {
  const Box<1> s = smear_support(B, phi, 0.0);
  return weyl_sum(gen.produce(interval(s.lo[0] - 1.0, s.hi[0] + 1.0)), phi, k, B);
}

/// Finite-size level of |W|² for a comb without an eigenvalue at k:
/// η(0) ‖φ‖₂² / |B| (random-phase scale).
inline double weyl_baseline(double eta0, const TestFunction<1>& phi, const Box<1>& B) {
  return eta0 * phi.l2_norm_sq() / B.volume();
}

// ---------------------------------------------------------------------------
// Eigenvalue group

struct EigenCandidate {
  double k = 0.0;
  double best_ratio = 0.0;   // max over probes of |W|² / threshold
  double best_modulus_sq = 0.0;
  bool accepted = false;
  bool negation_accepted = false;
  double structure_intensity = 0.0;  // atom intensity estimate at k, largest box
};

struct EigenGroupReport {
  std::vector<double> generators;  // top atoms used
  std::vector<EigenCandidate> combinations;
  std::vector<EigenCandidate> pairwise_sums;
  double pairwise_pass_rate = 0.0;
  double negation_closure_rate = 0.0;
  double closure_pass_rate = 0.0;  // sums/differences of accepted eigenvalues
  double threshold_factor = 10.0;
  double purity = 0.0;
  std::size_t closure_tested = 0;
};

struct EigenGroupOptions {
  std::size_t top_atoms = 5;
  int coefficient_bound = 1;
  double threshold_factor = 10.0;
  double purity_gate = 0.95;
  double k_lo = -3.0, k_hi = 3.0;
  double floor = 0.0;  // atom-intensity floor for the closure rule
  int workers = 1;
};

/// Integer combinations of the top atoms tested for eigenvalues via Weyl
/// sums with several probe functions at the largest box.
inline EigenGroupReport eigenvalue_group_check(const DiffractionSpectrum& spectrum, const Generator& gen,
                                               const std::vector<TestFunction<1>>& probes, const Box<1>& B,
                                               const EigenGroupOptions& opt) {
  if (spectrum.purity < opt.purity_gate)
    fail(ErrorCode::not_pure_point, "purity " + format_double(spectrum.purity) + " below gate");
  if (probes.empty()) fail(ErrorCode::invalid_argument, "no probe functions");
  EigenGroupReport rep;
  rep.threshold_factor = opt.threshold_factor;
  rep.purity = spectrum.purity;
  for (std::size_t i = 0; i < std::min(opt.top_atoms, spectrum.atoms.size()); ++i)
    rep.generators.push_back(spectrum.atoms[i].k);

  double margin = 1.0;
  for (const auto& p : probes) margin = std::max(margin, std::abs(p.center[0]) + p.halfwidth[0] + 1.0);
  const WeightedComb<1> comb = gen.produce(interval(B.lo[0] - margin, B.hi[0] + margin));
  CompensatedSum<double> e0;
  {
    const WeightedComb<1> in = restrict_to(comb, B);
    for (const auto& w : in.weights) e0.add(std::norm(w));
  }
  const double eta0 = e0.value() / B.volume();
  std::vector<WeylEvaluator> evals;
  std::vector<double> thresholds;
  for (const auto& p : probes) {
    evals.emplace_back(comb, p, B);
    thresholds.push_back(opt.threshold_factor * weyl_baseline(eta0, p, B));
  }
  auto ratio = [&](double k, double* mod) {
    double best = 0.0;
    for (std::size_t i = 0; i < evals.size(); ++i) {
      const double m = std::norm(evals[i](k));
      if (m / thresholds[i] > best) {
        best = m / thresholds[i];
        if (mod) *mod = m;
      }
    }
    return best;
  };
  auto key = [](double k) { return std::llround(k * 1e8); };
  std::map<long long, EigenCandidate> seen;
  auto examine = [&](double k) -> EigenCandidate& {
    auto it = seen.find(key(k));
    if (it != seen.end()) return it->second;
    EigenCandidate c;
    c.k = k;
    c.best_ratio = ratio(k, &c.best_modulus_sq);
    c.accepted = c.best_ratio >= 1.0;
    c.structure_intensity = atom_estimate<1>(comb, {B}, {k}).intensity;
    return seen.emplace(key(k), c).first->second;
  };

  // All combinations Σ m_i k_i, |m_i| <= M, inside the scan range.
  const std::size_t g = rep.generators.size();
  std::vector<int> m(g, -opt.coefficient_bound);
  std::vector<double> ks;
  while (g > 0) {
    double k = 0.0;
    for (std::size_t i = 0; i < g; ++i) k += m[i] * rep.generators[i];
    if (k >= opt.k_lo && k <= opt.k_hi) ks.push_back(k);
    std::size_t a = 0;
    while (a < g && ++m[a] > opt.coefficient_bound) m[a++] = -opt.coefficient_bound;
    if (a == g) break;
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end(), [&](double x, double y) { return key(x) == key(y); }), ks.end());
  for (double k : ks) {
    EigenCandidate& c = examine(k);
    c.negation_accepted = examine(-k).accepted;
    rep.combinations.push_back(c);
  }

  std::size_t pass = 0;
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = i; j < g; ++j) {
      const double k = rep.generators[i] + rep.generators[j];
      if (k < opt.k_lo || k > opt.k_hi) continue;
      EigenCandidate& c = examine(k);
      c.negation_accepted = examine(-k).accepted;
      rep.pairwise_sums.push_back(c);
      pass += c.accepted ? 1 : 0;
    }
  rep.pairwise_pass_rate = rep.pairwise_sums.empty() ? 1.0 : static_cast<double>(pass) / static_cast<double>(rep.pairwise_sums.size());

  std::size_t acc = 0, neg = 0;
  std::vector<double> accepted;
  for (const auto& c : rep.combinations)
    if (c.accepted) {
      ++acc;
      neg += c.negation_accepted ? 1 : 0;
      accepted.push_back(c.k);
    }
  rep.negation_closure_rate = acc == 0 ? 1.0 : static_cast<double>(neg) / static_cast<double>(acc);

  // Sums and differences of accepted eigenvalues: accepted again, or the
  // diffraction intensity there is below the floor.
  std::size_t ok = 0, tested = 0;
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (std::size_t j = i; j < accepted.size(); ++j)
      for (double k : {accepted[i] + accepted[j], accepted[i] - accepted[j]}) {
        if (k < opt.k_lo || k > opt.k_hi) continue;
        const EigenCandidate& c = examine(k);
        ++tested;
        ok += (c.accepted || c.structure_intensity < opt.floor) ? 1 : 0;
      }
  rep.closure_tested = tested;
  rep.closure_pass_rate = tested == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(tested);
  return rep;
}

}  // namespace aperiodica
