#pragma once

// Spectral measures of the functions f_φ: atom masses against Weyl sums,
// the approximate-unit limit |φ̂_j|² γ̂ → γ̂, and window masses of ρ_{f_φ}
// computed from the correlation curve.

#include <vector>

#include "autocorrelation.hpp"
#include "diffraction.hpp"
#include "dynamics.hpp"

namespace aperiodica {

struct SpectralMassReport {
  double k = 0.0;
  double lhs = 0.0;  // |φ̂(k)|² · atom intensity
  double rhs = 0.0;  // |W_B(k, φ)|²
  double rel_error = 0.0;
  bool atom_accepted = false;
  double atom_residual = 0.0;
  bool negligible = false;  // both sides below kNegligibleMass
};

inline constexpr double kNegligibleMass = 1e-14;

inline double mass_rel_error(double lhs, double rhs, bool* negligible = nullptr) {
  const double m = std::max(lhs, rhs);
  if (negligible) *negligible = m <= kNegligibleMass;
  if (m <= kNegligibleMass) return 0.0;
  return std::abs(lhs - rhs) / m;
}

/// Compares |φ̂(k)|² γ̂({k}) with |W(k, φ)|², both on the largest box.
inline SpectralMassReport spectral_mass_check(const WeightedComb<1>& comb, const TestFunction<1>& phi, double k,
                                              const std::vector<Box<1>>& boxes, double residual_tol = 0.05,
                                              double floor = 0.0) {
  SpectralMassReport r;
  r.k = k;
  const AtomEstimate a = atom_estimate<1>(comb, boxes, {k});
  r.atom_residual = a.residual;
  r.atom_accepted = a.residual <= residual_tol && a.intensity >= floor;
  r.lhs = std::norm(phi.fourier({k}, comb.group)) * a.intensity;
  r.rhs = std::norm(WeylEvaluator(comb, phi, boxes.back())(k));
  r.rel_error = mass_rel_error(r.lhs, r.rhs, &r.negligible);
  return r;
}

inline SpectralMassReport spectral_mass_check(const Generator& gen, const TestFunction<1>& phi, double k,
                                              const VanHoveSequence<1>& seq, double residual_tol = 0.05,
                                              double floor = 0.0) {
  const Box<1>& B = seq.boxes.back();
  const Box<1> s = smear_support(B, phi, 0.0);
  const WeightedComb<1> comb = gen.produce(interval(std::min(s.lo[0], B.lo[0]) - 1.0, std::max(s.hi[0], B.hi[0]) + 1.0));
  const std::size_t n = seq.boxes.size();
  std::vector<Box<1>> last(seq.boxes.begin() + static_cast<std::ptrdiff_t>(n >= 3 ? n - 3 : 0), seq.boxes.end());
  return spectral_mass_check(comb, phi, k, last, residual_tol, floor);
}

/// Best agreement over several probe widths for one atom.
inline SpectralMassReport best_spectral_mass(const WeightedComb<1>& comb, const std::vector<TestFunction<1>>& probes,
                                             double k, const std::vector<Box<1>>& boxes) {
  SpectralMassReport best;
  bool first = true;
  for (const auto& p : probes) {
    SpectralMassReport r = spectral_mass_check(comb, p, k, boxes);
    // Prefer a probe with a non-negligible transform at k.
    const bool better = first || (best.negligible && !r.negligible) ||
                        (best.negligible == r.negligible && r.rel_error < best.rel_error);
    if (better) best = r;
    first = false;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Probes on the dual side

/// g(k) = a sinc²(a (k - k0)), whose transform ĝ(t) = exp(-2πi k0 t) tent_a(t)
/// has compact support.
struct SincSquaredProbe {
  double k0 = 0.0;
  double a = 4.0;
  double operator()(double k) const {
    const double s = sinc(a * (k - k0));
    return a * s * s;
  }
  cplx transform(double t) const {
    const double u = std::abs(t);
    return u >= a ? cplx{0.0, 0.0} : std::polar(1.0 - u / a, -kTwoPi * k0 * t);
  }
};

/// ∫ g dγ̂ = Σ_z η(z) ĝ(z).
inline double diffraction_probe(const Autocorrelation<1>& gamma, const SincSquaredProbe& g) {
  if (g.a > gamma.range + 1e-9) fail(ErrorCode::range_exceeded, "probe transform wider than the autocorrelation range");
  CompensatedSum<cplx> acc;
  auto [first, last] = gamma.slab(-g.a, g.a);
  for (std::size_t i = first; i < last; ++i) acc.add(gamma.eta[i] * g.transform(gamma.z[i][0]));
  return acc.value().real();
}

/// c(t) = ⟨f_φ, T^t f_φ⟩ evaluated through γ.
inline cplx correlation_curve(const Autocorrelation<1>& gamma, const TestFunction<1>& phi, double t) {
  return pairing<1>(gamma, phi, phi, {t});
}

namespace detail {

/// Kinks of t ↦ (φ̃ * φ * γ)(t) in [a, b].
inline std::vector<double> curve_breakpoints(const Autocorrelation<1>& gamma, const TestFunction<1>& phi, double a,
                                             double b) {
  std::vector<double> out;
  const double h = phi.halfwidth[0];
  auto [first, last] = gamma.slab(a - 2.0 * h, b + 2.0 * h);
  for (std::size_t i = first; i < last; ++i)
    for (double o : {-2.0 * h, -h, 0.0, h, 2.0 * h}) {
      const double t = gamma.z[i][0] + o;
      if (t > a && t < b) out.push_back(t);
    }
  return out;
}

}  // namespace detail

/// ∫ g |φ̂|² dγ̂ = ∫ c(t) ĝ(t) dt for the compact-transform probe.
inline double weighted_probe(const Autocorrelation<1>& gamma, const TestFunction<1>& phi, const SincSquaredProbe& g) {
  if (g.a + 2.0 * phi.halfwidth[0] > gamma.range + 1e-9)
    fail(ErrorCode::range_exceeded, "probe plus test function wider than the autocorrelation range");
  std::vector<double> breaks = detail::curve_breakpoints(gamma, phi, -g.a, g.a);
  breaks.push_back(0.0);
  const double step = std::min(phi.halfwidth[0], g.a) / 4.0;
  const cplx v = integrate_piecewise<8>([&](double t) { return correlation_curve(gamma, phi, t) * g.transform(t); },
                                        -g.a, g.a, std::move(breaks), step);
  return v.real();
}

struct ApproximateUnitRow {
  double halfwidth = 0.0;
  double weighted = 0.0;  // ∫ g |φ̂_j|² dγ̂
  double direct = 0.0;    // ∫ g dγ̂
  double difference = 0.0;
  std::vector<double> phi_hat_sq;  // |φ̂_j(k)|² at the check points
};

struct ApproximateUnitReport {
  SincSquaredProbe probe;
  std::vector<double> check_points;
  std::vector<ApproximateUnitRow> rows;
  /// difference_j / difference_{j+1} for successive halvings.
  std::vector<double> ratios;
};

/// Normalized tents φ_j (∫φ_j = 1) of the given halfwidths; the measures
/// |φ̂_j|² γ̂ tested against the probe converge to γ̂ tested against it.
inline ApproximateUnitReport approximate_unit_check(const Autocorrelation<1>& gamma,
                                                    const std::vector<double>& halfwidths, const SincSquaredProbe& g,
                                                    const std::vector<double>& check_points = {0.0, 1.0, 2.0}) {
  ApproximateUnitReport rep;
  rep.probe = g;
  rep.check_points = check_points;
  const double direct = diffraction_probe(gamma, g);
  for (double h : halfwidths) {
    const TestFunction<1> phi = normalized(tent1(0.0, h), gamma.group);
    ApproximateUnitRow row;
    row.halfwidth = h;
    row.direct = direct;
    row.weighted = weighted_probe(gamma, phi, g);
    row.difference = std::abs(row.weighted - row.direct);
    for (double k : check_points) row.phi_hat_sq.push_back(std::norm(phi.fourier({k}, gamma.group)));
    rep.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
    rep.ratios.push_back(rep.rows[i + 1].difference > 0.0 ? rep.rows[i].difference / rep.rows[i + 1].difference
                                                          : std::numeric_limits<double>::infinity());
  return rep;
}

inline ApproximateUnitReport approximate_unit_check(const Generator& gen, const VanHoveSequence<1>& seq,
                                                    const std::vector<double>& halfwidths, const SincSquaredProbe& g,
                                                    int workers = 1) {
  double hmax = 0.0;
  for (double h : halfwidths) hmax = std::max(hmax, h);
  const double R = std::ceil(g.a + 2.0 * hmax) + 1.0;
  const Box<1>& B = seq.boxes.back();
  const WeightedComb<1> comb = gen.produce(interval(B.lo[0] - R - 1.0, B.hi[0] + R + 1.0));
  return approximate_unit_check(autocorrelation<1>(comb, B, 0.0, R, workers), halfwidths, g);
}

// ---------------------------------------------------------------------------
// Window masses of ρ_{f_φ}

struct ZeroWindowReport {
  double k_lo = 0.0, k_hi = 0.0;
  double horizon = 0.0;                // T: the t-integral runs over [-T, T]
  std::vector<double> box_lengths;     // one entry per box used
  std::vector<double> masses;          // ρ_{f_φ}(g) for the smooth window g on (k_lo, k_hi)
  std::vector<double> norms;           // ‖f_φ‖² = c(0)
  double relative_mass() const { return norms.empty() || norms.back() <= 0.0 ? 0.0 : masses.back() / norms.back(); }
};

/// ρ_{f_φ}(g) = ∫ c(t) ĝ(t) dt with g a raised-cosine window filling
/// (k_lo, k_hi) and the t-integral cut at ±T.
inline double window_mass(const Autocorrelation<1>& gamma, const TestFunction<1>& phi, double k_lo, double k_hi,
                          double T) {
  if (T + 2.0 * phi.halfwidth[0] > gamma.range + 1e-9)
    fail(ErrorCode::range_exceeded, "horizon exceeds the autocorrelation range");
  const Profile g{Shape::raised_cosine, 0.5 * (k_hi - k_lo), 0.0};
  const double k0 = 0.5 * (k_lo + k_hi);
  std::vector<double> breaks = detail::curve_breakpoints(gamma, phi, -T, T);
  const double step = std::min(phi.halfwidth[0], 0.125);
  const cplx v = integrate_piecewise<8>(
      [&](double t) { return correlation_curve(gamma, phi, t) * std::polar(g.fourier(t), -kTwoPi * k0 * t); }, -T, T,
      std::move(breaks), step);
  return v.real();
}

inline ZeroWindowReport spectral_measure_zero_check(const Generator& gen, const TestFunction<1>& phi, double k_lo,
                                                    double k_hi, const VanHoveSequence<1>& seq, double T = 200.0,
                                                    int workers = 1) {
  if (!(k_hi > k_lo)) fail(ErrorCode::invalid_argument, "empty k window");
  ZeroWindowReport rep;
  rep.k_lo = k_lo;
  rep.k_hi = k_hi;
  rep.horizon = T;
  const double R = std::ceil(T + 2.0 * phi.halfwidth[0]) + 1.0;
  const Box<1>& big = seq.boxes.back();
  const WeightedComb<1> comb = gen.produce(interval(big.lo[0] - R - 1.0, big.hi[0] + R + 1.0));
  for (const Box<1>& B : seq.boxes) {
    if (B.diameter() < 2.0 * R) continue;
    const Autocorrelation<1> gamma = autocorrelation<1>(comb, B, 0.0, R, workers);
    rep.box_lengths.push_back(B.volume());
    rep.masses.push_back(window_mass(gamma, phi, k_lo, k_hi, T));
    rep.norms.push_back(correlation_curve(gamma, phi, 0.0).real());
  }
  if (rep.masses.empty()) fail(ErrorCode::window_too_small, "no box is large enough for the horizon");
  return rep;
}

}  // namespace aperiodica
