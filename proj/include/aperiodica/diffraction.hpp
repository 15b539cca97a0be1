#pragma once

// Structure factors, Bragg-atom extraction and the purity ratio.

#include <algorithm>
#include <string>
#include <vector>

#include "autocorrelation.hpp"
#include "core.hpp"
#include "fourier.hpp"
#include "generators.hpp"
#include "measures.hpp"
#include "test_function.hpp"

namespace aperiodica {

/// I_B(k) = (1/|B|) |Σ_{x ∈ B} w_x exp(-2πi k·x)|².
template <int D>
double structure_factor(const WeightedComb<D>& comb, const Box<D>& B, const Vec<D>& k) {
  CompensatedSum<cplx> acc;
  auto [first, last] = comb.slab(B.lo[0], B.hi[0]);
  for (std::size_t i = first; i < last; ++i)
    if (B.contains_half_open(comb.points[i]))
      acc.add(comb.weights[i] * std::polar(1.0, -kTwoPi * dot(k, comb.points[i])));
  return std::norm(acc.value()) / haar_volume(B, comb.group);
}

inline double structure_factor(const Generator& gen, const Box<1>& B, double k) {
  return structure_factor<1>(gen.produce(B), B, {k});
}

/// Atom mass estimate I_B(k) / |B| = |B|^-2 |Σ w_x exp(-2πi k·x)|².
template <int D>
double atom_intensity(const WeightedComb<D>& comb, const Box<D>& B, const Vec<D>& k) {
  return structure_factor<D>(comb, B, k) / haar_volume(B, comb.group);
}

struct AtomEstimate {
  double intensity = 0.0;             // value on the largest box
  double residual = 0.0;              // max relative change over the boxes
  std::vector<double> per_box;        // intensity on each box, in order
};

/// Atom intensities on the given boxes and their Cauchy residual
/// max_i |a_{i+1} - a_i| / a_last.
template <int D>
AtomEstimate atom_estimate(const WeightedComb<D>& comb, const std::vector<Box<D>>& boxes, const Vec<D>& k) {
  AtomEstimate e;
  std::vector<CompensatedSum<cplx>> acc(boxes.size());
  Box<D> hull = boxes.front();
  for (const auto& b : boxes)
    for (int i = 0; i < D; ++i) {
      hull.lo[i] = std::min(hull.lo[i], b.lo[i]);
      hull.hi[i] = std::max(hull.hi[i], b.hi[i]);
    }
  auto [first, last] = comb.slab(hull.lo[0], hull.hi[0]);
  for (std::size_t i = first; i < last; ++i) {
    const Vec<D>& x = comb.points[i];
    const cplx term = comb.weights[i] * std::polar(1.0, -kTwoPi * dot(k, x));
    for (std::size_t b = 0; b < boxes.size(); ++b)
      if (boxes[b].contains_half_open(x)) acc[b].add(term);
  }
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const double v = haar_volume(boxes[b], comb.group);
    e.per_box.push_back(std::norm(acc[b].value()) / (v * v));
  }
  e.intensity = e.per_box.back();
  double r = 0.0;
  for (std::size_t b = 1; b < e.per_box.size(); ++b) r = std::max(r, std::abs(e.per_box[b] - e.per_box[b - 1]));
  e.residual = e.intensity > 0.0 ? r / e.intensity : (r > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  return e;
}

inline AtomEstimate atom_estimate(const Generator& gen, const VanHoveSequence<1>& seq, double k) {
  const std::size_t n = seq.boxes.size();
  std::vector<Box<1>> boxes(seq.boxes.begin() + static_cast<long>(n >= 3 ? n - 3 : 0), seq.boxes.end());
  return atom_estimate<1>(gen.produce(seq.boxes.back()), boxes, {k});
}

// ---------------------------------------------------------------------------
// Peak scan

struct Atom {
  double k = 0.0;
  double intensity = 0.0;
  double residual = 0.0;
  std::vector<double> per_box;
};

struct PeakScanOptions {
  double k_lo = -3.0;
  double k_hi = 3.0;
  double coarse_step = 0.0;  // 0: 1 / (oversample * diam(B_max))
  double oversample = 4.0;
  double refine_tol = 1e-9;
  double residual_tol = 0.05;
  double floor_factor = 1e-4;  // floor = factor * (Σ|w| / |B|)²
  double prefilter_tol = 0.5;
  bool force_direct = false;   // skip the lattice FFT path
  int workers = 1;
};

struct DiffractionSpectrum {
  std::vector<Atom> atoms;     // accepted, intensity descending
  std::vector<Atom> rejected;  // refined candidates failing residual or floor
  double purity = 0.0;
  double denominator = 0.0;
  double total_mass_proxy = 0.0;  // Σ intensity over accepted atoms
  double max_scan_intensity = 0.0;  // largest grid intensity on the largest box
  double floor = 0.0;
  double coarse_step = 0.0;
  double k_lo = 0.0, k_hi = 0.0;
  std::string method;
  std::vector<Box<1>> boxes;
  std::size_t grid_candidates = 0;
};

namespace detail {

/// Golden-section maximization of f on [a, b].
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
  constexpr double g = 0.6180339887498949;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace detail

/// Coarse grid of I on the last three boxes, local maxima above the floor,
/// golden-section refinement on the largest box, then acceptance by
/// atom_estimate. The grid uses an exact DFT for lattice-supported combs and
/// the NUFFT otherwise.
inline DiffractionSpectrum peak_scan(const WeightedComb<1>& comb, const std::vector<Box<1>>& boxes,
                                     std::optional<double> lattice_spacing, const PeakScanOptions& opt) {
  if (boxes.empty()) fail(ErrorCode::invalid_argument, "no boxes");
  if (!(opt.k_hi > opt.k_lo)) fail(ErrorCode::invalid_argument, "empty k range");
  DiffractionSpectrum sp;
  sp.k_lo = opt.k_lo;
  sp.k_hi = opt.k_hi;
  sp.boxes = boxes;
  const Box<1>& big = boxes.back();
  const double L = big.diameter();
  const double vol_big = haar_volume(big, comb.group);
  {
    const WeightedComb<1> inside = restrict_to(comb, big);
    CompensatedSum<double> s;
    for (const auto& w : inside.weights) s.add(std::abs(w));
    const double rho = s.value() / vol_big;
    sp.floor = opt.floor_factor * rho * rho;
  }

  // Coarse grid on [k_lo, k_hi]: k_j = j dk.
  std::vector<std::vector<double>> grid(boxes.size());
  std::int64_t j0 = 0, j1 = 0;
  double dk = 0.0;
  const bool use_lattice = lattice_spacing.has_value() && !opt.force_direct;
  if (use_lattice) {
    const double s = *lattice_spacing;
    const std::size_t M = next_pow2(static_cast<std::size_t>(std::ceil(opt.oversample * L / s)));
    dk = 1.0 / (static_cast<double>(M) * s);
    if (opt.coarse_step > 0.0 && opt.coarse_step < dk) fail(ErrorCode::invalid_argument, "coarse step finer than the DFT grid");
    j0 = static_cast<std::int64_t>(std::ceil(opt.k_lo / dk));
    j1 = static_cast<std::int64_t>(std::floor(opt.k_hi / dk));
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const WeightedComb<1> c = restrict_to(comb, boxes[b]);
      std::vector<std::int64_t> idx(c.size());
      std::int64_t base = 0;
      for (std::size_t i = 0; i < c.size(); ++i) idx[i] = std::llround(c.points[i][0] / s);
      if (!idx.empty()) base = *std::min_element(idx.begin(), idx.end());
      for (auto& n : idx) n -= base;
      const std::vector<cplx> F = dft_from_indices(idx, c.weights, M);
      const double v = haar_volume(boxes[b], comb.group);
      grid[b].resize(static_cast<std::size_t>(j1 - j0 + 1));
      const auto m = static_cast<std::int64_t>(M);
      for (std::int64_t j = j0; j <= j1; ++j)
        grid[b][static_cast<std::size_t>(j - j0)] = std::norm(F[static_cast<std::size_t>(((j % m) + m) % m)]) / (v * v);
    }
    sp.method = "lattice-dft";
  } else {
    dk = opt.coarse_step > 0.0 ? opt.coarse_step : 1.0 / (opt.oversample * L);
    if (dk > 1.0 / (2.0 * L)) fail(ErrorCode::grid_too_coarse, "coarse step exceeds 1/(2 diam B)");
    j0 = static_cast<std::int64_t>(std::ceil(opt.k_lo / dk));
    j1 = static_cast<std::int64_t>(std::floor(opt.k_hi / dk));
    std::size_t J = static_cast<std::size_t>(j1 - j0 + 1);
    J += J % 2;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      const WeightedComb<1> c = restrict_to(comb, boxes[b]);
      std::vector<double> x(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) x[i] = c.points[i][0];
      const std::vector<cplx> S = uniform_grid_sums(x, c.weights, static_cast<double>(j0) * dk, dk, J);
      const double v = haar_volume(boxes[b], comb.group);
      grid[b].resize(static_cast<std::size_t>(j1 - j0 + 1));
      for (std::size_t j = 0; j < grid[b].size(); ++j) grid[b][j] = std::norm(S[j]) / (v * v);
    }
    sp.method = "nufft";
  }
  sp.coarse_step = dk;

  // Local maxima on the largest box, prefiltered by their grid residual.
  const std::vector<double>& top = grid.back();
  const std::size_t G = top.size();
  std::vector<std::size_t> cand;
  for (std::size_t j = 0; j < G; ++j) {
    sp.max_scan_intensity = std::max(sp.max_scan_intensity, top[j]);
    if (top[j] < sp.floor) continue;
    const bool left = j == 0 || top[j] >= top[j - 1];
    const bool right = j + 1 == G || top[j] > top[j + 1];
    if (!(left && right)) continue;
    double r = 0.0;
    for (std::size_t b = 1; b < grid.size(); ++b) r = std::max(r, std::abs(grid[b][j] - grid[b - 1][j]));
    if (r / top[j] > opt.prefilter_tol) continue;
    cand.push_back(j);
  }
  sp.grid_candidates = cand.size();

  const WeightedComb<1> on_big = restrict_to(comb, big);
  std::vector<Atom> refined = parallel_map<Atom>(cand.size(), opt.workers, [&](std::size_t i) {
    const double kc = static_cast<double>(j0 + static_cast<std::int64_t>(cand[i])) * dk;
    auto f = [&](double k) { return std::norm(exponential_sum(on_big.points, on_big.weights, k, 0, on_big.size())); };
    const double k = detail::golden_max(f, kc - dk, kc + dk, opt.refine_tol);
    const AtomEstimate e = atom_estimate<1>(comb, boxes, {k});
    return Atom{k, e.intensity, e.residual, e.per_box};
  });

  // Accept, then merge candidates that converged onto the same peak.
  std::vector<Atom> acc;
  for (auto& a : refined) {
    if (a.residual <= opt.residual_tol && a.intensity >= sp.floor && a.k >= opt.k_lo - dk && a.k <= opt.k_hi + dk)
      acc.push_back(a);
    else
      sp.rejected.push_back(a);
  }
  std::stable_sort(acc.begin(), acc.end(), [](const Atom& a, const Atom& b) { return a.k < b.k; });
  for (const auto& a : acc) {
    if (!sp.atoms.empty() && a.k - sp.atoms.back().k <= dk) {
      if (a.intensity > sp.atoms.back().intensity) sp.atoms.back() = a;
      continue;
    }
    sp.atoms.push_back(a);
  }
  std::stable_sort(sp.atoms.begin(), sp.atoms.end(), [](const Atom& a, const Atom& b) {
    if (a.intensity != b.intensity) return a.intensity > b.intensity;
    return a.k < b.k;
  });
  CompensatedSum<double> mass;
  for (const auto& a : sp.atoms) mass.add(a.intensity);
  sp.total_mass_proxy = mass.value();
  return sp;
}

/// Scan on the last three boxes of the sequence.
inline DiffractionSpectrum peak_scan(const Generator& gen, const VanHoveSequence<1>& seq, const PeakScanOptions& opt) {
  const std::size_t n = seq.boxes.size();
  if (n < 3) fail(ErrorCode::invalid_argument, "peak scan needs at least three boxes");
  std::vector<Box<1>> boxes(seq.boxes.end() - 3, seq.boxes.end());
  return peak_scan(gen.produce(seq.boxes.back()), boxes, gen.lattice_spacing(), opt);
}

// ---------------------------------------------------------------------------
// Purity and the Wiener oracle

/// Σ_atoms |φ̂(k)|² intensity(k) / (φ̃ * φ * γ)(0).
inline double purity(const Autocorrelation<1>& gamma, DiffractionSpectrum& spectrum, const TestFunction<1>& phi) {
  const double den = pairing<1>(gamma, phi, phi, {0.0}).real();
  if (!(den > 1e-12)) fail(ErrorCode::zero_denominator, "(φ̃ * φ * γ)(0) <= 1e-12");
  CompensatedSum<double> num;
  for (const auto& a : spectrum.atoms) num.add(std::norm(phi.fourier({a.k}, gamma.group)) * a.intensity);
  spectrum.denominator = den;
  spectrum.purity = num.value() / den;
  return spectrum.purity;
}

/// w_N = (1/(2N+1)) Σ_{|z| <= N} |η(z)|² for integer-supported η.
inline double wiener_oracle(const Autocorrelation<1>& gamma, std::int64_t N) {
  if (static_cast<double>(N) > gamma.range + 1e-9) fail(ErrorCode::range_exceeded, "N exceeds the autocorrelation range");
  CompensatedSum<double> acc;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    const double z = gamma.z[i][0];
    if (std::abs(z - std::round(z)) > 1e-9) fail(ErrorCode::invalid_argument, "autocorrelation is not supported on Z");
    if (std::abs(z) <= static_cast<double>(N)) acc.add(std::norm(gamma.eta[i]));
  }
  return acc.value() / static_cast<double>(2 * N + 1);
}

/// Σ intensity² over accepted atoms with k in [origin, origin + period).
inline double sum_squared_intensity(const DiffractionSpectrum& s, double period = 1.0, double origin = 0.0) {
  std::vector<const Atom*> in;
  for (const auto& a : s.atoms)
    if (a.k >= origin - 1e-9 && a.k < origin + period - 1e-9) in.push_back(&a);
  CompensatedSum<double> acc;
  for (auto* a : in) acc.add(a->intensity * a->intensity);
  return acc.value();
}

}  // namespace aperiodica
