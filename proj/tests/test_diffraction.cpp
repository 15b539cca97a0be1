#include <gtest/gtest.h>

#include <random>

#include "aperiodica/diffraction.hpp"
#include "aperiodica/generators.hpp"
#include "aperiodica/quadratic.hpp"
#include "aperiodica/spectral.hpp"

using namespace aperiodica;

namespace {

double dirichlet(double N, double k) {
  const double s = std::sin(kPi * k);
  if (std::abs(s) < 1e-15) return N;
  const double v = std::sin(kPi * N * k) / s;
  return v * v / N;
}

PeakScanOptions scan(double lo, double hi) {
  PeakScanOptions o;
  o.k_lo = lo;
  o.k_hi = hi;
  return o;
}

}  // namespace

TEST(StructureFactor, LatticeDirichletKernel) {
  const double N = 256.0;
  const auto c = lattice().produce(interval(0.0, N));
  EXPECT_NEAR(structure_factor<1>(c, interval(0.0, N), {0.0}), N, 1e-9);
  EXPECT_NEAR(structure_factor<1>(c, interval(0.0, N), {0.5}), 0.0, 1e-12);
  for (double k : {0.01, 0.1234, 0.37, 1.002, -2.71})
    EXPECT_NEAR(structure_factor<1>(c, interval(0.0, N), {k}), dirichlet(N, k), 1e-9 * N) << k;
}

TEST(StructureFactor, SinglePointAndSymmetry) {
  const auto one = make_comb<1>({{3.3}}, {cplx{0.6, 0.8}}, interval(0.0, 10.0));
  for (double k : {0.0, 0.7, -4.1}) EXPECT_NEAR(structure_factor<1>(one, interval(0.0, 10.0), {k}), 0.1, 1e-15);
  const auto tm = thue_morse().produce(interval(0.0, 1000.0));
  const auto fib = fibonacci_model_set().produce(interval(0.0, 1000.0));
  for (double k : {0.13, 0.5, 1.77}) {
    EXPECT_NEAR(structure_factor<1>(tm, interval(0.0, 1000.0), {k}), structure_factor<1>(tm, interval(0.0, 1000.0), {-k}),
                1e-9);
    EXPECT_NEAR(structure_factor<1>(fib, interval(0.0, 1000.0), {k}),
                structure_factor<1>(fib, interval(0.0, 1000.0), {-k}), 1e-9);
  }
}

TEST(AtomEstimate, LatticeUnitAtom) {
  const auto seq = default_van_hove<1>(100.0, 2.0, 6);
  const auto e = atom_estimate(lattice(), seq, 1.0);
  EXPECT_NEAR(e.intensity, 1.0, 1e-12);
  EXPECT_LT(e.residual, 1e-12);
}

TEST(AtomEstimate, ThueMorseHasNoAtoms) {
  // I_n(k) / |B_n| on B_n = [0, 2^n) decays at every k ≠ 0
  const auto g = thue_morse();
  for (double k : {0.5, 1.0 / 3.0, 0.25, 0.1, 0.7071}) {
    double prev = 1e9;
    for (int n = 10; n <= 18; n += 2) {
      const double v = atom_intensity<1>(g.produce(interval(0.0, std::ldexp(1.0, n))),
                                         interval(0.0, std::ldexp(1.0, n)), {k});
      // dyadic k on [0, 2^n) cancels exactly; only roundoff remains there
      EXPECT_LE(v, std::max(prev * 1.01, 1e-20)) << k << " " << n;
      prev = v;
    }
    EXPECT_LT(prev, 1e-2) << k;
  }
}

TEST(AtomEstimate, RandomPhaseCombIsRejected) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  const double L = 1 << 14;
  std::vector<Vec<1>> pts;
  std::vector<cplx> ws;
  for (int i = 0; i < L; ++i) {
    pts.push_back({static_cast<double>(i)});
    ws.push_back(std::polar(1.0, ph(rng)));
  }
  const auto c = make_comb<1>(pts, ws, interval(0.0, L));
  std::vector<Box<1>> boxes{interval(0.0, L / 4), interval(0.0, L / 2), interval(0.0, L)};
  const auto e = atom_estimate<1>(c, boxes, {0.3});
  // |Σ|² ~ L, so I/|B| ~ 1/|B|, and it does not settle across boxes
  EXPECT_LT(e.intensity, 20.0 / L);
  for (double k : {0.1, 0.3, 0.77}) {
    const auto f = atom_estimate<1>(c, boxes, {k});
    EXPECT_TRUE(f.residual > 0.05 || f.intensity < 1e-4) << k;
  }
}

TEST(PeakScan, LatticePoissonSummation) {
  const auto sp = peak_scan(lattice(), default_van_hove<1>(128.0, 2.0, 5), scan(-2.5, 2.5));
  ASSERT_EQ(sp.atoms.size(), 5u);
  for (const auto& a : sp.atoms) {
    EXPECT_NEAR(a.k, std::round(a.k), 1e-6);
    EXPECT_NEAR(a.intensity, 1.0, 1e-2);
  }
  EXPECT_EQ(sp.method, "lattice-dft");
}

TEST(PeakScan, DirectPathMatchesLatticePath) {
  const auto seq = default_van_hove<1>(128.0, 2.0, 4);
  for (const auto& g : {lattice(), period_doubling()}) {
    auto o = scan(-1.5, 1.5);
    const auto a = peak_scan(g, seq, o);
    o.force_direct = true;
    o.coarse_step = a.coarse_step;
    const auto b = peak_scan(g, seq, o);
    EXPECT_EQ(b.method, "nufft");
    ASSERT_EQ(a.atoms.size(), b.atoms.size()) << g.describe();
    for (std::size_t i = 0; i < a.atoms.size(); ++i) {
      EXPECT_NEAR(a.atoms[i].k, b.atoms[i].k, 1e-9);
      EXPECT_NEAR(a.atoms[i].intensity, b.atoms[i].intensity, 1e-9);
    }
    EXPECT_NEAR(a.max_scan_intensity, b.max_scan_intensity, 1e-9);
  }
}

TEST(PeakScan, FibonacciAtomsInFourierModule) {
  const auto sp = peak_scan(fibonacci_model_set(), default_van_hove<1>(100.0, 2.0, 6), scan(-3.0, 3.0));
  ASSERT_GE(sp.atoms.size(), 10u);
  // top atoms have small coefficients; weak ones near the floor need more
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_TRUE(fourier_module_member(sp.atoms[i].k, kGolden, 20, 1e-4).has_value()) << sp.atoms[i].k;
  for (const auto& a : sp.atoms) EXPECT_TRUE(fourier_module_member(a.k, kGolden, 40, 1e-4).has_value()) << a.k;
}

TEST(PeakScan, PeriodDoublingAtomsAreDyadic) {
  const auto sp = peak_scan(period_doubling(), default_van_hove<1>(128.0, 2.0, 6), scan(-1.0, 1.0));
  ASSERT_GE(sp.atoms.size(), 5u);
  for (const auto& a : sp.atoms) EXPECT_TRUE(dyadic_member(a.k, 10, 1e-4).has_value()) << a.k;
}

TEST(PeakScan, GridTooCoarse) {
  auto o = scan(-1.0, 1.0);
  o.coarse_step = 0.1;
  try {
    peak_scan(fibonacci_model_set(), default_van_hove<1>(100.0, 2.0, 3), o);
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::grid_too_coarse);
  }
}

TEST(Purity, LatticeThueMorseAndEmpty) {
  const auto seq = default_van_hove<1>(128.0, 2.0, 6);
  const Box<1>& B = seq.boxes.back();
  {
    auto sp = peak_scan(lattice(), seq, scan(-3.0, 3.0));
    const auto gamma = autocorrelation_lattice(lattice().produce(B), B, 1.0, 4.0);
    EXPECT_GE(purity(gamma, sp, tent1(0.0, 1.0)), 0.98);
    EXPECT_LE(sp.purity, 1.02);
  }
  {
    auto sp = peak_scan(thue_morse(), seq, scan(-3.0, 3.0));
    const auto gamma = autocorrelation_lattice(thue_morse().produce(B), B, 1.0, 4.0);
    EXPECT_LE(purity(gamma, sp, tent1(0.0, 1.0)), 0.05);
  }
  Autocorrelation<1> d;
  d.z = {{0.0}};
  d.eta = {1.0};
  d.range = 4.0;
  DiffractionSpectrum empty;
  EXPECT_EQ(purity(d, empty, tent1(0.0, 1.0)), 0.0);
  Autocorrelation<1> zero;
  zero.range = 4.0;
  try {
    purity(zero, empty, tent1(0.0, 1.0));
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_denominator);
  }
}

TEST(Wiener, Examples) {
  const Box<1> B = interval(0.0, 1 << 16);
  const auto z = autocorrelation_lattice(lattice().produce(B), B, 1.0, 64.0);
  EXPECT_NEAR(wiener_oracle(z, 64), 1.0, 1e-3);
  // direct sum of ((N - |z|)/N)²
  double direct = 0.0;
  for (int q = -64; q <= 64; ++q) direct += std::pow((B.volume() - std::abs(q)) / B.volume(), 2);
  EXPECT_NEAR(wiener_oracle(z, 64), direct / 129.0, 1e-12);

  Autocorrelation<1> d;
  d.z = {{0.0}};
  d.eta = {1.0};
  d.range = 100.0;
  for (std::int64_t N : {1, 10, 100}) EXPECT_DOUBLE_EQ(wiener_oracle(d, N), 1.0 / (2.0 * N + 1.0));
  EXPECT_THROW(wiener_oracle(d, 101), Error);
}

TEST(Wiener, ThueMorseDecays) {
  const Box<1> B = interval(0.0, 1 << 20);
  const auto g = autocorrelation_lattice(thue_morse().produce(B), B, 1.0, 4096.0);
  double prev = 1e9;
  for (std::int64_t N : {64, 256, 1024, 4096}) {
    const double w = wiener_oracle(g, N);
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_LT(prev, 2e-2);
}

TEST(Wiener, AgreesWithAtomsOnPeriodDoubling) {
  // atoms from boxes ending at length N; η from a box much longer than N so
  // the (L - |z|)/L edge factor stays negligible in w_N
  const std::int64_t N = 4096;
  const VanHoveSequence<1> seq{{interval(0.0, 1024.0), interval(0.0, 2048.0), interval(0.0, 4096.0)}};
  const auto sp = peak_scan(period_doubling(), seq, scan(-0.01, 1.01));
  const Box<1> B = interval(0.0, 1 << 20);
  const auto gamma = autocorrelation_lattice(period_doubling().produce(B), B, 1.0, static_cast<double>(N));
  const double w = wiener_oracle(gamma, N), s = sum_squared_intensity(sp);
  EXPECT_LT(std::abs(w - s) / w, 0.02) << w << " " << s;
}

TEST(SpectralMass, LatticeExamples) {
  const auto seq = default_van_hove<1>(128.0, 2.0, 6);
  const auto r1 = spectral_mass_check(lattice(), tent1(0.0, 1.0), 1.0, seq);
  EXPECT_TRUE(r1.atom_accepted);
  EXPECT_LT(r1.lhs, 1e-20);
  EXPECT_LT(r1.rhs, 1e-20);
  EXPECT_TRUE(r1.negligible);
  const auto r2 = spectral_mass_check(lattice(), tent1(0.0, 0.5), 1.0, seq);
  EXPECT_TRUE(r2.atom_accepted);
  EXPECT_GT(r2.lhs, 0.03);  // sinc⁴(1/2) ≈ 0.041
  EXPECT_LT(r2.rel_error, 0.05);
}

TEST(SpectralMass, FibonacciTopAtom) {
  const auto seq = default_van_hove<1>(100.0, 2.0, 7);
  const auto sp = peak_scan(fibonacci_model_set(), seq, scan(0.1, 3.0));
  ASSERT_FALSE(sp.atoms.empty());
  const auto r = spectral_mass_check(fibonacci_model_set(), tent1(0.0, 0.5), sp.atoms.front().k, seq);
  EXPECT_TRUE(r.atom_accepted);
  EXPECT_LT(r.rel_error, 0.05);
}

TEST(ApproximateUnit, TransformsTendToOne) {
  const Box<1> B = interval(0.0, 4096.0);
  const auto gamma = autocorrelation_lattice(lattice().produce(interval(-20.0, 4120.0)), B, 1.0, 12.0);
  const auto rep = approximate_unit_check(gamma, {0.4, 0.2, 0.1, 0.05, 0.025}, SincSquaredProbe{0.0, 4.0});
  ASSERT_EQ(rep.rows.size(), 5u);
  for (std::size_t c = 0; c < rep.check_points.size(); ++c) {
    EXPECT_NEAR(rep.rows.back().phi_hat_sq[c], 1.0, 2e-2);
    for (std::size_t j = 1; j < rep.rows.size(); ++j)
      EXPECT_GE(rep.rows[j].phi_hat_sq[c], rep.rows[j - 1].phi_hat_sq[c] - 1e-15);
  }
  // the probe difference halves (or better) with each halving of h
  for (double r : rep.ratios) EXPECT_GE(r, 1.9);
  EXPECT_LT(rep.rows.back().difference, 1e-2 * rep.rows.back().direct);
}

TEST(ApproximateUnit, ZeroComb) {
  const Box<1> B = interval(0.0, 256.0);
  const auto c = lattice(1.0, WeightRule::constant, 0.0).produce(B);
  const auto gamma = autocorrelation<1>(c, B, 0.0, 6.0);
  const auto rep = approximate_unit_check(gamma, {0.4, 0.2}, SincSquaredProbe{0.0, 4.0});
  for (const auto& row : rep.rows) {
    EXPECT_EQ(row.weighted, 0.0);
    EXPECT_EQ(row.direct, 0.0);
  }
}
