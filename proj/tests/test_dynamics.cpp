#include <gtest/gtest.h>

#include <random>

#include "aperiodica/dynamics.hpp"
#include "aperiodica/generators.hpp"
#include "aperiodica/spectral.hpp"

using namespace aperiodica;

namespace {

std::vector<double> t_grid(int tmax) {
  std::vector<double> ts;
  for (int t = -tmax; t <= tmax; ++t) ts.push_back(t);
  return ts;
}

WeightedComb<1> random_phase_comb(std::uint64_t seed, double L) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  std::vector<Vec<1>> pts;
  std::vector<cplx> ws;
  for (double x = -10.0; x < L + 10.0; x += 1.0) {
    pts.push_back({x});
    ws.push_back(std::polar(1.0, ph(rng)));
  }
  return make_comb<1>(pts, ws, interval(-10.0, L + 10.0));
}

PeakScanOptions scan(double lo, double hi) {
  PeakScanOptions o;
  o.k_lo = lo;
  o.k_hi = hi;
  return o;
}

}  // namespace

TEST(Correlation, Examples) {
  const auto phi = tent1(0.0, 0.5), psi = tent1(0.3, 1.2);
  const Box<1> B = interval(0.0, 500.0);
  const auto c0 = correlation(fibonacci_model_set(), phi, phi, 0.0, B);
  EXPECT_FALSE(c0.truncated);
  EXPECT_GE(c0.value.real(), 0.0);
  EXPECT_LT(std::abs(c0.value.imag()), 1e-15);
  const auto zero = lattice(1.0, WeightRule::constant, 0.0).produce(interval(-10.0, 510.0));
  EXPECT_EQ(correlation(zero, phi, psi, 1.0, B).value, cplx(0.0));
  // a comb cut short of the smeared box is flagged
  EXPECT_TRUE(correlation(lattice().produce(interval(0.0, 500.0)), phi, psi, 1.0, B).truncated);
}

TEST(Correlation, LatticeMatchesPairing) {
  const Box<1> B = interval(0.0, 2000.0);
  const auto comb = lattice().produce(interval(-20.0, 2020.0));
  const auto gamma = autocorrelation<1>(comb, B, 0.0, 10.0);
  const auto phi = tent1(0.0, 0.5), psi = tent1(0.2, 3.0);
  for (double t : t_grid(5)) {
    const cplx c = correlation(comb, phi, psi, t, B).value;
    const cplx p = pairing<1>(gamma, phi, psi, {t});
    EXPECT_LT(std::abs(c - p), 2e-2 * std::abs(p) + 1e-12) << t;
  }
}

TEST(Dworkin, CanonicalExamples) {
  const auto seq = default_van_hove<1>(100.0, 2.0, 5);
  const auto phi = tent1(0.0, 0.5), psi = tent1(0.0, 3.0);
  const auto ts = t_grid(5);
  EXPECT_LE(dworkin_identity_report(lattice(), phi, psi, ts, seq).max_rel_error, 2e-2);
  EXPECT_LE(dworkin_identity_report(fibonacci_model_set(), phi, psi, ts, seq).max_rel_error, 2e-2);
  const auto tm = dworkin_identity_report(thue_morse(), phi, psi, ts, seq);
  EXPECT_LE(tm.max_rel_error, 5e-2);
  EXPECT_FALSE(tm.truncated);
  // ψ = φ: the t = 0 value is a squared norm
  const auto self = dworkin_identity_report(fibonacci_model_set(), phi, phi, {0.0}, seq);
  EXPECT_GE(self.correlation[0].real(), -1e-9);
}

TEST(Weyl, TrivialCharacterIsMeanValue) {
  const auto phi = tent1(0.0, 0.5);
  const Box<1> B = interval(0.0, 10000.0);
  EXPECT_NEAR(weyl_sum(lattice(), phi, 0.0, B).value.real(), phi.integral().real(), 1e-9);
  const auto g = fibonacci_model_set();
  const cplx w = weyl_sum(g, phi, 0.0, B).value;
  EXPECT_NEAR(w.real(), g.density() * phi.integral().real(), 1e-3);
  EXPECT_LT(std::abs(w.imag()), 1e-12);
}

TEST(Weyl, MatchesDirectQuadrature) {
  // W_B(k) = (1/|B|) ∫_B e^{-2πikv} (φ * ω)(v) dv, integrated independently
  const auto phi = tent1(0.1, 0.7);
  const Box<1> B = interval(0.0, 60.0);
  const auto comb = fibonacci_model_set().produce(interval(-5.0, 65.0));
  for (double k : {0.0, 0.2764, 1.1}) {
    auto smear = [&](double v) {
      cplx s{0.0, 0.0};
      for (std::size_t i = 0; i < comb.size(); ++i) s += comb.weights[i] * phi({v - comb.points[i][0]});
      return s;
    };
    const cplx direct = integrate_piecewise<8>([&](double v) { return std::polar(1.0, -kTwoPi * k * v) * smear(v); },
                                               0.0, 60.0, {}, 0.01) /
                        60.0;
    EXPECT_LT(std::abs(weyl_sum(comb, phi, k, B).value - direct), 1e-6) << k;
  }
}

TEST(Weyl, RandomPhaseDecaysLikeInverseSqrtVolume) {
  const auto phi = tent1(0.0, 0.5);
  std::vector<double> lx, ly;
  for (double L : {1024.0, 4096.0, 16384.0, 65536.0}) {
    double acc = 0.0;
    int n = 0;
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto c = random_phase_comb(seed, L);
      for (double k : {0.137, 0.41, 0.73}) {
        acc += std::norm(weyl_sum(c, phi, k, interval(0.0, L)).value);
        ++n;
      }
    }
    lx.push_back(std::log(L));
    ly.push_back(0.5 * std::log(acc / n));
  }
  const double mx = (lx.front() + lx.back()) / 2.0;
  double sxy = 0.0, sxx = 0.0, my = 0.0;
  for (double y : ly) my += y / static_cast<double>(ly.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
  // and the mean square sits at the random-phase baseline scale
  const double base = weyl_baseline(1.0, phi, interval(0.0, 65536.0));
  EXPECT_GT(std::exp(2.0 * ly.back()), 0.1 * base);
  EXPECT_LT(std::exp(2.0 * ly.back()), 10.0 * base);
}

TEST(EigenGroup, LatticeIntegersAccepted) {
  const auto seq = default_van_hove<1>(128.0, 2.0, 5);
  auto sp = peak_scan(lattice(), seq, scan(-3.0, 3.0));
  sp.purity = 1.0;
  EigenGroupOptions o;
  o.floor = sp.floor;
  const std::vector<TestFunction<1>> probes{tent1(0.0, 0.25), tent1(0.0, 0.5), tent1(0.0, 1.0)};
  const auto rep = eigenvalue_group_check(sp, lattice(), probes, seq.boxes.back(), o);
  ASSERT_EQ(rep.generators.size(), 5u);
  for (double k : rep.generators) EXPECT_NEAR(k, std::round(k), 1e-9);
  ASSERT_EQ(rep.combinations.size(), 7u);  // -3..3
  for (const auto& c : rep.combinations) {
    EXPECT_TRUE(c.accepted) << c.k;
    EXPECT_TRUE(c.negation_accepted) << c.k;
  }
  EXPECT_EQ(rep.pairwise_pass_rate, 1.0);
  EXPECT_EQ(rep.negation_closure_rate, 1.0);
  // a non-integer is not an eigenvalue
  const auto nope = eigenvalue_group_check(sp, lattice(), probes, seq.boxes.back(), [] {
    EigenGroupOptions q;
    q.k_lo = 0.4;
    q.k_hi = 0.6;
    return q;
  }());
  EXPECT_TRUE(nope.combinations.empty() || !nope.combinations.front().accepted);
}

TEST(EigenGroup, FibonacciSumsAccepted) {
  const auto seq = default_van_hove<1>(100.0, 2.0, 6);
  auto sp = peak_scan(fibonacci_model_set(), seq, scan(-3.0, 3.0));
  const Box<1>& B = seq.boxes.back();
  const auto gamma = autocorrelation<1>(fibonacci_model_set().produce(interval(-10.0, B.hi[0] + 10.0)), B, 0.0, 4.0);
  purity(gamma, sp, tent1(0.0, 0.5));
  ASSERT_GE(sp.purity, 0.95);
  EigenGroupOptions o;
  o.floor = sp.floor;
  const std::vector<TestFunction<1>> probes{tent1(0.0, 0.25), tent1(0.0, 0.5), tent1(0.0, 1.0)};
  const auto rep = eigenvalue_group_check(sp, fibonacci_model_set(), probes, B, o);
  EXPECT_FALSE(rep.pairwise_sums.empty());
  EXPECT_GE(rep.pairwise_pass_rate, 0.95);
  EXPECT_EQ(rep.negation_closure_rate, 1.0);
}

TEST(EigenGroup, RequiresPurePoint) {
  const auto seq = default_van_hove<1>(128.0, 2.0, 4);
  auto sp = peak_scan(thue_morse(), seq, scan(-1.0, 1.0));
  sp.purity = 0.0;
  try {
    eigenvalue_group_check(sp, thue_morse(), {tent1(0.0, 0.5)}, seq.boxes.back(), {});
    FAIL() << "expected throw";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_pure_point);
  }
}

TEST(ZeroWindow, LatticeGapAndComplement) {
  const auto seq = default_van_hove<1>(1000.0, 2.0, 3);
  const auto phi = tent1(0.0, 0.5);
  const auto gap = spectral_measure_zero_check(lattice(), phi, 0.3, 0.7, seq);
  EXPECT_LE(gap.relative_mass(), 1e-2);
  EXPECT_GE(gap.relative_mass(), -1e-2);
  // a window around k = 1 carries the atom: ρ_{f_φ}(g) ≈ g(1) |φ̂(1)|² = |φ̂(1)|²
  const auto peak = spectral_measure_zero_check(lattice(), phi, 0.8, 1.2, seq);
  const double expect = std::norm(phi.fourier({1.0}));
  EXPECT_NEAR(peak.masses.back(), expect, 0.05 * expect);
}

TEST(ZeroWindow, ZeroComb) {
  const Box<1> B = interval(0.0, 1000.0);
  const auto gamma = autocorrelation<1>(lattice(1.0, WeightRule::constant, 0.0).produce(B), B, 0.0, 60.0);
  EXPECT_EQ(window_mass(gamma, tent1(0.0, 0.5), 0.3, 0.7, 50.0), 0.0);
}
