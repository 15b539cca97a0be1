#include <gtest/gtest.h>

#include <bit>
#include <set>

#include "aperiodica/generators.hpp"
#include "aperiodica/topology.hpp"

using namespace aperiodica;

namespace {

std::vector<double> xs_of(const WeightedComb<1>& c) {
  std::vector<double> v;
  for (const auto& p : c.points) v.push_back(p[0]);
  return v;
}

std::vector<Generator> canonical() {
  return {lattice(),
          lattice(0.5, WeightRule::alternating),
          fibonacci_model_set(),
          fibonacci_substitution(),
          thue_morse(),
          period_doubling(),
          perturbed_lattice(1.0, 0.2, DisplacementRule::iid, 3),
          perturbed_lattice(1.0, 0.2, DisplacementRule::quasiperiodic, 3),
          bernoulli_lattice(1.0, 0.4, 9)};
}

}  // namespace

TEST(Lattice, Examples) {
  const auto c = lattice().produce(interval(0.0, 4.0));
  EXPECT_EQ(xs_of(c), (std::vector<double>{0.0, 1.0, 2.0, 3.0}));
  for (const auto& w : c.weights) EXPECT_EQ(w, cplx(1.0));
  EXPECT_EQ(lattice(0.25).density(), 4.0);
  const auto alt = lattice(1.0, WeightRule::alternating).produce(interval(-2.0, 2.0));
  EXPECT_EQ(alt.weights, (std::vector<cplx>{1.0, -1.0, 1.0, -1.0}));
}

TEST(Generators, WindowConsistency) {
  for (const auto& g : canonical()) {
    const auto big = g.produce(interval(-150.0, 250.0));
    for (auto [a, b] : {std::pair{-100.0, 100.0}, std::pair{0.0, 37.5}, std::pair{-20.25, -3.0}}) {
      const auto small = g.produce(interval(a, b));
      const auto cut = restrict_to(big, interval(a, b));
      EXPECT_EQ(cut.points, small.points) << g.describe();
      EXPECT_EQ(cut.weights, small.weights) << g.describe();
    }
  }
}

TEST(Generators, PublishedTranslationBound) {
  for (const auto& g : canonical()) {
    const auto c = g.produce(interval(-200.0, 200.0));
    const auto rep = is_translation_bounded(c, g.translation_bound(), 0.01);
    EXPECT_TRUE(rep.bounded) << g.describe() << " worst " << rep.worst_value;
  }
}

TEST(CutAndProject, FibonacciGaps) {
  const auto c = fibonacci_model_set().produce(interval(0.0, 50.0));
  const double tau = kGolden.tau();
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double g = c.points[i][0] - c.points[i - 1][0];
    EXPECT_TRUE(std::abs(g - 1.0) < 1e-9 || std::abs(g - tau) < 1e-9) << g;
  }
}

TEST(CutAndProject, DensityStabilizes) {
  // |W| / covolume of the lattice {(x, x*)}: tau / sqrt(5).
  const double expected = kGolden.tau() / std::sqrt(5.0);
  const auto g = fibonacci_model_set();
  const double d3 = static_cast<double>(g.produce(interval(0.0, 1e3)).size()) / 1e3;
  const double d4 = static_cast<double>(g.produce(interval(0.0, 1e4)).size()) / 1e4;
  EXPECT_LT(std::abs(d3 - d4) / d4, 0.01);
  EXPECT_LT(std::abs(d4 - expected) / expected, 1e-3);
  EXPECT_NEAR(g.density(), expected, 1e-12);
}

TEST(CutAndProject, ExactCoordinatesStarInWindow) {
  const auto g = fibonacci_model_set();
  const auto qs = g.model_set_points(-30.0, 30.0);
  const auto c = g.produce(interval(-30.0, 30.0));
  ASSERT_EQ(qs.size(), c.size());
  for (const auto& q : qs) {
    EXPECT_GE(q.star_value(), -1.0 - 1e-12);
    EXPECT_LT(q.star_value(), kGolden.tau() - 1.0 + 1e-12);
  }
}

TEST(Substitution, FibonacciGapSequence) {
  const double tau = kGolden.tau();
  const auto c = fibonacci_substitution().produce(interval(0.0, 20.0));
  // fixed point abaababaabaab..., a -> tau, b -> 1
  const std::string word = "abaababaabaab";
  for (std::size_t i = 0; i < word.size(); ++i) {
    const double gap = c.points[i + 1][0] - c.points[i][0];
    EXPECT_NEAR(gap, word[i] == 'a' ? tau : 1.0, 1e-12) << i;
  }
  EXPECT_EQ(c.points[0][0], 0.0);
}

TEST(Substitution, ThueMorseIsPopcountParity) {
  const auto c = thue_morse().produce(interval(0.0, 4096.0));
  ASSERT_EQ(c.size(), 4096u);
  for (unsigned n = 0; n < 4096; ++n)
    EXPECT_EQ(c.weights[n].real(), std::popcount(n) % 2 == 0 ? 1.0 : -1.0) << n;
}

TEST(Substitution, ThueMorseMeanWeightDecays) {
  const auto g = thue_morse();
  for (int k = 4; k <= 16; k += 3) {
    const double L = std::ldexp(1.0, k);
    // shifted windows avoid the exact cancellation on [0, 2^k)
    const auto c = g.produce(interval(3.0, 3.0 + L));
    cplx s{0.0, 0.0};
    for (const auto& w : c.weights) s += w;
    EXPECT_LE(std::abs(s) / L, 4.0 * std::pow(2.0, -k / 2.0)) << k;
  }
}

TEST(Substitution, PeriodDoublingIsTwoAdicValuation) {
  const auto c = period_doubling().produce(interval(0.0, 2048.0));
  ASSERT_EQ(c.size(), 2048u);
  for (unsigned n = 0; n < 2048; ++n)
    EXPECT_EQ(c.weights[n].real(), std::countr_zero(n + 1) % 2 == 0 ? 1.0 : -1.0) << n;
}

TEST(Substitution, TwoSidedLayout) {
  const auto c = thue_morse().produce(interval(-8.0, 8.0));
  EXPECT_EQ(c.size(), 16u);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_EQ(c.points[i][0] - c.points[i - 1][0], 1.0);
}

TEST(PerturbedLattice, ZeroAmplitudeIsLattice) {
  for (auto rule : {DisplacementRule::iid, DisplacementRule::quasiperiodic}) {
    const auto c = perturbed_lattice(1.0, 0.0, rule, 4).produce(interval(-10.0, 10.0));
    EXPECT_EQ(c.points, lattice().produce(interval(-10.0, 10.0)).points);
  }
}

TEST(PerturbedLattice, UniformDiscreteness) {
  const double eps = 0.2;
  for (auto rule : {DisplacementRule::iid, DisplacementRule::quasiperiodic}) {
    const auto c = perturbed_lattice(1.0, eps, rule, 4).produce(interval(0.0, 2000.0));
    const auto rep = is_translation_bounded(c, {1.0, interval(-(1.0 - 2.0 * eps) / 2.0, (1.0 - 2.0 * eps) / 2.0)}, 0.01);
    EXPECT_TRUE(rep.bounded);
    for (std::size_t i = 0; i < c.size(); ++i)
      EXPECT_LE(std::abs(c.points[i][0] - std::round(c.points[i][0])), eps + 1e-12);
  }
}

TEST(PerturbedLattice, SeedsAreReproducibleAndDistinct) {
  const auto a = perturbed_lattice(1.0, 0.2, DisplacementRule::iid, 1).produce(interval(0.0, 50.0));
  const auto b = perturbed_lattice(1.0, 0.2, DisplacementRule::iid, 1).produce(interval(0.0, 50.0));
  const auto c = perturbed_lattice(1.0, 0.2, DisplacementRule::iid, 2).produce(interval(0.0, 50.0));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.points, c.points);
}

TEST(PerturbedLattice, IidIsNotFlc) {
  const auto c = perturbed_lattice(1.0, 0.2, DisplacementRule::iid, 7).produce(interval(0.0, 1e4));
  const FlcReport r = flc_check(support_of(c), 3.0, 1e-4);
  EXPECT_FALSE(r.flc);
  ASSERT_EQ(r.counts.size(), 3u);
  // every patch is new: counts track the number of interior points
  EXPECT_GT(r.counts[2], r.counts[1] * 3 / 2);
  EXPECT_GT(r.counts[1], r.counts[0] * 3 / 2);
}

TEST(BernoulliLattice, OccupationFraction) {
  const auto g = bernoulli_lattice(1.0, 0.3, 17);
  const double frac = static_cast<double>(g.produce(interval(0.0, 1e5)).size()) / 1e5;
  EXPECT_NEAR(frac, 0.3, 5e-3);  // ~3.5 standard deviations
}

TEST(Generators, InvalidSpecsRejected) {
  GeneratorSpec s;
  s.spacing = -1.0;
  EXPECT_THROW(Generator{s}, Error);
  EXPECT_THROW(perturbed_lattice(1.0, 0.6, DisplacementRule::iid, 0), Error);
  EXPECT_THROW(bernoulli_lattice(1.0, 1.5, 0), Error);
  EXPECT_THROW(cut_and_project_1d(kGolden, {1, 0, kGolden}, {0, 0, kGolden}), Error);
  EXPECT_THROW(substitution(SubstitutionRule::fibonacci, {1.0, 0.0}, {1.0, 1.0}), Error);
}

TEST(Generators, LatticeSpacingAndFrequencies) {
  EXPECT_EQ(*lattice(0.5).lattice_spacing(), 0.5);
  EXPECT_TRUE(thue_morse().lattice_spacing().has_value());
  EXPECT_FALSE(fibonacci_model_set().lattice_spacing().has_value());
  EXPECT_FALSE(fibonacci_substitution().lattice_spacing().has_value());
  const auto f = detail::letter_frequencies(SubstitutionRule::fibonacci);
  EXPECT_NEAR(f[0], 1.0 / kGolden.tau(), 1e-12);
  const auto p = detail::letter_frequencies(SubstitutionRule::period_doubling);
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-12);
}
