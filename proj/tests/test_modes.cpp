#include <gtest/gtest.h>

#include <random>

#include "cptwin/modes.hpp"
#include "support.hpp"

using namespace cptwin;
using fixtures::Slab;

namespace {

const stack::LayerStack& waveguide() {
  static const stack::LayerStack s = modes::waveguide_view(stack::build_reference_stack());
  return s;
}

}  // namespace

TEST(Modes, SlabAgreesWithAnalyticDispersionRelation) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 25; ++k) {
    const Slab slab = fixtures::random_slab(rng);
    const auto st = fixtures::slab_stack(slab);
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
      const auto expected = fixtures::slab_oracle(slab, 1520.0, pol);
      ASSERT_FALSE(expected.empty());
      const auto found = modes::guided_modes(st, 1520.0, pol);
      const double floor = std::max(slab.n_cover, slab.n_sub);
      for (std::size_t m = 0; m < expected.size(); ++m) {
        if (expected[m] - floor < 1e-5) continue;  // too close to cutoff to resolve
        ASSERT_LT(m, found.size()) << "slab " << k;
        EXPECT_NEAR(found[m].n_eff, expected[m], 1e-8) << "slab " << k << " order " << m;
        EXPECT_EQ(found[m].order, static_cast<int>(m));
      }
    }
  }
}

TEST(Modes, SymmetricSlabAlwaysGuidesFundamental) {
  Slab s{3.0, 3.01, 3.0, 50.0};
  EXPECT_NO_THROW(modes::fundamental_mode(fixtures::slab_stack(s), 1520.0, Polarization::TE));
}

TEST(Modes, AsymmetricSlabBelowCutoff) {
  Slab s{1.0, 3.1, 3.0, 10.0};
  try {
    modes::guided_modes(fixtures::slab_stack(s), 1520.0, Polarization::TE);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoGuidedMode);
  }
}

TEST(Modes, NonGuidingStack) {
  Slab s{1.0, 2.5, 3.0, 500.0};
  try {
    modes::guided_modes(fixtures::slab_stack(s), 1520.0, Polarization::TE);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonGuidingStack);
  }
}

TEST(Modes, OrderEqualsNodeCount) {
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    const auto found = modes::guided_modes(waveguide(), 1520.0, pol);
    ASSERT_GE(found.size(), 2u);
    const modes::ModeProblem p(waveguide(), 1520.0, pol);
    for (std::size_t m = 0; m < found.size(); ++m) {
      EXPECT_EQ(p.count_nodes(found[m].n_eff), static_cast<int>(m));
      EXPECT_LT(found[m].residual, 1e-9);
      if (m > 0) {
        EXPECT_LT(found[m].n_eff, found[m - 1].n_eff);
      }
      EXPECT_GT(found[m].n_eff, p.lower_bound());
      EXPECT_LT(found[m].n_eff, p.upper_bound());
    }
  }
}

TEST(Modes, HintedSearchMatchesFullScan) {
  const modes::ModeProblem p(waveguide(), 1500.0, Polarization::TM);
  const double full = modes::fundamental_mode(p).n_eff;
  for (double hint : {full, full + 3e-3, full - 3e-3, 3.0}) {
    EXPECT_DOUBLE_EQ(modes::fundamental_mode(p, hint).n_eff, full) << hint;
  }
}

TEST(Modes, ReferenceWaveguide) {
  // Engine regression values for the reference structure at 1520 nm.
  const double te = modes::fundamental_mode(waveguide(), 1520.0, Polarization::TE).n_eff;
  const double tm = modes::fundamental_mode(waveguide(), 1520.0, Polarization::TM).n_eff;
  EXPECT_NEAR(te, 3.0966558910, 1e-8);
  EXPECT_NEAR(tm, 3.0846365284, 1e-8);
  EXPECT_NEAR(modes::birefringence(waveguide(), 1520.0), te - tm, 1e-15);
  EXPECT_GT(te - tm, 0.0);
}

TEST(Modes, GroupIndexExceedsPhaseIndex) {
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    const double n = modes::fundamental_mode(waveguide(), 1520.0, pol).n_eff;
    const double ng = modes::mode_group_index(waveguide(), 1520.0, pol);
    EXPECT_GT(ng, n);
    EXPECT_LT(ng, 4.0);
  }
}

TEST(Modes, ProfileIsNormalized) {
  const modes::ModeProblem p(waveguide(), 1520.0, Polarization::TE);
  const auto m = modes::fundamental_mode(p);
  const auto prof = p.profile(m.n_eff);
  double peak = 0.0;
  for (double a : prof.amplitude) peak = std::max(peak, std::abs(a));
  EXPECT_NEAR(peak, 1.0, 1e-12);
}

TEST(Modes, WaveguideViewUsesLowCladding) {
  EXPECT_DOUBLE_EQ(waveguide().substrate.composition->x(), 0.90);
}

TEST(Modes, BirefringenceVanishesInBulkLimit) {
  double prev = 1.0;
  for (double t : {1000.0, 3000.0, 9000.0}) {
    const double d = std::abs(modes::birefringence(fixtures::slab_stack({3.0, 3.2, 3.0, t}), 1520.0));
    EXPECT_LT(d, prev) << t;
    prev = d;
  }
  EXPECT_LT(prev, 1e-4);
}

TEST(Modes, BirefringenceIsSmooth) {
  const double slope = std::abs(modes::birefringence(waveguide(), 1521.0) - modes::birefringence(waveguide(), 1519.0)) / 2.0;
  const double span = std::abs(modes::birefringence(waveguide(), 1530.0) - modes::birefringence(waveguide(), 1510.0));
  EXPECT_LT(span, 10.0 * slope * 20.0);
  const double dn = modes::birefringence(waveguide(), 1520.0);
  EXPECT_GT(std::abs(dn), 1e-4);
}

TEST(Modes, GroupIndexConvergesWithStep) {
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    const double a = modes::mode_group_index(waveguide(), 1520.0, pol, 0, 0.1);
    const double b = modes::mode_group_index(waveguide(), 1520.0, pol, 0, 0.05);
    EXPECT_LT(std::abs(a - b), 1e-6);
    EXPECT_GT(a, 3.0);
  }
  EXPECT_NE(modes::mode_group_index(waveguide(), 1520.0, Polarization::TE),
            modes::mode_group_index(waveguide(), 1520.0, Polarization::TM));
}

TEST(Modes, ModeCountFallsWithWavelength) {
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    std::size_t prev = 1000;
    for (double l = 1300.0; l <= 1900.0; l += 50.0) {
      const auto n = modes::guided_modes(waveguide(), l, pol).size();
      EXPECT_LE(n, prev) << l;
      prev = n;
    }
  }
}
