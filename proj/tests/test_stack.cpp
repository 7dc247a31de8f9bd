#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cptwin/stack.hpp"

using namespace cptwin;
using materials::Composition;
using stack::LayerStack;

namespace {

const LayerStack& reference() {
  static const LayerStack s = stack::build_reference_stack();
  return s;
}

// (H L)^N quarter-wave mirror at lambda on a fixed-index substrate.
LayerStack mirror(int pairs, double lambda, double n_sub) {
  LayerStack s;
  const Composition h(0.35), l(0.90);
  for (int k = 0; k < pairs; ++k) {
    s.layers.push_back({h, stack::quarter_wave_nm(lambda, h, s.model), 0});
    s.layers.push_back({l, stack::quarter_wave_nm(lambda, l, s.model), 0});
  }
  s.substrate = stack::Medium::fixed(n_sub);
  return s;
}

}  // namespace

TEST(Stack, QuarterWaveMirrorMatchesClosedForm) {
  const double nh = materials::refractive_index(Composition(0.35), 760.0);
  const double nl = materials::refractive_index(Composition(0.90), 760.0);
  for (int pairs = 1; pairs <= 41; ++pairs) {
    const auto r = stack::stack_response(mirror(pairs, 760.0, 3.69), 760.0, 0.0, Polarization::TE);
    // Admittance of the stack seen from air, written out independently.
    const double y = std::pow(nh / nl, 2 * pairs) * 3.69;
    const double expected = std::pow((1.0 - y) / (1.0 + y), 2);
    EXPECT_NEAR(r.reflectance, expected, 1e-9) << pairs;
    EXPECT_NEAR(expected, stack::quarter_wave_reflectance(1.0, nh, nl, 3.69, pairs), 1e-15);
  }
}

TEST(Stack, EnergyConservation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(720.0, 1900.0), th(-70.0, 70.0);
  for (int k = 0; k < 60; ++k) {
    for (const auto pol : {Polarization::TE, Polarization::TM}) {
      const double l = lam(rng), t = th(rng);
      const auto r = stack::stack_response(reference(), l, t, pol);
      EXPECT_NEAR(r.reflectance + r.transmittance, 1.0, 1e-9) << l << " " << t;
    }
  }
}

TEST(Stack, TransmittanceIsReciprocal) {
  const auto& s = reference();
  const double n_sub = s.substrate.fixed_index;
  const auto back = stack::reversed(s, n_sub, stack::Medium::fixed(s.ambient_index));
  for (double theta : {0.0, 20.0, 45.0}) {
    const double theta_back = std::asin(std::sin(theta * std::numbers::pi / 180.0) / n_sub) * 180.0 / std::numbers::pi;
    for (double l : {745.0, 760.0, 900.0, 1520.0}) {
      for (const auto pol : {Polarization::TE, Polarization::TM}) {
        const double tf = stack::stack_response(s, l, theta, pol).transmittance;
        const double tb = stack::stack_response(back, l, theta_back, pol).transmittance;
        EXPECT_NEAR(tf, tb, 1e-9 * std::max(1.0, tf));
      }
    }
  }
}

TEST(Stack, CascadeConsistency) {
  const auto& s = reference();
  const std::size_t n = s.layers.size();
  for (std::size_t split : {std::size_t{1}, std::size_t{36}, std::size_t{45}, n - 1}) {
    const auto a = stack::characteristic_matrix(s, 0, split, 1520.0, 10.0, Polarization::TM);
    const auto b = stack::characteristic_matrix(s, split, n, 1520.0, 10.0, Polarization::TM);
    const auto full = stack::characteristic_matrix(s, 0, n, 1520.0, 10.0, Polarization::TM);
    const auto ab = a * b;
    for (std::size_t k = 0; k < 4; ++k) EXPECT_LT(std::abs(ab.m[k] - full.m[k]), 1e-9 * (1.0 + std::abs(full.m[k])));
  }
}

TEST(Stack, UnimodularLayerMatrices) {
  const auto m = stack::characteristic_matrix(reference(), 0, reference().layers.size(), 760.0, 0.0, Polarization::TE);
  const auto det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  EXPECT_NEAR(det.real(), 1.0, 1e-8);
  EXPECT_NEAR(det.imag(), 0.0, 1e-8);
}

TEST(Stack, FluxIsConstantThroughLosslessStack) {
  for (const auto pol : {Polarization::TE, Polarization::TM}) {
    const auto f = stack::field_profile(reference(), 760.0, 15.0, pol);
    const auto r = stack::stack_response(reference(), 760.0, 15.0, pol);
    const double ref = f.flux(0);
    EXPECT_GT(ref, 0.0);
    for (std::size_t i = 0; i < f.field.size(); ++i) EXPECT_NEAR(f.flux(i), ref, 1e-8 * ref);
    // Normalized to the incident flux the constant is the transmittance.
    const double y0 = std::cos(15.0 * std::numbers::pi / 180.0);
    const double incident = pol == Polarization::TE ? y0 : 1.0 / y0;
    EXPECT_NEAR(ref / incident, r.transmittance, 1e-8);
  }
}

TEST(Stack, ReferenceStructure) {
  const auto& s = reference();
  EXPECT_EQ(s.layers.size(), 127u);
  EXPECT_EQ(s.region(stack::kTopDbr).end - s.region(stack::kTopDbr).begin, 36u);
  EXPECT_EQ(s.region(stack::kCore).end - s.region(stack::kCore).begin, 9u);
  EXPECT_EQ(s.region(stack::kBottomDbr).end - s.region(stack::kBottomDbr).begin, 82u);
  EXPECT_NEAR(s.total_thickness_nm(), 7906.3, 0.1);
  const auto& core = s.region(stack::kCore);
  EXPECT_DOUBLE_EQ(s.layers[core.begin].composition.x(), 0.25);
  EXPECT_DOUBLE_EQ(s.layers[core.end - 1].composition.x(), 0.25);
  EXPECT_EQ(s.layers[core.begin].nonlinear_sign, 1);
  EXPECT_EQ(s.layers[core.begin + 1].nonlinear_sign, -1);
  EXPECT_NO_THROW(stack::validate(s));
}

TEST(Stack, ResonanceNearPumpDesign) {
  const auto res = stack::find_resonance(reference(), 740.0, 780.0, 0.0, Polarization::TE);
  EXPECT_NEAR(res.lambda_nm, 760.0, 0.5);
  EXPECT_GT(res.finesse, 100.0);
  EXPECT_GT(res.t_up, res.t_down);
  EXPECT_GT(res.peak_core_enhancement, 1.0);
  EXPECT_NEAR(res.finesse, res.free_spectral_range_nm / res.fwhm_nm, 1e-9 * res.finesse);
  // Engine regression values.
  EXPECT_NEAR(res.lambda_nm, 760.0002, 1e-3);
  EXPECT_NEAR(res.finesse, 682.8, 1.0);
}

TEST(Stack, NoResonanceInsideStopBand) {
  try {
    stack::find_resonance(reference(), 762.0, 764.0, 0.0, Polarization::TE);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoResonanceInWindow);
  }
}

TEST(Stack, ValidationRejectsBadStacks) {
  LayerStack empty;
  EXPECT_THROW(stack::validate(empty), Error);

  auto s = reference();
  s.layers[3].thickness_nm = -1.0;
  EXPECT_THROW(stack::validate(s), Error);

  s = reference();
  s.layers[0].nonlinear_sign = 2;
  EXPECT_THROW(stack::validate(s), Error);

  s = reference();
  const auto& core = s.region(stack::kCore);
  s.layers[core.begin + 1].nonlinear_sign = 1;
  EXPECT_THROW(stack::validate(s), Error);

  s = reference();
  s.regions[1].periods = 5.0;
  EXPECT_THROW(stack::validate(s), Error);
}

TEST(Stack, DesignParamsRejected) {
  stack::DesignParams p;
  p.core_high_x = 1.5;
  try {
    stack::build_reference_stack(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidDesignParams);
  }
}

TEST(Stack, AngleOutOfRange) {
  EXPECT_THROW(stack::stack_response(reference(), 760.0, 90.0, Polarization::TE), Error);
}

TEST(Stack, SingleInterfaceIsFresnel) {
  LayerStack s;
  s.layers.push_back({Composition(0.35), 123.0, 0});
  s.substrate = stack::Medium::alloy(0.35);
  for (double l : {760.0, 1520.0}) {
    const double n = materials::refractive_index(Composition(0.35), l);
    const auto r = stack::stack_response(s, l, 0.0, Polarization::TE);
    EXPECT_NEAR(r.reflectance, std::pow((1.0 - n) / (1.0 + n), 2), 1e-12);
  }
}

TEST(Stack, MatchedMediaGiveUniformField) {
  LayerStack s;
  s.layers.push_back({Composition(0.35), 500.0, 0});
  s.substrate = stack::Medium::alloy(0.35);
  s.ambient_index = materials::refractive_index(Composition(0.35), 1520.0);
  const auto f = stack::field_profile(s, 1520.0, 0.0, Polarization::TE);
  for (std::size_t i = 0; i < f.field.size(); ++i) EXPECT_NEAR(std::abs(f.field[i]), 1.0, 1e-12);
}

TEST(Stack, FieldContinuousAcrossInterfaces) {
  const auto f = stack::field_profile(reference(), 760.0, 0.0, Polarization::TM);
  for (std::size_t i = 1; i < f.field.size(); ++i) {
    if (f.layer[i] == f.layer[i - 1]) continue;
    EXPECT_LT(std::abs(f.field[i] - f.field[i - 1]), 1e-8 * (1.0 + std::abs(f.field[i])));
    EXPECT_LT(std::abs(f.magnetic[i] - f.magnetic[i - 1]), 1e-8 * (1.0 + std::abs(f.magnetic[i])));
  }
}

TEST(Stack, LowIndexMirrorLayersAreThicker) {
  const auto& s = reference();
  const auto& top = s.region(stack::kTopDbr);
  for (std::size_t j = top.begin; j < top.end; j += 2) {
    EXPECT_GT(s.layers[j + 1].thickness_nm, s.layers[j].thickness_nm);
  }
}

TEST(Stack, ResonanceIsLocal) {
  const auto wide = stack::find_resonance(reference(), 740.0, 780.0, 0.0, Polarization::TE);
  const auto narrow = stack::find_resonance(reference(), wide.lambda_nm - 5.0, wide.lambda_nm + 5.0, 0.0, Polarization::TE);
  EXPECT_NEAR(narrow.lambda_nm, wide.lambda_nm, 1e-3);
  EXPECT_GT(wide.peak_core_enhancement, 10.0);
}
