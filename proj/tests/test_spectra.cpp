#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cptwin/spectra.hpp"

using namespace cptwin;
using phasematch::Interaction;

namespace {

const phasematch::WaveguideIndex& device() {
  static const phasematch::WaveguideIndex idx(stack::build_reference_stack());
  return idx;
}

spectra::Spectrum gaussian(double centre, double fwhm, double lo, double hi, double step) {
  auto s = spectra::blank_spectrum(lo, hi, step);
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double u = (s.lambda_nm[k] - centre) / sigma;
    s.intensity[k] = std::exp(-0.5 * u * u);
  }
  return s;
}

const spectra::Spectrum& figure_spectrum() {
  static const spectra::Spectrum s = [] {
    spectra::FluorescenceOptions o;
    o.noise_floor = 0.02;
    return spectra::fluorescence_spectrum(3.1, 759.5, 1.0, device(), o);
  }();
  return s;
}

}  // namespace

TEST(Spectra, SincSquaredHalfWidth) {
  const double x = spectra::kSincSquaredHalfWidth;
  EXPECT_NEAR(std::pow(spectra::sinc(x), 2), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(spectra::sinc(0.0), 1.0);
}

TEST(Spectra, LinearizedWidthMatchesClosedForm) {
  for (double g : {6.4, 0.0157, -0.3}) {
    for (double l : {0.5, 1.0, 3.0}) {
      const auto s = spectra::linearized_spectrum(1520.0, g, l);
      // Half-width in 1/lambda, mapped back to wavelength without linearizing.
      const double half_nu = spectra::kSincSquaredHalfWidth / (std::numbers::pi * std::abs(g) * l * spectra::kNmPerMm);
      const double expected = 1.0 / (1.0 / 1520.0 - half_nu) - 1.0 / (1.0 / 1520.0 + half_nu);
      EXPECT_NEAR(spectra::fwhm(s), expected, 2e-3 * expected) << g << " " << l;
    }
  }
}

TEST(Spectra, GaussianConvolutionAddsInQuadrature) {
  const auto s = gaussian(1520.0, 0.4, 1515.0, 1525.0, 0.002);
  for (double k : {0.1, 0.3, 0.8}) {
    const auto c = spectra::convolve(s, {k, "test"});
    EXPECT_NEAR(spectra::fwhm(c), std::hypot(0.4, k), 1e-4) << k;
    EXPECT_NEAR(c.integral(), s.integral(), 1e-9 * s.integral());
    ASSERT_EQ(c.meta.kernels.size(), 1u);
  }
}

TEST(Spectra, KernelMustBeResolved) {
  const auto s = gaussian(1520.0, 0.4, 1515.0, 1525.0, 0.1);
  try {
    spectra::convolve(s, {0.15, ""});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KernelUnderResolved);
  }
}

TEST(Spectra, FwhmErrors) {
  auto s = gaussian(1520.0, 5.0, 1519.0, 1521.0, 0.01);
  try {
    spectra::fwhm(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HalfMaxNotBracketed);
  }
  auto twin = spectra::blank_spectrum(0.0, 10.0, 1.0);
  twin.intensity = {0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0};
  try {
    spectra::fwhm(twin);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoPeak);
  }
}

TEST(Spectra, FindPeaksUsesProminence) {
  auto s = spectra::blank_spectrum(0.0, 12.0, 1.0);
  s.intensity = {0, 5, 0, 0.5, 0.4, 0.5, 0, 3, 2.9, 2.95, 1, 0, 0};
  const auto all = spectra::find_peaks(s, 0.0);
  const auto strong = spectra::find_peaks(s, 1.0);
  EXPECT_EQ(all.size(), 5u);
  ASSERT_EQ(strong.size(), 2u);
  EXPECT_DOUBLE_EQ(strong[0].lambda_nm, 1.0);
  EXPECT_DOUBLE_EQ(strong[1].lambda_nm, 7.0);
}

TEST(Spectra, PhaseMatchingPeakAtSolution) {
  const auto pt = phasematch::solve_pair(3.1, 759.5, Interaction::one(), device());
  EXPECT_NEAR(spectra::phase_matching_intensity(pt.lambda_s_nm, spectra::Branch::Copropagating, 3.1, 759.5,
                                                Interaction::one(), 1.0, device()),
              1.0, 1e-12);
  EXPECT_NEAR(spectra::phase_matching_intensity(pt.lambda_i_nm, spectra::Branch::Counterpropagating, 3.1, 759.5,
                                                Interaction::one(), 1.0, device()),
              1.0, 1e-12);
}

TEST(Spectra, BandwidthNarrowsWithLength) {
  const auto pt = phasematch::solve_pair(3.1, 759.5, Interaction::one(), device());
  const auto grid = spectra::uniform_grid(pt.lambda_s_nm - 1.0, pt.lambda_s_nm + 1.0, 0.002);
  const double w1 = spectra::fwhm(spectra::phase_matching_spectrum(3.1, 759.5, Interaction::one(), 1.0, device(), grid));
  const double w2 = spectra::fwhm(spectra::phase_matching_spectrum(3.1, 759.5, Interaction::one(), 2.0, device(), grid));
  EXPECT_GT(w1, 0.15);
  EXPECT_LT(w1, 0.45);
  EXPECT_NEAR(w2 / w1, 0.5, 0.01);
}

TEST(Spectra, FigureSpectrumHasFourEnergyMatchedPeaks) {
  const auto& s = figure_spectrum();
  const auto peaks = spectra::fluorescence_peaks(s);
  ASSERT_EQ(peaks.size(), 4u);
  // Outer pair and inner pair each sum to the pump frequency.
  const double nu_p = 1.0 / 759.5;
  EXPECT_NEAR((1.0 / peaks[0].lambda_nm + 1.0 / peaks[3].lambda_nm) / nu_p, 1.0, 1e-5);
  EXPECT_NEAR((1.0 / peaks[1].lambda_nm + 1.0 / peaks[2].lambda_nm) / nu_p, 1.0, 1e-5);
  // Lines beyond the degenerate wavelength carry the facet attenuation.
  EXPECT_LT(peaks[2].intensity, 0.5 * peaks[1].intensity);
  for (double v : s.intensity) EXPECT_GE(v, 0.02 - 1e-12);
}

TEST(Spectra, DegenerateAngleMergesInteractionLines) {
  const double t1 = phasematch::degeneracy_angle(Interaction::one(), 759.5, device());
  spectra::FluorescenceOptions o;
  o.include_interaction_2 = false;
  const auto s = spectra::fluorescence_spectrum(t1, 759.5, 1.0, device(), o);
  const auto peaks = spectra::fluorescence_peaks(s);
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_NEAR(peaks[0].lambda_nm, 2.0 * 759.5, 0.01);
}

TEST(Spectra, Deterministic) {
  spectra::FluorescenceOptions o;
  o.noise_floor = 0.02;
  const auto again = spectra::fluorescence_spectrum(3.1, 759.5, 1.0, device(), o);
  EXPECT_EQ(again.lambda_nm, figure_spectrum().lambda_nm);
  EXPECT_EQ(again.intensity, figure_spectrum().intensity);
}

TEST(Spectra, NarrowKernelIsNearIdentity) {
  const auto s = gaussian(1520.0, 0.4, 1515.0, 1525.0, 0.002);
  const auto c = spectra::convolve(s, {2.0 * 0.002, "delta"});
  for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(c.intensity[k], s.intensity[k], 0.02);
  EXPECT_NEAR(spectra::fwhm(gaussian(1520.0, 0.37, 1515.0, 1525.0, 0.001)), 0.37, 0.005 * 0.37);
}

TEST(Spectra, ConvolutionKeepsSignAndWidens) {
  const auto pt = phasematch::solve_pair(3.1, 759.5, Interaction::one(), device());
  const auto line = spectra::phase_matching_spectrum(3.1, 759.5, Interaction::one(), 1.0, device(),
                                                     spectra::uniform_grid(pt.lambda_s_nm - 8.0, pt.lambda_s_nm + 8.0, 0.005));
  const auto pumped = spectra::convolve(line, {0.3, "pump"});
  const auto both = spectra::convolve(pumped, {0.1, "monochromator"});
  for (double v : both.intensity) EXPECT_GE(v, 0.0);
  EXPECT_NEAR(both.integral(), line.integral(), 1e-3 * line.integral());
  const double w = spectra::fwhm(both);
  EXPECT_GE(w, spectra::fwhm(line));
  EXPECT_GE(w, 0.3);
  EXPECT_GE(w, spectra::fwhm(pumped));
  // Same scale as the spectral width seen in the two-photon interference fit.
  EXPECT_NEAR(w, 0.53, 0.15);
}

TEST(Spectra, SingleInteractionGivesTwoPeaks) {
  spectra::FluorescenceOptions o;
  o.include_interaction_2 = false;
  const auto s = spectra::fluorescence_spectrum(3.1, 759.5, 1.0, device(), o);
  const auto peaks = spectra::fluorescence_peaks(s);
  ASSERT_EQ(peaks.size(), 2u);
  EXPECT_NEAR(1.0 / peaks[0].lambda_nm + 1.0 / peaks[1].lambda_nm, 1.0 / 759.5, 2e-8);
}
