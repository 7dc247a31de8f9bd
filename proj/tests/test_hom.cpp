#include <gtest/gtest.h>

#include <cmath>

#include "cptwin/hom.hpp"

using namespace cptwin;

namespace {

const hom::CoincidenceRates& rates() {
  static const hom::CoincidenceRates r = hom::rates_from_chain({});
  return r;
}

}  // namespace

TEST(Hom, VisibilityFromFacetReflectance) {
  EXPECT_NEAR(hom::visibility_from_reflectivity(0.30), 0.847, 1e-3);
  EXPECT_DOUBLE_EQ(hom::visibility_from_reflectivity(0.0), 1.0);
  EXPECT_THROW(hom::visibility_from_reflectivity(1.0), Error);
}

TEST(Hom, DipShape) {
  const hom::DipModel m;
  EXPECT_NEAR(hom::dip_value(m, 0.0), 0.15, 1e-15);
  EXPECT_NEAR(hom::dip_value(m, 50.0), 1.0, 1e-12);
  const double w = hom::dip_fwhm_mm(m.lambda_nm, m.delta_lambda_nm);
  EXPECT_NEAR(w, 1.9236, 1e-4);
  // Half depth at half the width.
  EXPECT_NEAR(hom::dip_value(m, 0.5 * w), 1.0 - 0.5 * m.visibility, 1e-12);
  EXPECT_NEAR(hom::dip_value(m, -0.5 * w), 1.0 - 0.5 * m.visibility, 1e-12);
}

TEST(Hom, NoiselessRoundTrip) {
  const hom::DipModel truth;
  const auto scan = hom::expected_scan(truth, rates(), hom::scan_positions(), 1e9);
  const auto fit = hom::fit_dip(scan, truth.lambda_nm);
  EXPECT_NEAR(fit.visibility, 0.85, 1e-6);
  EXPECT_NEAR(fit.delta_lambda_nm, 0.53, 1e-6);
  EXPECT_TRUE(fit.converged);
}

TEST(Hom, SeedReproducibility) {
  const hom::DipModel truth;
  const auto pos = hom::scan_positions();
  const auto a = hom::simulate_scan(truth, rates(), pos, 60.0, 42);
  const auto b = hom::simulate_scan(truth, rates(), pos, 60.0, 42);
  const auto c = hom::simulate_scan(truth, rates(), pos, 60.0, 43);
  bool differs = false;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    EXPECT_EQ(a.points[i].total, b.points[i].total);
    EXPECT_EQ(a.points[i].accidental, b.points[i].accidental);
    differs |= a.points[i].total != c.points[i].total;
  }
  EXPECT_TRUE(differs);
}

TEST(Hom, ResidualsAreUnitScale) {
  // Poisson weights: the reduced chi-square averages near one.
  const auto cal = hom::calibrate(hom::DipModel{}, rates(), hom::scan_positions(), 60.0, 40, 1000);
  EXPECT_EQ(cal.failures, 0u);
  EXPECT_NEAR(cal.reduced_chi_square_mean, 1.0, 0.25);
  EXPECT_NEAR(cal.visibility_mean, 0.85, 0.03);
  EXPECT_NEAR(cal.delta_lambda_mean_nm, 0.53, 0.05);
}

TEST(Hom, FlatScanIsDegenerate) {
  hom::HomScan scan;
  for (int k = -8; k <= 8; ++k) scan.points.push_back({static_cast<double>(k), 500, 10});
  try {
    hom::fit_dip(scan, 1520.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateScan);
  }
}

TEST(Hom, NarrowScanHasNoBaseline) {
  const hom::DipModel truth;
  const auto scan = hom::expected_scan(truth, rates(), hom::scan_positions(3.0, 25), 1e6);
  EXPECT_THROW(hom::fit_dip(scan, truth.lambda_nm), Error);
}

TEST(Hom, ScanValidation) {
  hom::HomScan scan;
  scan.points = {{0.0, 10, 1}, {-1.0, 10, 1}};
  EXPECT_THROW(hom::validate(scan), Error);
  scan.points = {{0.0, -1, 1}};
  EXPECT_THROW(hom::validate(scan), Error);
  EXPECT_THROW(hom::scan_positions(5.0, 1), Error);
  EXPECT_THROW(hom::validate(hom::DipModel{1.5, 1520.0, 0.53}), Error);
}

TEST(Hom, DipIsEvenAndBounded) {
  for (double v : {0.0, 0.3, 0.85, 1.0}) {
    const hom::DipModel m{v, 1520.0, 0.53};
    for (double dz = 0.0; dz < 10.0; dz += 0.137) {
      const double a = hom::dip_value(m, dz);
      EXPECT_EQ(a, hom::dip_value(m, -dz));
      EXPECT_GE(a, 1.0 - v - 1e-15);
      EXPECT_LE(a, 1.0);
    }
  }
  // Recovered outside about 3 mm.
  EXPECT_GT(hom::dip_value(hom::DipModel{}, 3.0), 0.99);
}

TEST(Hom, VisibilityFallsWithReflectance) {
  double prev = 2.0;
  for (double r = 0.0; r < 0.99; r += 0.05) {
    const double v = hom::visibility_from_reflectivity(r);
    EXPECT_LT(v, prev);
    prev = v;
  }
  const double v = hom::visibility_from_reflectivity(0.30);
  EXPECT_GE(v, 0.82);
  EXPECT_LE(v, 0.88);
}

TEST(Hom, SimulationMatchesExpectation) {
  const auto pos = hom::scan_positions();
  for (double vis : {0.0, 0.85}) {
    const hom::DipModel m{vis, 1520.0, 0.53};
    std::vector<double> sum(pos.size(), 0.0), chi(pos.size(), 0.0);
    const int runs = 100;
    for (int s = 0; s < runs; ++s) {
      const auto scan = hom::simulate_scan(m, rates(), pos, 60.0, 500 + s);
      for (std::size_t i = 0; i < pos.size(); ++i) {
        const double mu = hom::expected_total(m, rates(), pos[i], 60.0);
        const double k = static_cast<double>(scan.points[i].total);
        sum[i] += k;
        chi[i] += (k - mu) * (k - mu) / mu;
      }
    }
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const double mu = hom::expected_total(m, rates(), pos[i], 60.0);
      EXPECT_LT(std::abs(sum[i] / runs - mu), 4.0 * std::sqrt(mu / runs)) << vis << " " << pos[i];
      EXPECT_GE(chi[i] / runs, 0.5);
      EXPECT_LE(chi[i] / runs, 2.0);
    }
  }
}
