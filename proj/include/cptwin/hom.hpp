#pragma once

// Hong-Ou-Mandel dip: analytic shape, facet-reflection visibility,
// Poisson simulation of a delay scan, and the two-parameter dip fit.
//
// Normalized coincidences versus optical path difference dz:
//
//   N_c(dz) = 1 - V exp( -(pi^2 / ln 2) (dz dlambda / lambda^2)^2 )
//
// with dlambda the FWHM of the spectral intensity at the degeneracy
// wavelength lambda.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <numbers>
#include <random>
#include <vector>

#include "cptwin/efficiency.hpp"
#include "cptwin/error.hpp"

namespace cptwin::hom {

inline constexpr double kNmPerMm = 1e6;

struct DipModel {
  double visibility = 0.85;
  double lambda_nm = 1520.0;
  double delta_lambda_nm = 0.53;
};

inline void validate(const DipModel& m) {
  if (!(m.visibility >= 0.0 && m.visibility <= 1.0) || !(m.delta_lambda_nm > 0.0) || !(m.lambda_nm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dip model needs 0 <= V <= 1, dlambda > 0, lambda > 0");
  }
}

namespace detail {

// Gaussian envelope exp(-a (dz dlambda)^2), a = pi^2 / (ln2 lambda^4), lengths in nm.
inline double envelope(double dz_nm, double lambda_nm, double delta_lambda_nm) {
  const double u = dz_nm * delta_lambda_nm / (lambda_nm * lambda_nm);
  return std::exp(-(std::numbers::pi * std::numbers::pi / std::numbers::ln2) * u * u);
}

}  // namespace detail

inline double dip_value(const DipModel& m, double delta_z_mm) {
  return 1.0 - m.visibility * detail::envelope(delta_z_mm * kNmPerMm, m.lambda_nm, m.delta_lambda_nm);
}

// Full width of the dip at half depth, in mm.
inline double dip_fwhm_mm(double lambda_nm, double delta_lambda_nm) {
  return 2.0 * (lambda_nm * lambda_nm / delta_lambda_nm) * (std::numbers::ln2 / std::numbers::pi) / kNmPerMm;
}

// Twice-reflected photons (probability 2 R^2 relative to direct ones) do not
// interfere.
inline double visibility_from_reflectivity(double reflectance) {
  if (!(reflectance >= 0.0 && reflectance < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "facet reflectance must lie in [0, 1)");
  }
  return 1.0 / (1.0 + 2.0 * reflectance * reflectance);
}

struct ScanPoint {
  double delta_z_mm = 0.0;
  std::int64_t total = 0;
  std::int64_t accidental = 0;
};

struct HomScan {
  std::vector<ScanPoint> points;
  double dwell_s = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const HomScan& scan) {
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    if (p.total < 0 || p.accidental < 0 || !std::isfinite(p.delta_z_mm)) {
      throw Error(ErrorCode::SchemaError, "scan counts must be non-negative integers");
    }
    if (i > 0 && !(p.delta_z_mm > scan.points[i - 1].delta_z_mm)) {
      throw Error(ErrorCode::SchemaError, "scan positions must be strictly increasing");
    }
  }
}

struct CoincidenceRates {
  double coincidence_hz = 0.0;  // true coincidences away from the dip
  double accidental_hz = 0.0;
};

inline CoincidenceRates rates_from_chain(const efficiency::DetectionChain& chain) {
  const auto b = efficiency::expected_counts(chain);
  return {b.true_coincidence_rate, b.accidental_rate};
}

// Uniform positions from -half_span to +half_span (mm).
inline std::vector<double> scan_positions(double half_span_mm = 8.0, std::size_t count = 25) {
  if (count < 2 || !(half_span_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "need >= 2 positions and a positive span");
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = -half_span_mm + 2.0 * half_span_mm * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return out;
}

// Expected total counts at dz: dwell (R_c N_c(dz) + R_a).
inline double expected_total(const DipModel& m, const CoincidenceRates& r, double delta_z_mm, double dwell_s) {
  return dwell_s * (r.coincidence_hz * dip_value(m, delta_z_mm) + r.accidental_hz);
}

inline HomScan simulate_scan(const DipModel& m, const CoincidenceRates& rates, const std::vector<double>& positions,
                             double dwell_s, std::uint64_t seed) {
  validate(m);
  if (!(dwell_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "dwell time must be positive");
  if (!std::is_sorted(positions.begin(), positions.end())) {
    throw Error(ErrorCode::InvalidArgument, "scan positions must be sorted");
  }
  std::mt19937_64 rng(seed);
  HomScan scan;
  scan.dwell_s = dwell_s;
  scan.seed = seed;
  const double mean_accidental = dwell_s * rates.accidental_hz;
  for (double dz : positions) {
    std::poisson_distribution<std::int64_t> total(expected_total(m, rates, dz, dwell_s));
    std::poisson_distribution<std::int64_t> accidental(mean_accidental);
    ScanPoint p;
    p.delta_z_mm = dz;
    p.total = total(rng);
    p.accidental = mean_accidental > 0.0 ? accidental(rng) : 0;
    scan.points.push_back(p);
  }
  validate(scan);
  return scan;
}

inline HomScan simulate_scan(const DipModel& m, const efficiency::DetectionChain& chain,
                             const std::vector<double>& positions, double dwell_s, std::uint64_t seed) {
  return simulate_scan(m, rates_from_chain(chain), positions, dwell_s, seed);
}

// Counts rounded from their expectations, no noise.
inline HomScan expected_scan(const DipModel& m, const CoincidenceRates& rates, const std::vector<double>& positions,
                             double dwell_s) {
  validate(m);
  HomScan scan;
  scan.dwell_s = dwell_s;
  for (double dz : positions) {
    scan.points.push_back({dz, std::llround(expected_total(m, rates, dz, dwell_s)),
                           std::llround(dwell_s * rates.accidental_hz)});
  }
  validate(scan);
  return scan;
}

// ---------------------------------------------------------------------------
// Fit

struct FitOptions {
  double lambda_grid_min_nm = 0.1;
  double lambda_grid_max_nm = 2.0;
  std::size_t lambda_grid_points = 191;
  double baseline_widths = 3.0;   // baseline points lie beyond this many dip FWHMs
  std::size_t min_baseline_points = 3;
  std::size_t min_points = 8;
  double relative_tolerance = 1e-8;
  int stable_iterations = 3;
  int max_iterations = 500;
};

struct FitResult {
  double visibility = 0.0;
  double delta_lambda_nm = 0.0;
  double visibility_error = 0.0;
  double delta_lambda_error_nm = 0.0;
  double chi_square = 0.0;
  double reduced_chi_square = 0.0;
  double baseline = 0.0;             // net counts per point outside the dip
  std::size_t baseline_points = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals;     // normalized, (data - model) / sigma
};

namespace detail {

struct NetData {
  std::vector<double> dz_nm;
  std::vector<double> net;
  std::vector<double> sigma;
};

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double chi_square(const NetData& d, double baseline, double lambda_nm, double v, double dl) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < d.net.size(); ++i) {
    const double model = 1.0 - v * envelope(d.dz_nm[i], lambda_nm, dl);
    const double r = (d.net[i] / baseline - model) / (d.sigma[i] / baseline);
    chi2 += r * r;
  }
  return chi2;
}

inline std::vector<double> baseline_values(const NetData& d, double lambda_nm, double dl, const FitOptions& opt) {
  const double width_nm = dip_fwhm_mm(lambda_nm, dl) * kNmPerMm;
  std::vector<double> out;
  for (std::size_t i = 0; i < d.net.size(); ++i) {
    if (std::abs(d.dz_nm[i]) > opt.baseline_widths * width_nm) out.push_back(d.net[i]);
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

// Weighted least squares of the dip shape on accidental-subtracted counts,
// normalized by the mean of the points far outside the dip.
inline FitResult fit_dip(const HomScan& scan, double lambda_nm, const FitOptions& opt = {}) {
  validate(scan);
  if (scan.points.size() < opt.min_points) {
    throw Error(ErrorCode::DegenerateScan, "need at least " + std::to_string(opt.min_points) + " scan points");
  }
  detail::NetData d;
  for (const auto& p : scan.points) {
    d.dz_nm.push_back(p.delta_z_mm * kNmPerMm);
    d.net.push_back(static_cast<double>(p.total - p.accidental));
    d.sigma.push_back(std::sqrt(std::max<double>(1.0, static_cast<double>(p.total + p.accidental))));
  }
  const std::size_t n = d.net.size();

  // Provisional baseline from the outer third of the scan by |dz|.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(d.dz_nm[a]) > std::abs(d.dz_nm[b]);
  });
  std::vector<double> outer;
  for (std::size_t k = 0; k < std::max<std::size_t>(3, n / 3); ++k) outer.push_back(d.net[order[k]]);
  const double outside = detail::median(outer);
  if (!(outside > 0.0)) throw Error(ErrorCode::DegenerateScan, "no net coincidences outside the dip");

  const auto imin = static_cast<std::size_t>(std::min_element(d.net.begin(), d.net.end()) - d.net.begin());
  double v0 = std::clamp(1.0 - d.net[imin] / outside, 0.0, 1.0);
  if (v0 < 3.0 * d.sigma[imin] / outside) {
    throw Error(ErrorCode::DegenerateScan, "dip depth not resolved above Poisson noise");
  }

  double dl0 = opt.lambda_grid_min_nm;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < opt.lambda_grid_points; ++k) {
    const double dl = opt.lambda_grid_min_nm + (opt.lambda_grid_max_nm - opt.lambda_grid_min_nm) *
                                                   static_cast<double>(k) /
                                                   static_cast<double>(opt.lambda_grid_points - 1);
    const double chi2 = detail::chi_square(d, outside, lambda_nm, v0, dl);
    if (chi2 < best) {
      best = chi2;
      dl0 = dl;
    }
  }

  FitResult fit;
  double v = v0, dl = dl0;
  // Normalize with the baseline implied by the current width; redo once
  // with the fitted width in case the baseline point set changes.
  for (int pass = 0; pass < 2; ++pass) {
    const auto base_pts = detail::baseline_values(d, lambda_nm, dl, opt);
    if (base_pts.size() < opt.min_baseline_points) {
      throw Error(ErrorCode::DegenerateScan, "fewer than " + std::to_string(opt.min_baseline_points) +
                                                 " points beyond " + std::to_string(opt.baseline_widths) +
                                                 " dip widths");
    }
    const double baseline = detail::mean(base_pts);
    if (!(baseline > 0.0)) throw Error(ErrorCode::DegenerateScan, "non-positive baseline");

    // Levenberg-Marquardt on (V, dlambda).
    const auto residuals_and_jacobian = [&](double vv, double ll, std::vector<double>& r,
                                            std::vector<std::array<double, 2>>& jac) {
      r.resize(n);
      jac.resize(n);
      const double a = std::numbers::pi * std::numbers::pi / (std::numbers::ln2 * std::pow(lambda_nm, 4));
      for (std::size_t i = 0; i < n; ++i) {
        const double s = d.sigma[i] / baseline;
        const double g = detail::envelope(d.dz_nm[i], lambda_nm, ll);
        r[i] = (d.net[i] / baseline - (1.0 - vv * g)) / s;
        // derivatives of the model divided by sigma
        jac[i] = {-g / s, vv * g * 2.0 * a * d.dz_nm[i] * d.dz_nm[i] * ll / s};
      }
    };
    double mu = 1e-3;
    std::vector<double> r;
    std::vector<std::array<double, 2>> jac;
    residuals_and_jacobian(v, dl, r, jac);
    double chi2 = 0.0;
    for (double x : r) chi2 += x * x;
    int stable = 0;
    bool converged = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
      double a00 = 0, a01 = 0, a11 = 0, g0 = 0, g1 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        a00 += jac[i][0] * jac[i][0];
        a01 += jac[i][0] * jac[i][1];
        a11 += jac[i][1] * jac[i][1];
        g0 += jac[i][0] * r[i];
        g1 += jac[i][1] * r[i];
      }
      bool accepted = false;
      for (int tries = 0; tries < 60 && !accepted; ++tries) {
        const double b00 = a00 * (1.0 + mu), b11 = a11 * (1.0 + mu);
        const double det = b00 * b11 - a01 * a01;
        if (det == 0.0) {
          mu *= 10.0;
          continue;
        }
        // Model = 1 - V g, residual = (data - model)/s, so J above is
        // d(model)/dp / s and the Gauss-Newton step is +(J^T J)^-1 J^T r.
        const double dv = (b11 * g0 - a01 * g1) / det;
        const double dd = (-a01 * g0 + b00 * g1) / det;
        const double v_new = v + dv;
        const double dl_new = dl + dd;
        if (!(dl_new > 0.0) || !std::isfinite(v_new)) {
          mu *= 10.0;
          continue;
        }
        std::vector<double> r_new;
        std::vector<std::array<double, 2>> jac_new;
        residuals_and_jacobian(v_new, dl_new, r_new, jac_new);
        double chi2_new = 0.0;
        for (double x : r_new) chi2_new += x * x;
        if (chi2_new <= chi2) {
          const double rel = std::max(std::abs(dv) / std::max(std::abs(v_new), 1e-12),
                                      std::abs(dd) / dl_new);
          v = v_new;
          dl = dl_new;
          r = std::move(r_new);
          jac = std::move(jac_new);
          chi2 = chi2_new;
          mu = std::max(mu / 10.0, 1e-12);
          accepted = true;
          stable = rel < opt.relative_tolerance ? stable + 1 : 0;
        } else {
          mu *= 10.0;
        }
      }
      if (!accepted) {
        // No downhill step at any damping: the minimum is reached to
        // machine precision.
        stable = opt.stable_iterations;
      }
      if (stable >= opt.stable_iterations) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw Error(ErrorCode::NoConvergence, "dip fit did not converge in " + std::to_string(opt.max_iterations) +
                                                " iterations");
    }

    double a00 = 0, a01 = 0, a11 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a00 += jac[i][0] * jac[i][0];
      a01 += jac[i][0] * jac[i][1];
      a11 += jac[i][1] * jac[i][1];
    }
    const double det = a00 * a11 - a01 * a01;
    fit.visibility = v;
    fit.delta_lambda_nm = dl;
    fit.visibility_error = det > 0.0 ? std::sqrt(a11 / det) : std::numeric_limits<double>::infinity();
    fit.delta_lambda_error_nm = det > 0.0 ? std::sqrt(a00 / det) : std::numeric_limits<double>::infinity();
    fit.chi_square = chi2;
    fit.reduced_chi_square = n > 2 ? chi2 / static_cast<double>(n - 2) : 0.0;
    fit.baseline = baseline;
    fit.baseline_points = base_pts.size();
    fit.iterations += it + 1;
    fit.converged = true;
    fit.residuals = r;
  }
  if (!std::isfinite(fit.visibility_error) || !std::isfinite(fit.delta_lambda_error_nm)) {
    throw Error(ErrorCode::NoConvergence, "singular covariance at the fitted parameters");
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Estimator calibration: simulate-and-fit over consecutive seeds.

struct Calibration {
  std::size_t runs = 0;
  std::size_t failures = 0;
  double visibility_mean = 0.0;
  double visibility_sd = 0.0;
  double delta_lambda_mean_nm = 0.0;
  double delta_lambda_sd_nm = 0.0;
  double reduced_chi_square_mean = 0.0;
};

inline Calibration calibrate(const DipModel& truth, const CoincidenceRates& rates, const std::vector<double>& positions,
                             double dwell_s, std::size_t runs, std::uint64_t first_seed = 1,
                             const FitOptions& opt = {}) {
  std::vector<double> vs, ls, chis;
  Calibration c;
  c.runs = runs;
  for (std::size_t k = 0; k < runs; ++k) {
    const auto scan = simulate_scan(truth, rates, positions, dwell_s, first_seed + k);
    try {
      const auto f = fit_dip(scan, truth.lambda_nm, opt);
      vs.push_back(f.visibility);
      ls.push_back(f.delta_lambda_nm);
      chis.push_back(f.reduced_chi_square);
    } catch (const Error&) {
      ++c.failures;
    }
  }
  const auto stats = [](const std::vector<double>& x, double& mean, double& sd) {
    if (x.empty()) return;
    mean = detail::mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
  };
  double unused = 0.0;
  stats(vs, c.visibility_mean, c.visibility_sd);
  stats(ls, c.delta_lambda_mean_nm, c.delta_lambda_sd_nm);
  stats(chis, c.reduced_chi_square_mean, unused);
  return c;
}

}  // namespace cptwin::hom
