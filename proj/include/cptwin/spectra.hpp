#pragma once

// Down-converted photon spectra: the sinc^2(dk L / 2) phase-matching
// profile, Gaussian instrument/pump kernels, and the four-peak parametric
// fluorescence spectrum of the two type-II interactions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "cptwin/error.hpp"
#include "cptwin/phasematch.hpp"

namespace cptwin::spectra {

using phasematch::Interaction;
using phasematch::IndexProvider;

inline constexpr double kNmPerMm = 1e6;

struct SpectrumMeta {
  double theta_deg = 0.0;
  double lambda_p_nm = 0.0;
  double length_mm = 0.0;
  std::vector<std::string> kernels;  // e.g. "gaussian fwhm=0.3 nm (pump)"
  std::string notes;
};

struct Spectrum {
  std::vector<double> lambda_nm;  // uniform, strictly increasing
  std::vector<double> intensity;  // >= 0
  SpectrumMeta meta;

  std::size_t size() const { return lambda_nm.size(); }
  double step() const { return lambda_nm.size() > 1 ? lambda_nm[1] - lambda_nm[0] : 0.0; }

  void normalize_peak() {
    const double peak = *std::max_element(intensity.begin(), intensity.end());
    if (peak > 0.0) {
      for (double& v : intensity) v /= peak;
    }
  }

  double integral() const {
    double sum = 0.0;
    for (double v : intensity) sum += v;
    return sum * step();
  }
};

// Uniform grid lo, lo + step, ..., <= hi (hi included when it lands on the grid).
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "grid needs lo < hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + static_cast<double>(k) * step;
  return g;
}

inline Spectrum blank_spectrum(double lo, double hi, double step) {
  Spectrum s;
  s.lambda_nm = uniform_grid(lo, hi, step);
  s.intensity.assign(s.lambda_nm.size(), 0.0);
  return s;
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

// Half-width of sinc^2 at half maximum: sinc^2(x) = 1/2 at x = 1.391557...
inline constexpr double kSincSquaredHalfWidth = 1.3915573782515103;

enum class Branch { Copropagating, Counterpropagating };

// sinc^2(dk L / 2) at a photon wavelength of the chosen branch; the partner
// photon takes the remaining pump energy.
template <IndexProvider P>
double phase_matching_intensity(double lambda_nm, Branch branch, double theta_deg, double lambda_p_nm,
                                const Interaction& inter, double length_mm, const P& index) {
  const double lambda_s =
      branch == Branch::Copropagating ? lambda_nm : 1.0 / (1.0 / lambda_p_nm - 1.0 / lambda_nm);
  const double dk = phasematch::delta_k(lambda_s, theta_deg, lambda_p_nm, inter, index);
  const double x = sinc(0.5 * dk * length_mm * kNmPerMm);
  return x * x;
}

template <IndexProvider P>
Spectrum phase_matching_spectrum(double theta_deg, double lambda_p_nm, const Interaction& inter,
                                 double length_mm, const P& index, const std::vector<double>& grid,
                                 Branch branch = Branch::Copropagating) {
  if (!(length_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample length must be positive");
  if (grid.size() < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least two points");
  Spectrum out;
  out.lambda_nm = grid;
  out.intensity.reserve(grid.size());
  for (double lam : grid) {
    out.intensity.push_back(
        phase_matching_intensity(lam, branch, theta_deg, lambda_p_nm, inter, length_mm, index));
  }
  out.meta.theta_deg = theta_deg;
  out.meta.lambda_p_nm = lambda_p_nm;
  out.meta.length_mm = length_mm;
  out.meta.notes = std::string("sinc^2(dk L/2), interaction ") + std::to_string(inter.id) +
                   (branch == Branch::Copropagating ? ", copropagating photon" : ", counterpropagating photon");
  return out;
}

// Default grid: 0.005 nm step over +-5 nm around the phase-matched photon.
template <IndexProvider P>
Spectrum phase_matching_spectrum(double theta_deg, double lambda_p_nm, const Interaction& inter,
                                 double length_mm, const P& index, double half_span_nm = 5.0,
                                 double step_nm = 0.005) {
  const auto pt = phasematch::solve_pair(theta_deg, lambda_p_nm, inter, index);
  return phase_matching_spectrum(theta_deg, lambda_p_nm, inter, length_mm, index,
                                 uniform_grid(pt.lambda_s_nm - half_span_nm, pt.lambda_s_nm + half_span_nm, step_nm));
}

// ---------------------------------------------------------------------------

struct ConvolutionKernel {
  double fwhm_nm = 0.0;  // Gaussian
  std::string label;

  double sigma() const { return fwhm_nm / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }
};

// Discrete Gaussian convolution on the spectrum's own grid; samples outside
// the grid count as zero.
inline Spectrum convolve(const Spectrum& sp, const ConvolutionKernel& k) {
  const double h = sp.step();
  if (!(k.fwhm_nm > 0.0)) throw Error(ErrorCode::InvalidArgument, "kernel FWHM must be positive");
  if (sp.size() < 2 || k.fwhm_nm < 2.0 * h * (1.0 - 1e-9)) {
    throw Error(ErrorCode::KernelUnderResolved, "kernel FWHM " + std::to_string(k.fwhm_nm) +
                                                    " nm below two grid steps of " + std::to_string(h) + " nm");
  }
  const double sigma = k.sigma();
  const auto half = static_cast<long>(std::ceil(6.0 * sigma / h));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (long m = -half; m <= half; ++m) {
    const double x = static_cast<double>(m) * h / sigma;
    const double v = std::exp(-0.5 * x * x);
    w[static_cast<std::size_t>(m + half)] = v;
    total += v;
  }
  for (double& v : w) v /= total;

  Spectrum out = sp;
  const auto n = static_cast<long>(sp.size());
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    const long lo = std::max(0L, i - half), hi = std::min(n - 1, i + half);
    for (long j = lo; j <= hi; ++j) {
      acc += sp.intensity[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(i - j + half)];
    }
    out.intensity[static_cast<std::size_t>(i)] = acc;
  }
  out.meta.kernels.push_back("gaussian fwhm=" + std::to_string(k.fwhm_nm) + " nm" +
                             (k.label.empty() ? "" : " (" + k.label + ")"));
  return out;
}

// Width at half the global maximum, linear interpolation between samples.
inline double fwhm(const Spectrum& sp) {
  if (sp.size() < 3) throw Error(ErrorCode::NoPeak, "spectrum too short");
  const auto& y = sp.intensity;
  const auto it = std::max_element(y.begin(), y.end());
  const double peak = *it;
  if (!(peak > 0.0)) throw Error(ErrorCode::NoPeak, "spectrum has no positive maximum");
  const auto imax = static_cast<std::size_t>(it - y.begin());
  // Reject a second, separate sample reaching the same maximum.
  std::size_t plateau_lo = imax, plateau_hi = imax;
  while (plateau_lo > 0 && y[plateau_lo - 1] >= peak) --plateau_lo;
  while (plateau_hi + 1 < y.size() && y[plateau_hi + 1] >= peak) ++plateau_hi;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if ((i < plateau_lo || i > plateau_hi) && y[i] >= peak * (1.0 - 1e-12)) {
      throw Error(ErrorCode::NoPeak, "global maximum is not unique");
    }
  }
  const double half = 0.5 * peak;
  std::size_t l = plateau_lo;
  while (l > 0 && y[l] > half) --l;
  std::size_t r = plateau_hi;
  while (r + 1 < y.size() && y[r] > half) ++r;
  if (y[l] > half || y[r] > half) throw Error(ErrorCode::HalfMaxNotBracketed, "half maximum not crossed on both sides");
  const auto& x = sp.lambda_nm;
  const double xl = x[l] + (half - y[l]) * (x[l + 1] - x[l]) / (y[l + 1] - y[l]);
  const double xr = x[r - 1] + (half - y[r - 1]) * (x[r] - x[r - 1]) / (y[r] - y[r - 1]);
  return xr - xl;
}

struct Peak {
  std::size_t index = 0;
  double lambda_nm = 0.0;
  double intensity = 0.0;
};

// Local maxima whose prominence exceeds min_prominence (absolute units).
inline std::vector<Peak> find_peaks(const Spectrum& sp, double min_prominence) {
  std::vector<Peak> out;
  const auto& y = sp.intensity;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
    // Prominence: descend on each side until a higher sample or the edge.
    double left_min = y[i];
    for (std::size_t j = i; j-- > 0;) {
      if (y[j] > y[i]) break;
      left_min = std::min(left_min, y[j]);
    }
    double right_min = y[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (y[j] > y[i]) break;
      right_min = std::min(right_min, y[j]);
    }
    if (y[i] - std::max(left_min, right_min) >= min_prominence) {
      out.push_back({i, sp.lambda_nm[i], y[i]});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

struct FluorescenceOptions {
  double pump_fwhm_nm = 0.3;
  double monochromator_fwhm_nm = 0.1;
  double noise_floor = 0.0;                 // added after convolution, units of the peak
  double long_wavelength_attenuation = 0.30;  // facet reflectance, applied once
  double step_nm = 0.005;
  double half_span_nm = 5.0;
  bool include_interaction_1 = true;
  bool include_interaction_2 = true;
};

template <IndexProvider P>
Spectrum fluorescence_spectrum(double theta_deg, double lambda_p_nm, double length_mm, const P& index,
                               const FluorescenceOptions& opt = {}) {
  struct Line {
    double centre;
    Branch branch;
    Interaction inter;
  };
  std::vector<Line> lines;
  for (const Interaction inter : {Interaction::one(), Interaction::two()}) {
    if ((inter.id == 1 && !opt.include_interaction_1) || (inter.id == 2 && !opt.include_interaction_2)) continue;
    const auto pt = phasematch::solve_pair(theta_deg, lambda_p_nm, inter, index);
    lines.push_back({pt.lambda_s_nm, Branch::Copropagating, inter});
    lines.push_back({pt.lambda_i_nm, Branch::Counterpropagating, inter});
  }
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "no interaction selected");

  double lo = lines.front().centre, hi = lo;
  for (const auto& l : lines) {
    lo = std::min(lo, l.centre);
    hi = std::max(hi, l.centre);
  }
  // Anchor the grid on a multiple of the step so reruns are bit-identical.
  lo = std::floor((lo - opt.half_span_nm) / opt.step_nm) * opt.step_nm;
  hi = std::ceil((hi + opt.half_span_nm) / opt.step_nm) * opt.step_nm;
  Spectrum total = blank_spectrum(lo, hi, opt.step_nm);

  const double degenerate = 2.0 * lambda_p_nm;
  for (const auto& line : lines) {
    const double amplitude = line.centre > degenerate ? opt.long_wavelength_attenuation : 1.0;
    for (std::size_t k = 0; k < total.size(); ++k) {
      const double lam = total.lambda_nm[k];
      if (std::abs(lam - line.centre) > opt.half_span_nm) continue;
      total.intensity[k] += amplitude * phase_matching_intensity(lam, line.branch, theta_deg, lambda_p_nm,
                                                                 line.inter, length_mm, index);
    }
  }
  total.meta.theta_deg = theta_deg;
  total.meta.lambda_p_nm = lambda_p_nm;
  total.meta.length_mm = length_mm;
  if (opt.pump_fwhm_nm > 0.0) total = convolve(total, {opt.pump_fwhm_nm, "pump"});
  if (opt.monochromator_fwhm_nm > 0.0) total = convolve(total, {opt.monochromator_fwhm_nm, "monochromator"});
  for (double& v : total.intensity) v += opt.noise_floor;
  total.meta.notes = "sum of sinc^2 lines; long-wavelength lines x" +
                     std::to_string(opt.long_wavelength_attenuation) + "; flat floor " +
                     std::to_string(opt.noise_floor);
  return total;
}

// Peaks of a fluorescence spectrum above its floor: local maxima with a
// prominence of at least 5% of the tallest line.
inline std::vector<Peak> fluorescence_peaks(const Spectrum& sp, double prominence_fraction = 0.05) {
  const double peak = *std::max_element(sp.intensity.begin(), sp.intensity.end());
  const double floor = *std::min_element(sp.intensity.begin(), sp.intensity.end());
  return find_peaks(sp, prominence_fraction * (peak - floor));
}

// sinc^2 with a linear mismatch dk = 2 pi g (nu - nu0), g the effective
// group-index combination: n_gs + n_gi for counterpropagating photons,
// n_gs - n_gi for a copropagating reference. Sampled on a grid wide enough
// to resolve the main lobe.
inline Spectrum linearized_spectrum(double centre_nm, double group_combination, double length_mm,
                                    std::size_t points = 8001) {
  const double g = std::abs(group_combination);
  if (!(g > 0.0) || !(length_mm > 0.0)) throw Error(ErrorCode::InvalidArgument, "need g > 0 and L > 0");
  const double l_nm = length_mm * kNmPerMm;
  // Expected FWHM in wavelength, used only to size the grid.
  const double expected = centre_nm * centre_nm * 2.0 * kSincSquaredHalfWidth / (std::numbers::pi * g * l_nm);
  const double half_span = std::min(4.0 * expected, 0.45 * centre_nm);
  const double step = 2.0 * half_span / static_cast<double>(points - 1);
  Spectrum out;
  for (std::size_t k = 0; k < points; ++k) {
    const double lam = centre_nm - half_span + static_cast<double>(k) * step;
    const double dk = 2.0 * std::numbers::pi * g * (1.0 / lam - 1.0 / centre_nm);
    const double x = sinc(0.5 * dk * l_nm);
    out.lambda_nm.push_back(lam);
    out.intensity.push_back(x * x);
  }
  out.meta.length_mm = length_mm;
  out.meta.notes = "linearized sinc^2, group combination " + std::to_string(group_combination);
  return out;
}

}  // namespace cptwin::spectra
