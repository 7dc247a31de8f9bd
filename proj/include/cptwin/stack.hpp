#pragma once

// Planar multilayer description and the 2x2 characteristic-matrix engine.
//
// Layers are ordered from the top surface (ambient side) down to the
// substrate. For each layer j with index n_j, thickness d_j and internal
// angle t_j the characteristic matrix is
//
//   M_j = [ cos d          i sin d / y_j ]      d   = 2 pi n_j d_j cos t_j / lambda
//         [ i y_j sin d    cos d         ]      y_j = n_j cos t_j   (TE)
//                                               y_j = n_j / cos t_j (TM)
//
// and [B, C]^T = M_1 ... M_N [1, y_sub]^T gives r = (y0 B - C)/(y0 B + C),
// t = 2 y0/(y0 B + C), T = 4 y0 Re(y_sub)/|y0 B + C|^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cptwin/error.hpp"
#include "cptwin/materials.hpp"

namespace cptwin {

enum class Polarization { TE, TM };

inline const char* to_string(Polarization pol) { return pol == Polarization::TE ? "TE" : "TM"; }

}  // namespace cptwin

namespace cptwin::stack {

using materials::Composition;
using materials::DispersionModel;
using cplx = std::complex<double>;

struct Layer {
  Composition composition;
  double thickness_nm;
  int nonlinear_sign = 0;  // sign of the chi(2) modulation, QPM bookkeeping only
};

// Semi-infinite medium: either an alloy evaluated through the dispersion
// model or a fixed real index (used where the model has no real regime).
struct Medium {
  std::optional<Composition> composition;
  double fixed_index = 1.0;

  static Medium alloy(double x) { return Medium{Composition(x), 0.0}; }
  static Medium fixed(double n) { return Medium{std::nullopt, n}; }

  double index(double lambda_nm, const DispersionModel& model) const {
    return composition ? materials::refractive_index(*composition, lambda_nm, model) : fixed_index;
  }
};

struct Region {
  std::string name;
  std::size_t begin = 0;  // first layer index
  std::size_t end = 0;    // one past the last layer
  double periods = 0.0;   // declared period count; two layers per period
};

inline constexpr const char* kTopDbr = "top_dbr";
inline constexpr const char* kCore = "core";
inline constexpr const char* kBottomDbr = "bottom_dbr";

struct LayerStack {
  double ambient_index = 1.0;
  std::vector<Layer> layers;
  Medium substrate = Medium::fixed(1.0);
  std::vector<Region> regions;
  DispersionModel model = materials::default_model();

  const Region* find_region(const std::string& name) const {
    for (const auto& r : regions) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }

  const Region& region(const std::string& name) const {
    if (const Region* r = find_region(name)) return *r;
    throw Error(ErrorCode::InvalidArgument, "stack has no region '" + name + "'");
  }

  double total_thickness_nm() const {
    double t = 0.0;
    for (const auto& l : layers) t += l.thickness_nm;
    return t;
  }

  // Index of every layer at lambda; alloys are evaluated once per composition.
  std::vector<double> layer_indices(double lambda_nm) const {
    std::map<double, double> cache;
    std::vector<double> out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
      auto [it, inserted] = cache.try_emplace(l.composition.x(), 0.0);
      if (inserted) it->second = materials::refractive_index(l.composition, lambda_nm, model);
      out.push_back(it->second);
    }
    return out;
  }
};

// Throws InvalidArgument describing the first violated invariant.
inline void validate(const LayerStack& s) {
  if (s.layers.empty()) throw Error(ErrorCode::InvalidArgument, "layer list is empty");
  if (!(s.ambient_index >= 1.0)) throw Error(ErrorCode::InvalidArgument, "ambient index < 1");
  for (std::size_t i = 0; i < s.layers.size(); ++i) {
    const Layer& l = s.layers[i];
    if (!(l.thickness_nm > 0.0) || !std::isfinite(l.thickness_nm)) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " thickness <= 0");
    }
    if (l.nonlinear_sign < -1 || l.nonlinear_sign > 1) {
      throw Error(ErrorCode::InvalidArgument, "layer " + std::to_string(i) + " bad nonlinear sign");
    }
  }
  if (s.regions.empty()) return;
  std::size_t cursor = 0;
  for (const auto& r : s.regions) {
    if (r.begin != cursor || r.end <= r.begin) {
      throw Error(ErrorCode::InvalidArgument, "regions do not partition the layers at '" + r.name + "'");
    }
    const auto count = static_cast<double>(r.end - r.begin);
    if (r.periods > 0.0 && std::abs(count - 2.0 * r.periods) > 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "region '" + r.name + "' layer count does not match " +
                                                  std::to_string(r.periods) + " periods");
    }
    cursor = r.end;
  }
  if (cursor != s.layers.size()) {
    throw Error(ErrorCode::InvalidArgument, "regions do not cover every layer");
  }
  if (const Region* core = s.find_region(kCore)) {
    for (std::size_t i = core->begin; i < core->end; ++i) {
      const int expected = ((i - core->begin) % 2 == 0) ? 1 : -1;
      if (s.layers[i].nonlinear_sign != expected) {
        throw Error(ErrorCode::InvalidArgument, "core nonlinear sign must alternate +1/-1");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Reference device

enum class CoreThicknessRule {
  HalfWaveEach,      // every core layer lambda_p / (2 n_layer): absentee at the pump
  QuarterWaveMean,   // every core layer lambda_p / (4 n_mean_core)
};

struct DesignParams {
  double pump_design_nm = 760.0;
  double top_periods = 18;
  double core_periods = 4.5;
  double bottom_periods = 41;
  double core_high_x = 0.25;  // first and last core layer
  double core_low_x = 0.80;
  double dbr_high_x = 0.35;
  double dbr_low_x = 0.90;
  CoreThicknessRule core_rule = CoreThicknessRule::HalfWaveEach;
  Medium substrate = Medium::fixed(3.69);  // GaAs real part near 760 nm
  DispersionModel model = materials::default_model();
};

inline double quarter_wave_nm(double lambda_nm, Composition c, const DispersionModel& model) {
  return lambda_nm / (4.0 * materials::refractive_index(c, lambda_nm, model));
}

// Upper DBR (high/low from the air side, ending on low), alternating QPM
// core starting and ending on its high-index alloy, lower DBR (low/high from
// the core side) on the substrate.
inline LayerStack build_reference_stack(const DesignParams& p = {}) {
  const auto whole_or_half = [](double periods) {
    const double twice = 2.0 * periods;
    return periods > 0.0 && std::abs(twice - std::round(twice)) < 1e-12;
  };
  if (!(p.pump_design_nm > 0.0) || !whole_or_half(p.top_periods) ||
      !whole_or_half(p.core_periods) || !whole_or_half(p.bottom_periods) ||
      std::abs(p.top_periods - std::round(p.top_periods)) > 1e-12 ||
      std::abs(p.bottom_periods - std::round(p.bottom_periods)) > 1e-12) {
    throw Error(ErrorCode::InvalidDesignParams,
                "pump wavelength must be positive; DBR periods whole, core periods a multiple of 0.5");
  }
  LayerStack s;
  s.model = p.model;
  s.substrate = p.substrate;
  try {
    const Composition dh(p.dbr_high_x), dl(p.dbr_low_x), ch(p.core_high_x), cl(p.core_low_x);
    const double lam = p.pump_design_nm;
    const double t_dh = quarter_wave_nm(lam, dh, s.model);
    const double t_dl = quarter_wave_nm(lam, dl, s.model);

    double t_ch = 0.0, t_cl = 0.0;
    if (p.core_rule == CoreThicknessRule::HalfWaveEach) {
      t_ch = 2.0 * quarter_wave_nm(lam, ch, s.model);
      t_cl = 2.0 * quarter_wave_nm(lam, cl, s.model);
    } else {
      const double n_mean = 0.5 * (materials::refractive_index(ch, lam, s.model) +
                                   materials::refractive_index(cl, lam, s.model));
      t_ch = t_cl = lam / (4.0 * n_mean);
    }

    const auto top_pairs = static_cast<std::size_t>(std::lround(p.top_periods));
    const auto core_layers = static_cast<std::size_t>(std::lround(2.0 * p.core_periods));
    const auto bottom_pairs = static_cast<std::size_t>(std::lround(p.bottom_periods));

    for (std::size_t i = 0; i < top_pairs; ++i) {
      s.layers.push_back({dh, t_dh, 0});
      s.layers.push_back({dl, t_dl, 0});
    }
    s.regions.push_back({kTopDbr, 0, s.layers.size(), p.top_periods});

    const std::size_t core_begin = s.layers.size();
    for (std::size_t i = 0; i < core_layers; ++i) {
      if (i % 2 == 0) {
        s.layers.push_back({ch, t_ch, +1});
      } else {
        s.layers.push_back({cl, t_cl, -1});
      }
    }
    s.regions.push_back({kCore, core_begin, s.layers.size(), p.core_periods});

    const std::size_t bottom_begin = s.layers.size();
    for (std::size_t i = 0; i < bottom_pairs; ++i) {
      s.layers.push_back({dl, t_dl, 0});
      s.layers.push_back({dh, t_dh, 0});
    }
    s.regions.push_back({kBottomDbr, bottom_begin, s.layers.size(), p.bottom_periods});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::InvalidDesignParams, e.what());
    throw;
  }
  validate(s);
  return s;
}

// Copy of layers [begin, end) between the given semi-infinite media.
inline LayerStack sub_stack(const LayerStack& s, std::size_t begin, std::size_t end, double ambient,
                            Medium substrate) {
  LayerStack out;
  out.ambient_index = ambient;
  out.layers.assign(s.layers.begin() + static_cast<std::ptrdiff_t>(begin),
                    s.layers.begin() + static_cast<std::ptrdiff_t>(end));
  out.substrate = substrate;
  out.model = s.model;
  return out;
}

inline LayerStack reversed(const LayerStack& s, double new_ambient, Medium new_substrate) {
  LayerStack out = sub_stack(s, 0, s.layers.size(), new_ambient, new_substrate);
  std::reverse(out.layers.begin(), out.layers.end());
  return out;
}

// ---------------------------------------------------------------------------
// Transfer matrices

struct Matrix2 {
  std::array<cplx, 4> m{cplx(1), cplx(0), cplx(0), cplx(1)};  // row-major

  cplx& operator()(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
  const cplx& operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

  friend Matrix2 operator*(const Matrix2& a, const Matrix2& b) {
    Matrix2 out;
    out(0, 0) = a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0);
    out(0, 1) = a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1);
    out(1, 0) = a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0);
    out(1, 1) = a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1);
    return out;
  }
};

namespace detail {

// Incidence geometry: invariant n0 sin(theta0) shared by every layer.
struct Geometry {
  double lambda_nm;
  double in_plane;  // n0 sin(theta0)
  Polarization pol;

  cplx cos_in(double n) const {
    const double s = in_plane / n;
    return std::sqrt(cplx(1.0 - s * s, 0.0));
  }
  cplx admittance(double n) const {
    const cplx c = cos_in(n);
    return pol == Polarization::TE ? n * c : n / c;
  }
  cplx phase(double n, double thickness_nm) const {
    return 2.0 * std::numbers::pi * n * thickness_nm * cos_in(n) / lambda_nm;
  }
};

inline Matrix2 layer_matrix(const Geometry& g, double n, double thickness_nm) {
  const cplx delta = g.phase(n, thickness_nm);
  const cplx y = g.admittance(n);
  const cplx c = std::cos(delta);
  const cplx s = std::sin(delta);
  const cplx i(0.0, 1.0);
  Matrix2 out;
  out(0, 0) = c;
  out(0, 1) = i * s / y;
  out(1, 0) = i * y * s;
  out(1, 1) = c;
  return out;
}

inline Geometry geometry(const LayerStack& s, double lambda_nm, double theta_deg, Polarization pol) {
  if (!(std::abs(theta_deg) < 90.0)) {
    throw Error(ErrorCode::InvalidArgument, "incidence angle must satisfy |theta| < 90 deg");
  }
  if (!(lambda_nm > 0.0)) throw Error(ErrorCode::InvalidArgument, "wavelength must be positive");
  return Geometry{lambda_nm, s.ambient_index * std::sin(theta_deg * std::numbers::pi / 180.0), pol};
}

}  // namespace detail

// Product M_begin ... M_{end-1}.
inline Matrix2 characteristic_matrix(const LayerStack& s, std::size_t begin, std::size_t end,
                                     double lambda_nm, double theta_deg, Polarization pol) {
  const auto g = detail::geometry(s, lambda_nm, theta_deg, pol);
  const auto n = s.layer_indices(lambda_nm);
  Matrix2 total;
  for (std::size_t j = begin; j < end; ++j) {
    total = total * detail::layer_matrix(g, n[j], s.layers[j].thickness_nm);
  }
  return total;
}

struct StackResponse {
  cplx r;
  cplx t;
  double reflectance = 0.0;
  double transmittance = 0.0;
  double lambda_nm = 0.0;
  double theta_deg = 0.0;
  Polarization pol = Polarization::TE;
};

inline StackResponse stack_response(const LayerStack& s, double lambda_nm, double theta_deg,
                                    Polarization pol) {
  const auto g = detail::geometry(s, lambda_nm, theta_deg, pol);
  const Matrix2 m = characteristic_matrix(s, 0, s.layers.size(), lambda_nm, theta_deg, pol);
  const cplx y0 = g.admittance(s.ambient_index);
  const cplx ys = g.admittance(s.substrate.index(lambda_nm, s.model));
  const cplx b = m(0, 0) + m(0, 1) * ys;
  const cplx c = m(1, 0) + m(1, 1) * ys;
  const cplx denom = y0 * b + c;
  StackResponse out;
  out.r = (y0 * b - c) / denom;
  out.t = 2.0 * y0 / denom;
  out.reflectance = std::norm(out.r);
  out.transmittance = 4.0 * y0.real() * ys.real() / std::norm(denom);
  out.lambda_nm = lambda_nm;
  out.theta_deg = theta_deg;
  out.pol = pol;
  return out;
}

// Closed-form reflectance of (H L)^N on a substrate at the design
// wavelength, normal incidence.
inline double quarter_wave_reflectance(double n_ambient, double n_high, double n_low,
                                       double n_substrate, int pairs) {
  const double y = std::pow(n_high / n_low, 2.0 * pairs) * n_substrate;
  const double r = (n_ambient - y) / (n_ambient + y);
  return r * r;
}

// ---------------------------------------------------------------------------
// Field profile

struct LayerAmplitudes {
  cplx forward;   // downward-travelling tangential E at the layer top
  cplx backward;  // upward-travelling tangential E at the layer top
};

struct FieldProfile {
  std::vector<double> depth_nm;  // 0 at the top surface, positive downward
  std::vector<cplx> field;       // tangential E, unit incident amplitude
  std::vector<cplx> magnetic;    // tangential H in free-space admittance units
  std::vector<std::size_t> layer;
  std::vector<LayerAmplitudes> amplitudes;  // one entry per layer
  double lambda_nm = 0.0;
  double theta_deg = 0.0;
  Polarization pol = Polarization::TE;

  double intensity(std::size_t i) const { return std::norm(field[i]); }

  // Time-averaged normal Poynting flux, proportional to Re(E H*).
  double flux(std::size_t i) const { return (field[i] * std::conj(magnetic[i])).real(); }
};

inline FieldProfile field_profile(const LayerStack& s, double lambda_nm, double theta_deg,
                                  Polarization pol, std::size_t samples_per_layer = 20) {
  if (samples_per_layer < 10) samples_per_layer = 10;
  const auto g = detail::geometry(s, lambda_nm, theta_deg, pol);
  const StackResponse resp = stack_response(s, lambda_nm, theta_deg, pol);
  const cplx y0 = g.admittance(s.ambient_index);
  const auto n = s.layer_indices(lambda_nm);

  FieldProfile out;
  out.lambda_nm = lambda_nm;
  out.theta_deg = theta_deg;
  out.pol = pol;

  // Tangential fields at the top surface for unit incident amplitude.
  cplx e = 1.0 + resp.r;
  cplx h = y0 * (1.0 - resp.r);
  double z0 = 0.0;
  const cplx i(0.0, 1.0);
  for (std::size_t j = 0; j < s.layers.size(); ++j) {
    const double d = s.layers[j].thickness_nm;
    const cplx y = g.admittance(n[j]);
    out.amplitudes.push_back({0.5 * (e + h / y), 0.5 * (e - h / y)});
    for (std::size_t k = 0; k < samples_per_layer; ++k) {
      const double dz = d * static_cast<double>(k) / static_cast<double>(samples_per_layer - 1);
      const cplx delta = g.phase(n[j], dz);
      // Inverse characteristic matrix of the partial layer.
      const cplx c = std::cos(delta), sn = std::sin(delta);
      out.depth_nm.push_back(z0 + dz);
      out.field.push_back(c * e - i * sn / y * h);
      out.magnetic.push_back(-i * y * sn * e + c * h);
      out.layer.push_back(j);
    }
    e = out.field.back();
    h = out.magnetic.back();
    z0 += d;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cavity resonance

struct Resonance {
  double lambda_nm = 0.0;
  double reflectance = 0.0;
  double finesse = 0.0;
  double fwhm_nm = 0.0;             // width of the core-intensity resonance
  double free_spectral_range_nm = 0.0;
  double t_up = 0.0;
  double t_down = 0.0;
  double peak_core_enhancement = 0.0;  // max |E|^2 in the core at resonance
};

struct ResonanceOptions {
  double scan_step_nm = 0.01;
  double tolerance_nm = 1e-3;
  double min_prominence = 1e-6;  // reflectance units
};

// Mean |E|^2 over the core region for unit incident amplitude.
inline double core_mean_intensity(const LayerStack& s, double lambda_nm, double theta_deg,
                                  Polarization pol) {
  const Region& core = s.region(kCore);
  const FieldProfile f = field_profile(s, lambda_nm, theta_deg, pol, 10);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < f.field.size(); ++k) {
    if (f.layer[k] >= core.begin && f.layer[k] < core.end) {
      sum += f.intensity(k);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

inline double core_optical_thickness_nm(const LayerStack& s, double lambda_nm) {
  const Region& core = s.region(kCore);
  const auto n = s.layer_indices(lambda_nm);
  double opl = 0.0;
  for (std::size_t j = core.begin; j < core.end; ++j) opl += n[j] * s.layers[j].thickness_nm;
  return opl;
}

// Transmittance of the upper and lower mirrors, each evaluated alone between
// its real neighbours (ambient/core above, core/substrate below).
inline std::pair<double, double> mirror_transmittances(const LayerStack& s, double lambda_nm,
                                                       double theta_deg, Polarization pol) {
  const Region& top = s.region(kTopDbr);
  const Region& core = s.region(kCore);
  const Region& bottom = s.region(kBottomDbr);
  const Layer& first_core = s.layers[core.begin];
  const Layer& last_core = s.layers[core.end - 1];

  const LayerStack upper =
      sub_stack(s, top.begin, top.end, s.ambient_index, Medium{first_core.composition, 0.0});
  const double n_last = materials::refractive_index(last_core.composition, lambda_nm, s.model);
  // Lower mirror seen from inside the core: launch from the last core alloy.
  // The in-plane invariant is kept by rescaling the angle to the new ambient.
  const double in_plane = s.ambient_index * std::sin(theta_deg * std::numbers::pi / 180.0);
  LayerStack lower = sub_stack(s, bottom.begin, bottom.end, n_last, s.substrate);
  const double theta_lower = std::asin(in_plane / n_last) * 180.0 / std::numbers::pi;

  return {stack_response(upper, lambda_nm, theta_deg, pol).transmittance,
          stack_response(lower, lambda_nm, theta_lower, pol).transmittance};
}

namespace detail {

template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

template <class F>
double bisect_level(F&& f, double inside, double outside, double level, double tol) {
  // f(inside) > level >= f(outside)
  while (std::abs(outside - inside) > tol) {
    const double mid = 0.5 * (inside + outside);
    if (f(mid) > level) {
      inside = mid;
    } else {
      outside = mid;
    }
  }
  return 0.5 * (inside + outside);
}

}  // namespace detail

inline Resonance find_resonance(const LayerStack& s, double lambda_lo_nm, double lambda_hi_nm,
                                double theta_deg, Polarization pol,
                                const ResonanceOptions& opt = {}) {
  if (!(lambda_hi_nm > lambda_lo_nm)) {
    throw Error(ErrorCode::InvalidArgument, "resonance window must have lo < hi");
  }
  const auto reflectance = [&](double lam) {
    return stack_response(s, lam, theta_deg, pol).reflectance;
  };

  const auto steps = static_cast<std::size_t>(std::ceil((lambda_hi_nm - lambda_lo_nm) / opt.scan_step_nm));
  std::vector<double> lam(steps + 1), refl(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    lam[k] = std::min(lambda_lo_nm + static_cast<double>(k) * opt.scan_step_nm, lambda_hi_nm);
    refl[k] = reflectance(lam[k]);
  }

  // Interior local minima whose prominence on both sides clears the floor.
  std::vector<std::size_t> dips;
  for (std::size_t k = 1; k < steps; ++k) {
    if (!(refl[k] < refl[k - 1] && refl[k] <= refl[k + 1])) continue;
    const double left = *std::max_element(refl.begin(), refl.begin() + static_cast<std::ptrdiff_t>(k));
    const double right = *std::max_element(refl.begin() + static_cast<std::ptrdiff_t>(k) + 1, refl.end());
    if (std::min(left, right) - refl[k] >= opt.min_prominence) dips.push_back(k);
  }
  if (dips.empty()) {
    throw Error(ErrorCode::NoResonanceInWindow, "no reflectance dip in [" + std::to_string(lambda_lo_nm) +
                                                    ", " + std::to_string(lambda_hi_nm) + "] nm");
  }
  if (dips.size() > 1) {
    throw Error(ErrorCode::MultipleResonances,
                std::to_string(dips.size()) + " reflectance dips in window");
  }

  const std::size_t k = dips.front();
  Resonance out;
  out.lambda_nm = detail::golden_section_min(reflectance, lam[k - 1], lam[k + 1], opt.tolerance_nm);
  out.reflectance = reflectance(out.lambda_nm);

  // Width of the internal intensity resonance.
  const auto core_intensity = [&](double l) { return core_mean_intensity(s, l, theta_deg, pol); };
  const double peak = core_intensity(out.lambda_nm);
  const double half = 0.5 * peak;
  double width_guess = 4.0 * opt.scan_step_nm;
  double lo = out.lambda_nm - width_guess, hi = out.lambda_nm + width_guess;
  while (core_intensity(lo) > half && out.lambda_nm - lo < (lambda_hi_nm - lambda_lo_nm)) {
    lo -= width_guess;
    width_guess *= 2.0;
  }
  width_guess = 4.0 * opt.scan_step_nm;
  while (core_intensity(hi) > half && hi - out.lambda_nm < (lambda_hi_nm - lambda_lo_nm)) {
    hi += width_guess;
    width_guess *= 2.0;
  }
  if (core_intensity(lo) > half || core_intensity(hi) > half) {
    throw Error(ErrorCode::NoResonanceInWindow, "core intensity resonance not bracketed");
  }
  const double tol = 1e-6;
  const double left = detail::bisect_level(core_intensity, out.lambda_nm, lo, half, tol);
  const double right = detail::bisect_level(core_intensity, out.lambda_nm, hi, half, tol);
  out.fwhm_nm = right - left;
  out.free_spectral_range_nm =
      out.lambda_nm * out.lambda_nm / (2.0 * core_optical_thickness_nm(s, out.lambda_nm));
  out.finesse = out.free_spectral_range_nm / out.fwhm_nm;

  const FieldProfile f = field_profile(s, out.lambda_nm, theta_deg, pol);
  const Region& core = s.region(kCore);
  for (std::size_t j = 0; j < f.field.size(); ++j) {
    if (f.layer[j] >= core.begin && f.layer[j] < core.end) {
      out.peak_core_enhancement = std::max(out.peak_core_enhancement, f.intensity(j));
    }
  }
  std::tie(out.t_up, out.t_down) = mirror_transmittances(s, out.lambda_nm, theta_deg, pol);
  return out;
}

}  // namespace cptwin::stack
