#pragma once

// Guided TE/TM modes of a planar multilayer between two semi-infinite media.
//
// With the transverse coordinate scaled by k0 and u = E_y (TE) or H_y (TM),
// each layer maps (u, q u') across its thickness with
//
//   [ cos(kd)           sin(kd) / (q k) ]      k^2 = n_j^2 - n_eff^2
//   [ -q k sin(kd)      cos(kd)         ]      q = 1 (TE), 1/n_j^2 (TM)
//
// (cosh/sinh when k^2 < 0). Starting from a field decaying into the
// substrate, a guided mode is an n_eff for which the field also decays into
// the cover. The mismatch is real and continuous in n_eff, so roots are
// bracketed on a fixed grid and refined by bisection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "cptwin/error.hpp"
#include "cptwin/stack.hpp"

namespace cptwin::modes {

using stack::LayerStack;

struct ModeProfile {
  std::vector<double> position_nm;  // measured from the top surface, downward
  std::vector<double> amplitude;    // E_y (TE) or H_y (TM), max |amplitude| = 1
};

struct GuidedMode {
  Polarization pol = Polarization::TE;
  double lambda_nm = 0.0;
  double n_eff = 0.0;
  double n_group = std::numeric_limits<double>::quiet_NaN();
  int order = 0;          // number of field zeros; 0 = fundamental
  double residual = 0.0;  // normalized dispersion mismatch at n_eff
  std::optional<ModeProfile> profile;
};

struct ModeSolverOptions {
  double grid_step = 1e-4;   // bracketing grid in n_eff
  double edge_margin = 1e-6; // distance of the search window from the index bounds
  int refine_factor = 10;    // grid refinement before declaring absence
};

inline constexpr double kDefaultModeStepNm = 0.1;

// Indices of a stack frozen at one wavelength, ready for repeated
// dispersion-function evaluations.
class ModeProblem {
 public:
  ModeProblem(const LayerStack& s, double lambda_nm, Polarization pol)
      : pol_(pol), lambda_nm_(lambda_nm), k0_(2.0 * std::numbers::pi / lambda_nm) {
    if (s.layers.empty()) throw Error(ErrorCode::NonGuidingStack, "stack has no layers");
    n_cover_ = s.ambient_index;
    n_sub_ = s.substrate.index(lambda_nm, s.model);
    n_layers_ = s.layer_indices(lambda_nm);
    thickness_.reserve(s.layers.size());
    for (const auto& l : s.layers) thickness_.push_back(l.thickness_nm * k0_);
  }

  double lower_bound() const { return std::max(n_cover_, n_sub_); }
  double upper_bound() const { return *std::max_element(n_layers_.begin(), n_layers_.end()); }
  Polarization pol() const { return pol_; }
  double lambda_nm() const { return lambda_nm_; }

  // Normalized mismatch in [-1, 1]; zero on a guided mode.
  double mismatch(double n_eff) const {
    double u = 1.0;
    double v = q(n_sub_) * decay(n_sub_, n_eff);
    for (std::size_t j = n_layers_.size(); j-- > 0;) {
      step(j, n_eff, u, v);
      const double scale = std::abs(u) + std::abs(v);
      u /= scale;
      v /= scale;
    }
    const double w = q(n_cover_) * decay(n_cover_, n_eff);
    return (v + w * u) / (std::abs(v) + std::abs(w * u));
  }

  // Zeros of the field through the stack for the given n_eff.
  int count_nodes(double n_eff) const {
    double u = 1.0;
    double v = q(n_sub_) * decay(n_sub_, n_eff);
    int nodes = 0;
    for (std::size_t j = n_layers_.size(); j-- > 0;) {
      const double n = n_layers_[j];
      const double k2 = n * n - n_eff * n_eff;
      const double qj = q(n);
      if (k2 > 0.0) {
        const double k = std::sqrt(k2);
        const double phi = std::atan2(v / (qj * k), u);
        const double kd = k * thickness_[j];
        const double pi = std::numbers::pi;
        nodes += static_cast<int>(std::floor((kd - phi - pi / 2.0) / pi) -
                                  std::floor((-phi - pi / 2.0) / pi));
        step(j, n_eff, u, v);
      } else {
        const double before = u;
        step(j, n_eff, u, v);
        if ((before > 0.0 && u <= 0.0) || (before < 0.0 && u >= 0.0)) ++nodes;
      }
      const double scale = std::abs(u) + std::abs(v);
      u /= scale;
      v /= scale;
    }
    return nodes;
  }

  ModeProfile profile(double n_eff, std::size_t samples_per_layer = 10) const {
    ModeProfile out;
    const std::size_t nl = n_layers_.size();
    std::vector<double> pos_k, amp;
    double u = 1.0;
    double v = q(n_sub_) * decay(n_sub_, n_eff);
    double x = 0.0;  // scaled height above the substrate
    pos_k.push_back(x);
    amp.push_back(u);
    for (std::size_t j = nl; j-- > 0;) {
      for (std::size_t k = 1; k <= samples_per_layer; ++k) {
        double uu = u, vv = v;
        const double frac = static_cast<double>(k) / static_cast<double>(samples_per_layer);
        step_partial(j, n_eff, thickness_[j] * frac, uu, vv);
        pos_k.push_back(x + thickness_[j] * frac);
        amp.push_back(uu);
      }
      step(j, n_eff, u, v);
      x += thickness_[j];
    }
    const double total = x;
    double peak = 0.0;
    for (double a : amp) peak = std::max(peak, std::abs(a));
    for (std::size_t i = pos_k.size(); i-- > 0;) {
      out.position_nm.push_back((total - pos_k[i]) / k0_);
      out.amplitude.push_back(amp[i] / peak);
    }
    return out;
  }

 private:
  double q(double n) const { return pol_ == Polarization::TE ? 1.0 : 1.0 / (n * n); }

  static double decay(double n_outer, double n_eff) {
    return std::sqrt(std::max(0.0, n_eff * n_eff - n_outer * n_outer));
  }

  void step(std::size_t j, double n_eff, double& u, double& v) const {
    step_partial(j, n_eff, thickness_[j], u, v);
  }

  void step_partial(std::size_t j, double n_eff, double d, double& u, double& v) const {
    const double n = n_layers_[j];
    const double k2 = n * n - n_eff * n_eff;
    const double qj = q(n);
    double c = 1.0, s = d, ks = 0.0;  // cos, sin(kd)/k, -k^2 sin(kd)/k
    if (k2 > 0.0) {
      const double k = std::sqrt(k2);
      c = std::cos(k * d);
      s = std::sin(k * d) / k;
      ks = -k2 * s;
    } else if (k2 < 0.0) {
      const double g = std::sqrt(-k2);
      c = std::cosh(g * d);
      s = std::sinh(g * d) / g;
      ks = -k2 * s;
    }
    const double nu = c * u + s / qj * v;
    const double nv = qj * ks * u + c * v;
    u = nu;
    v = nv;
  }

  Polarization pol_;
  double lambda_nm_;
  double k0_;
  double n_cover_ = 1.0;
  double n_sub_ = 1.0;
  std::vector<double> n_layers_;
  std::vector<double> thickness_;  // scaled by k0
};

namespace detail {

struct Grid {
  double top = 0.0;
  double step = 0.0;
  long count = 0;  // number of intervals
  double at(long k) const { return top - static_cast<double>(k) * step; }
};

inline Grid search_grid(const ModeProblem& p, const ModeSolverOptions& opt, double step) {
  Grid g;
  g.top = p.upper_bound() - opt.edge_margin;
  const double bottom = p.lower_bound() + opt.edge_margin;
  g.count = std::max(1L, static_cast<long>(std::ceil((g.top - bottom) / step)));
  g.step = (g.top - bottom) / static_cast<double>(g.count);
  return g;
}

inline bool sign_change(double a, double b) { return (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0); }

// Bisection inside [lo, hi] on a sign change of the mismatch.
inline double bisect_root(const ModeProblem& p, double lo, double hi) {
  double f_lo = p.mismatch(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = p.mismatch(mid);
    if (f_mid == 0.0) return mid;
    if (sign_change(f_lo, f_mid)) {
      hi = mid;
    } else {
      lo = mid;
      f_lo = f_mid;
    }
  }
  const double f_a = std::abs(p.mismatch(lo));
  const double f_b = std::abs(p.mismatch(hi));
  return f_a <= f_b ? lo : hi;
}

inline GuidedMode make_mode(const ModeProblem& p, double n_eff) {
  GuidedMode m;
  m.pol = p.pol();
  m.lambda_nm = p.lambda_nm();
  m.n_eff = n_eff;
  m.order = p.count_nodes(n_eff);
  m.residual = std::abs(p.mismatch(n_eff));
  return m;
}

inline void check_guiding(const ModeProblem& p) {
  if (p.upper_bound() < p.lower_bound()) {
    throw Error(ErrorCode::NonGuidingStack, "every layer index lies below the outer media");
  }
}

}  // namespace detail

inline std::vector<GuidedMode> guided_modes(const ModeProblem& p, const ModeSolverOptions& opt = {}) {
  detail::check_guiding(p);
  std::vector<GuidedMode> out;
  for (double step : {opt.grid_step, opt.grid_step / opt.refine_factor}) {
    if (p.upper_bound() - p.lower_bound() <= 2.0 * opt.edge_margin) break;
    const detail::Grid g = detail::search_grid(p, opt, step);
    double f_prev = p.mismatch(g.at(0));
    for (long k = 1; k <= g.count; ++k) {
      const double f = p.mismatch(g.at(k));
      if (detail::sign_change(f_prev, f)) {
        out.push_back(detail::make_mode(p, detail::bisect_root(p, g.at(k), g.at(k - 1))));
      }
      f_prev = f;
    }
    if (!out.empty()) break;
  }
  if (out.empty()) {
    throw Error(ErrorCode::NoGuidedMode, std::string("no guided ") + to_string(p.pol()) +
                                             " mode at " + std::to_string(p.lambda_nm()) + " nm");
  }
  std::sort(out.begin(), out.end(), [](const GuidedMode& a, const GuidedMode& b) { return a.n_eff > b.n_eff; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].order = static_cast<int>(i);
  return out;
}

inline std::vector<GuidedMode> guided_modes(const LayerStack& s, double lambda_nm, Polarization pol,
                                            const ModeSolverOptions& opt = {}) {
  return guided_modes(ModeProblem(s, lambda_nm, pol), opt);
}

// Fundamental mode only. A hint (n_eff at a nearby wavelength) limits the
// bracketing to the neighbourhood of the hint; the candidate is accepted only
// if its field has no zeros, otherwise the full top-down scan runs. Brackets
// always lie on the same grid, so the result does not depend on the hint.
inline GuidedMode fundamental_mode(const ModeProblem& p, std::optional<double> hint = std::nullopt,
                                   const ModeSolverOptions& opt = {}) {
  detail::check_guiding(p);
  const detail::Grid g = detail::search_grid(p, opt, opt.grid_step);
  if (hint && *hint < g.top && *hint > g.at(g.count)) {
    const long k0 = static_cast<long>(std::floor((g.top - *hint) / g.step));
    constexpr long kRadius = 64;
    std::vector<double> f(static_cast<std::size_t>(2 * kRadius + 2), std::numeric_limits<double>::quiet_NaN());
    const auto value = [&](long k) {
      double& slot = f[static_cast<std::size_t>(k - k0 + kRadius)];
      if (std::isnan(slot)) slot = p.mismatch(g.at(k));
      return slot;
    };
    for (long r = 0; r <= kRadius; ++r) {
      for (long k : {k0 - r, k0 + r}) {
        if (k < 0 || k + 1 > g.count || k - k0 + kRadius < 0 || k + 1 - k0 + kRadius > 2 * kRadius + 1) continue;
        if (detail::sign_change(value(k), value(k + 1))) {
          const double root = detail::bisect_root(p, g.at(k + 1), g.at(k));
          if (p.count_nodes(root) == 0) {
            GuidedMode m = detail::make_mode(p, root);
            m.order = 0;
            return m;
          }
          r = kRadius + 1;  // wrong mode family; fall back to the full scan
          break;
        }
      }
    }
  }
  const auto modes = guided_modes(p, opt);
  return modes.front();
}

inline GuidedMode fundamental_mode(const LayerStack& s, double lambda_nm, Polarization pol,
                                   std::optional<double> hint = std::nullopt,
                                   const ModeSolverOptions& opt = {}) {
  return fundamental_mode(ModeProblem(s, lambda_nm, pol), hint, opt);
}

// n_g = n_eff - lambda dn_eff/dlambda by central difference, following the
// mode of the given order across the step.
inline double mode_group_index(const LayerStack& s, double lambda_nm, Polarization pol, int order = 0,
                               double step_nm = kDefaultModeStepNm, const ModeSolverOptions& opt = {}) {
  if (!(step_nm > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  const auto centre = guided_modes(s, lambda_nm, pol, opt);
  if (order < 0 || static_cast<std::size_t>(order) >= centre.size()) {
    throw Error(ErrorCode::NoGuidedMode, "mode order " + std::to_string(order) + " not guided");
  }
  const auto idx = static_cast<std::size_t>(order);
  const double n0 = centre[idx].n_eff;
  double gap = std::numeric_limits<double>::infinity();
  if (idx > 0) gap = std::min(gap, centre[idx - 1].n_eff - n0);
  if (idx + 1 < centre.size()) gap = std::min(gap, n0 - centre[idx + 1].n_eff);

  const auto tracked = [&](double lam) {
    const auto modes = guided_modes(s, lam, pol, opt);
    if (idx >= modes.size() || std::abs(modes[idx].n_eff - n0) >= 0.5 * gap) {
      throw Error(ErrorCode::ModeTrackingLost, "mode order " + std::to_string(order) +
                                                   " changes across the finite-difference step");
    }
    return modes[idx].n_eff;
  };
  const double n_plus = tracked(lambda_nm + step_nm);
  const double n_minus = tracked(lambda_nm - step_nm);
  return n0 - lambda_nm * (n_plus - n_minus) / (2.0 * step_nm);
}

// n_eff(TE, 0) - n_eff(TM, 0)
inline double birefringence(const LayerStack& s, double lambda_nm, const ModeSolverOptions& opt = {}) {
  return fundamental_mode(s, lambda_nm, Polarization::TE, std::nullopt, opt).n_eff -
         fundamental_mode(s, lambda_nm, Polarization::TM, std::nullopt, opt).n_eff;
}

// The same layers with the substrate replaced by the lowest-index alloy of
// the bottom region, i.e. the lower cladding as seen by a guided mode. The
// thick lower mirror isolates telecom modes from the (higher-index) GaAs
// substrate, which would otherwise make every mode leaky.
inline LayerStack waveguide_view(const LayerStack& s) {
  LayerStack out = s;
  const stack::Region* bottom = s.find_region(stack::kBottomDbr);
  const std::size_t begin = bottom ? bottom->begin : s.layers.size() - 1;
  const std::size_t end = bottom ? bottom->end : s.layers.size();
  double lowest_x = -1.0;
  for (std::size_t j = begin; j < end; ++j) {
    lowest_x = std::max(lowest_x, s.layers[j].composition.x());
  }
  out.substrate = stack::Medium::alloy(lowest_x);
  return out;
}

}  // namespace cptwin::modes
