#pragma once

// Counterpropagating phase matching.
//
// Working in vacuum wavenumbers nu = 1/lambda (1/nm), energy conservation is
// nu_p = nu_s + nu_i and longitudinal momentum conservation reads
//
//   dk(nu_s) = 2 pi [ nu_p sin(theta) - ( n_s(nu_s) nu_s - n_i(nu_i) nu_i ) ] = 0,
//
// where the signal copropagates with the in-plane pump momentum and the
// idler counterpropagates. dk is strictly decreasing in nu_s (its slope is
// -2 pi (n_gs + n_gi)), so each angle has exactly one solution.

#include <cmath>
#include <concepts>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cptwin/error.hpp"
#include "cptwin/modes.hpp"

namespace cptwin::phasematch {

template <class P>
concept IndexProvider = requires(const P& p, double lambda_nm, Polarization pol) {
  { p.effective_index(lambda_nm, pol) } -> std::convertible_to<double>;
};

// Fundamental-mode effective indices of a layer stack.
//
// Keeps the last solution per polarization as a bracketing hint; results do
// not depend on the hint, but an instance must not be shared between threads.
class WaveguideIndex {
 public:
  explicit WaveguideIndex(const stack::LayerStack& device, modes::ModeSolverOptions opt = {})
      : stack_(modes::waveguide_view(device)), opt_(opt) {}

  double effective_index(double lambda_nm, Polarization pol) const {
    auto& hint = hints_[pol];
    const modes::ModeProblem problem(stack_, lambda_nm, pol);
    const double n = modes::fundamental_mode(problem, hint, opt_).n_eff;
    hint = n;
    return n;
  }

  double group_index(double lambda_nm, Polarization pol,
                     double step_nm = modes::kDefaultModeStepNm) const {
    const double n = effective_index(lambda_nm, pol);
    const double np = effective_index(lambda_nm + step_nm, pol);
    const double nm = effective_index(lambda_nm - step_nm, pol);
    return n - lambda_nm * (np - nm) / (2.0 * step_nm);
  }

  const stack::LayerStack& waveguide() const { return stack_; }

 private:
  stack::LayerStack stack_;
  modes::ModeSolverOptions opt_;
  mutable std::map<Polarization, std::optional<double>> hints_;
};

static_assert(IndexProvider<WaveguideIndex>);

struct Interaction {
  int id = 1;
  Polarization copropagating = Polarization::TE;
  Polarization counterpropagating = Polarization::TM;

  static Interaction one() { return {1, Polarization::TE, Polarization::TM}; }
  static Interaction two() { return {2, Polarization::TM, Polarization::TE}; }

  static Interaction from_id(int id) {
    if (id == 1) return one();
    if (id == 2) return two();
    throw Error(ErrorCode::InvalidArgument, "interaction id must be 1 or 2");
  }
};

struct PhaseMatchPoint {
  double theta_deg = 0.0;
  double lambda_p_nm = 0.0;
  Interaction interaction;
  double lambda_s_nm = 0.0;  // copropagating photon
  double lambda_i_nm = 0.0;  // counterpropagating photon
  double n_s = 0.0;
  double n_i = 0.0;
  double momentum_residual = 0.0;  // |dk| / k_p
};

struct SolverOptions {
  double half_window_nm = 150.0;  // around 2 lambda_p; widened x2 once
  int bracket_intervals = 16;
  double tolerance = 1e-12;  // |dk| / k_p
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

namespace detail {

// dk / (2 pi) at signal wavenumber nu_s, in 1/nm.
template <IndexProvider P>
double mismatch(double nu_s, double nu_p, double sin_theta, const Interaction& inter, const P& index) {
  const double nu_i = nu_p - nu_s;
  const double n_s = index.effective_index(1.0 / nu_s, inter.copropagating);
  const double n_i = index.effective_index(1.0 / nu_i, inter.counterpropagating);
  return nu_p * sin_theta - (n_s * nu_s - n_i * nu_i);
}

inline void check_angle(double theta_deg) {
  if (!(std::abs(theta_deg) < 90.0)) {
    throw Error(ErrorCode::InvalidArgument, "pump angle must satisfy |theta| < 90 deg");
  }
}

}  // namespace detail

// Longitudinal wavevector mismatch (1/nm) for a signal at lambda_s_nm; the
// idler takes the remaining pump energy.
template <IndexProvider P>
double delta_k(double lambda_s_nm, double theta_deg, double lambda_p_nm, const Interaction& inter,
               const P& index) {
  detail::check_angle(theta_deg);
  const double nu_p = 1.0 / lambda_p_nm;
  const double nu_s = 1.0 / lambda_s_nm;
  if (!(nu_s > 0.0 && nu_s < nu_p)) {
    throw Error(ErrorCode::InvalidArgument, "signal wavelength must exceed the pump wavelength");
  }
  return 2.0 * std::numbers::pi *
         detail::mismatch(nu_s, nu_p, std::sin(deg_to_rad(theta_deg)), inter, index);
}

template <IndexProvider P>
PhaseMatchPoint solve_pair(double theta_deg, double lambda_p_nm, const Interaction& inter, const P& index,
                           const SolverOptions& opt = {}) {
  detail::check_angle(theta_deg);
  if (!(lambda_p_nm > 0.0)) throw Error(ErrorCode::InvalidArgument, "pump wavelength must be positive");
  const double nu_p = 1.0 / lambda_p_nm;
  const double sin_theta = std::sin(deg_to_rad(theta_deg));
  const auto f = [&](double nu_s) { return detail::mismatch(nu_s, nu_p, sin_theta, inter, index); };

  for (double half : {opt.half_window_nm, 2.0 * opt.half_window_nm}) {
    const double centre = 2.0 * lambda_p_nm;
    const double lam_long = centre + half;
    const double lam_short = std::max(centre - half, lambda_p_nm * 1.0001);
    // Wavenumber grid over [1/lam_long, 1/lam_short]; f decreases with nu_s.
    const double lo = 1.0 / lam_long, hi = 1.0 / lam_short;
    double a = lo, fa = f(lo);
    std::optional<std::pair<double, double>> bracket;
    double fb_at = 0.0;
    for (int k = 1; k <= opt.bracket_intervals; ++k) {
      const double b = lo + (hi - lo) * k / opt.bracket_intervals;
      const double fb = f(b);
      if ((fa >= 0.0 && fb <= 0.0) || (fa <= 0.0 && fb >= 0.0)) {
        bracket = {a, b};
        fb_at = fb;
        break;
      }
      a = b;
      fa = fb;
    }
    if (!bracket) continue;

    auto [x0, x1] = *bracket;
    double f0 = fa;
    double root = std::abs(f0) <= std::abs(fb_at) ? x0 : x1;
    double f_root = std::min(std::abs(f0), std::abs(fb_at));
    for (int it = 0; it < 200 && f_root > opt.tolerance * nu_p; ++it) {
      const double mid = 0.5 * (x0 + x1);
      if (mid <= x0 || mid >= x1) break;
      const double fm = f(mid);
      if (std::abs(fm) < f_root) {
        root = mid;
        f_root = std::abs(fm);
      }
      if ((f0 >= 0.0 && fm >= 0.0) || (f0 <= 0.0 && fm <= 0.0)) {
        x0 = mid;
        f0 = fm;
      } else {
        x1 = mid;
      }
    }
    PhaseMatchPoint pt;
    pt.theta_deg = theta_deg;
    pt.lambda_p_nm = lambda_p_nm;
    pt.interaction = inter;
    pt.lambda_s_nm = 1.0 / root;
    pt.lambda_i_nm = 1.0 / (nu_p - root);
    pt.n_s = index.effective_index(pt.lambda_s_nm, inter.copropagating);
    pt.n_i = index.effective_index(pt.lambda_i_nm, inter.counterpropagating);
    pt.momentum_residual = f_root / nu_p;
    return pt;
  }
  throw Error(ErrorCode::NoSolutionInWindow,
              "no phase-matched pair within +-" + std::to_string(2.0 * opt.half_window_nm) +
                  " nm of " + std::to_string(2.0 * lambda_p_nm) + " nm at theta=" +
                  std::to_string(theta_deg) + " deg");
}

// Angle at which signal and idler are both at 2 lambda_p:
// sin(theta) = (n_co - n_counter) lambda_p / (2 lambda_p).
template <IndexProvider P>
double degeneracy_angle(const Interaction& inter, double lambda_p_nm, const P& index) {
  const double lambda_deg = 2.0 * lambda_p_nm;
  const double n_co = index.effective_index(lambda_deg, inter.copropagating);
  const double n_counter = index.effective_index(lambda_deg, inter.counterpropagating);
  const double s = (n_co - n_counter) * (lambda_p_nm / lambda_deg);
  if (std::abs(s) >= 1.0) throw Error(ErrorCode::NoSolutionInWindow, "no real degeneracy angle");
  return rad_to_deg(std::asin(s));
}

// The degenerate pair itself: both photons at exactly 2 lambda_p, at the
// degeneracy angle. The residual is evaluated, not assumed.
template <IndexProvider P>
PhaseMatchPoint degeneracy_point(const Interaction& inter, double lambda_p_nm, const P& index) {
  PhaseMatchPoint pt;
  pt.theta_deg = degeneracy_angle(inter, lambda_p_nm, index);
  pt.lambda_p_nm = lambda_p_nm;
  pt.interaction = inter;
  pt.lambda_s_nm = 2.0 * lambda_p_nm;
  pt.lambda_i_nm = 2.0 * lambda_p_nm;
  pt.n_s = index.effective_index(pt.lambda_s_nm, inter.copropagating);
  pt.n_i = index.effective_index(pt.lambda_i_nm, inter.counterpropagating);
  const double nu_p = 1.0 / lambda_p_nm;
  pt.momentum_residual =
      std::abs(detail::mismatch(0.5 * nu_p, nu_p, std::sin(deg_to_rad(pt.theta_deg)), inter, index)) / nu_p;
  return pt;
}

struct TuningRow {
  double theta_deg = 0.0;
  Interaction interaction;
  std::optional<PhaseMatchPoint> point;
  std::string error;        // set when the point failed
  bool crossing = false;    // signal/idler branches swap order next to this row
};

struct TuningCurve {
  std::vector<TuningRow> rows;  // ordered by interaction, then angle

  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.point ? 0 : 1;
    return n;
  }
};

template <IndexProvider P>
TuningCurve tuning_curve(double theta_min_deg, double theta_max_deg, double theta_step_deg,
                         double lambda_p_nm, const P& index, const SolverOptions& opt = {}) {
  if (!(theta_step_deg > 0.0) || !(theta_max_deg >= theta_min_deg)) {
    throw Error(ErrorCode::InvalidArgument, "tuning sweep needs min <= max and a positive step");
  }
  const auto count = static_cast<long>(std::floor((theta_max_deg - theta_min_deg) / theta_step_deg + 1e-9));
  TuningCurve out;
  for (const Interaction inter : {Interaction::one(), Interaction::two()}) {
    const std::size_t first = out.rows.size();
    for (long k = 0; k <= count; ++k) {
      TuningRow row;
      row.theta_deg = theta_min_deg + static_cast<double>(k) * theta_step_deg;
      row.interaction = inter;
      try {
        row.point = solve_pair(row.theta_deg, lambda_p_nm, inter, index, opt);
      } catch (const Error& e) {
        row.error = e.what();
      }
      out.rows.push_back(std::move(row));
    }
    // Flag the rows on either side of each signal/idler crossing.
    for (std::size_t k = first + 1; k < out.rows.size(); ++k) {
      const auto& a = out.rows[k - 1].point;
      const auto& b = out.rows[k].point;
      if (!a || !b) continue;
      const double da = a->lambda_s_nm - a->lambda_i_nm;
      const double db = b->lambda_s_nm - b->lambda_i_nm;
      if (da == 0.0 || db == 0.0 || (da > 0.0) != (db > 0.0)) {
        out.rows[k - 1].crossing = true;
        out.rows[k].crossing = true;
      }
    }
  }
  return out;
}

}  // namespace cptwin::phasematch
