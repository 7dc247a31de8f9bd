#pragma once

// Shared fixtures: a dispersionless test formula and an analytic
// three-layer slab oracle independent of the transfer-matrix solver.

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cptwin/materials.hpp"
#include "cptwin/stack.hpp"

namespace cptwin::fixtures {

// n(x) = c0 + c1 x at every wavelength.
inline materials::DispersionModel linear_model() {
  static const bool registered = [] {
    materials::register_formula("linear_test", [](std::span<const double> c, double x, double) {
      return c[0] + c[1] * x;
    });
    return true;
  }();
  (void)registered;
  return {"linear_test", {1.0, 3.0}, {100.0, 10000.0, 0.0, 1.0}};
}

// Composition giving index n under linear_model().
inline double x_for_index(double n) { return (n - 1.0) / 3.0; }

struct Slab {
  double n_cover = 1.0;
  double n_core = 3.4;
  double n_sub = 3.0;
  double thickness_nm = 500.0;
};

inline stack::LayerStack slab_stack(const Slab& s) {
  stack::LayerStack st;
  st.model = linear_model();
  st.ambient_index = s.n_cover;
  st.layers.push_back({materials::Composition(x_for_index(s.n_core)), s.thickness_nm, 0});
  st.substrate = stack::Medium::fixed(s.n_sub);
  return st;
}

// Dispersion relation of the asymmetric slab, mode order m:
//   kappa d - atan(p_c gamma_c / kappa) - atan(p_s gamma_s / kappa) - m pi = 0
// with p = 1 (TE) or n_core^2 / n_clad^2 (TM). Roots by a dense scan in
// n_eff followed by long-double bisection.
inline std::vector<double> slab_oracle(const Slab& s, double lambda_nm, Polarization pol,
                                       std::size_t scan_points = 200001) {
  using ld = long double;
  const ld k0 = 2.0L * std::numbers::pi_v<ld> / lambda_nm;
  const ld n1 = s.n_core, nc = s.n_cover, ns = s.n_sub;
  const ld pc = pol == Polarization::TE ? 1.0L : (n1 * n1) / (nc * nc);
  const ld ps = pol == Polarization::TE ? 1.0L : (n1 * n1) / (ns * ns);
  const auto f = [&](ld n, int m) {
    const ld kappa = k0 * std::sqrt(n1 * n1 - n * n);
    const ld gc = k0 * std::sqrt(n * n - nc * nc);
    const ld gs = k0 * std::sqrt(n * n - ns * ns);
    return kappa * s.thickness_nm - std::atan(pc * gc / kappa) - std::atan(ps * gs / kappa) -
           static_cast<ld>(m) * std::numbers::pi_v<ld>;
  };
  const ld lo = std::max(nc, ns), hi = n1;
  std::vector<double> roots;
  for (int m = 0;; ++m) {
    bool found = false;
    ld prev_n = hi - (hi - lo) * 1e-12L, prev_f = f(prev_n, m);
    for (std::size_t k = 1; k < scan_points; ++k) {
      const ld n = hi - (hi - lo) * (static_cast<ld>(k) / static_cast<ld>(scan_points - 1));
      const ld nn = k + 1 == scan_points ? lo + (hi - lo) * 1e-12L : n;
      const ld fn = f(nn, m);
      if ((prev_f < 0) != (fn < 0)) {
        ld a = nn, b = prev_n, fa = fn;
        for (int it = 0; it < 200; ++it) {
          const ld mid = 0.5L * (a + b);
          const ld fm = f(mid, m);
          if ((fm < 0) == (fa < 0)) {
            a = mid;
            fa = fm;
          } else {
            b = mid;
          }
        }
        roots.push_back(static_cast<double>(0.5L * (a + b)));
        found = true;
        break;
      }
      prev_n = nn;
      prev_f = fn;
    }
    if (!found) break;
  }
  return roots;
}

inline Slab random_slab(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cover(1.0, 3.0), core(3.2, 3.6), contrast(0.05, 0.5),
      thick(300.0, 1500.0);
  Slab s;
  s.n_core = core(rng);
  s.n_sub = s.n_core - contrast(rng);
  s.n_cover = std::min(cover(rng), s.n_sub);
  s.thickness_nm = thick(rng);
  return s;
}

}  // namespace cptwin::fixtures
