#pragma once

// Refractive index of Al(x)Ga(1-x)As below the direct gap.
//
// The default model is the modified single-effective-oscillator formula of
// Afromowitz (Solid State Commun. 15, 59, 1974):
//
//   n^2 - 1 = Ed/E0 + Ed E^2/E0^3 + (eta/pi) E^4 ln[(2E0^2 - Eg^2 - E^2)/(Eg^2 - E^2)]
//   eta     = pi Ed / (2 E0^3 (E0^2 - Eg^2))
//
// with E the photon energy in eV and the composition laws
//   E0 = 3.65 + 0.871x + 0.179x^2,  Ed = 36.1 - 2.45x,  Eg = 1.424 + 1.266x + 0.26x^2.
//
// Other formulas can be registered by name; a DispersionModel carries the
// formula name and its coefficient table so results stay reproducible.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cptwin/error.hpp"

namespace cptwin::materials {

inline constexpr double kHcEvNm = 1239.841984;  // h*c in eV*nm

// Aluminium mole fraction of Al(x)Ga(1-x)As.
class Composition {
 public:
  explicit Composition(double x) : x_(x) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "aluminium fraction must lie in [0, 1], got " + std::to_string(x));
    }
  }

  double x() const noexcept { return x_; }

  friend bool operator==(const Composition&, const Composition&) = default;

 private:
  double x_;
};

struct ValidityWindow {
  double lambda_min_nm = 0.0;
  double lambda_max_nm = 0.0;
  double x_min = 0.0;
  double x_max = 1.0;

  bool contains(double x, double lambda_nm) const {
    return lambda_nm >= lambda_min_nm && lambda_nm <= lambda_max_nm && x >= x_min && x <= x_max;
  }
};

// Evaluates n(x, lambda) from a coefficient table. Must throw
// Error(AboveBandgap) when the real-index regime is left.
using IndexFormula = std::function<double(std::span<const double> coefficients, double x,
                                          double lambda_nm)>;

struct DispersionModel {
  std::string name;     // formula identifier in the registry
  std::vector<double> coefficients;
  ValidityWindow window;
};

namespace detail {

inline double afromowitz_index(std::span<const double> c, double x, double lambda_nm) {
  if (c.size() != 8) {
    throw Error(ErrorCode::InvalidArgument, "afromowitz formula expects 8 coefficients");
  }
  const double e0 = c[0] + c[1] * x + c[2] * x * x;
  const double ed = c[3] + c[4] * x;
  const double eg = c[5] + c[6] * x + c[7] * x * x;
  const double e = kHcEvNm / lambda_nm;
  if (e >= eg) {
    throw Error(ErrorCode::AboveBandgap, "photon energy " + std::to_string(e) +
                                             " eV at or above gap " + std::to_string(eg) +
                                             " eV (x=" + std::to_string(x) + ")");
  }
  const double e2 = e * e;
  const double e03 = e0 * e0 * e0;
  const double eta = std::numbers::pi * ed / (2.0 * e03 * (e0 * e0 - eg * eg));
  const double log_term = std::log((2.0 * e0 * e0 - eg * eg - e2) / (eg * eg - e2));
  const double n2 = 1.0 + ed / e0 + ed * e2 / e03 + (eta / std::numbers::pi) * e2 * e2 * log_term;
  return std::sqrt(n2);
}

class FormulaRegistry {
 public:
  static FormulaRegistry& instance() {
    static FormulaRegistry registry;
    return registry;
  }

  void add(const std::string& name, IndexFormula formula) {
    std::lock_guard lock(mutex_);
    formulas_[name] = std::move(formula);
  }

  IndexFormula find(const std::string& name) const {
    std::lock_guard lock(mutex_);
    auto it = formulas_.find(name);
    if (it == formulas_.end()) {
      throw Error(ErrorCode::InvalidArgument, "unknown dispersion formula '" + name + "'");
    }
    return it->second;
  }

  bool contains(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return formulas_.count(name) != 0;
  }

 private:
  FormulaRegistry() { formulas_["afromowitz1974"] = afromowitz_index; }

  mutable std::mutex mutex_;
  std::map<std::string, IndexFormula> formulas_;
};

}  // namespace detail

inline void register_formula(const std::string& name, IndexFormula formula) {
  detail::FormulaRegistry::instance().add(name, std::move(formula));
}

inline bool has_formula(const std::string& name) {
  return detail::FormulaRegistry::instance().contains(name);
}

inline DispersionModel afromowitz_model() {
  return DispersionModel{
      "afromowitz1974",
      {3.65, 0.871, 0.179, 36.1, -2.45, 1.424, 1.266, 0.26},
      ValidityWindow{650.0, 2000.0, 0.0, 1.0},
  };
}

inline const DispersionModel& default_model() {
  static const DispersionModel model = afromowitz_model();
  return model;
}

inline double refractive_index(Composition c, double lambda_nm,
                               const DispersionModel& model = default_model()) {
  if (!model.window.contains(c.x(), lambda_nm)) {
    throw Error(ErrorCode::OutOfValidityWindow,
                "model '" + model.name + "' not valid at x=" + std::to_string(c.x()) +
                    ", lambda=" + std::to_string(lambda_nm) + " nm");
  }
  const IndexFormula formula = detail::FormulaRegistry::instance().find(model.name);
  return formula(model.coefficients, c.x(), lambda_nm);
}

inline constexpr double kDefaultGroupIndexStepNm = 0.1;

// n_g = n - lambda dn/dlambda with a central difference of half-width step_nm.
inline double group_index(Composition c, double lambda_nm,
                          const DispersionModel& model = default_model(),
                          double step_nm = kDefaultGroupIndexStepNm) {
  if (!(step_nm > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  }
  const double n = refractive_index(c, lambda_nm, model);
  const double n_plus = refractive_index(c, lambda_nm + step_nm, model);
  const double n_minus = refractive_index(c, lambda_nm - step_nm, model);
  const double dn = (n_plus - n_minus) / (2.0 * step_nm);
  return n - lambda_nm * dn;
}

}  // namespace cptwin::materials
