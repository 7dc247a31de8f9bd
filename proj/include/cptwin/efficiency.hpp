#pragma once

// Cavity enhancement of the conversion efficiency, source brightness, and
// the count budget of the two-detector interferometer.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cptwin/error.hpp"

namespace cptwin::efficiency {

inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct CavityParams {
  double n = 0.0;       // mean effective index of the waveguide
  double finesse = 0.0;
  double t_up = 0.0;    // upper mirror transmittance
  double t_down = 0.0;  // lower mirror transmittance
};

// eta_cavity / eta_0 = 2 (1+n)^2 / (pi n) * F / (1 + |1 + T_down/T_up|)
inline double enhancement_factor(const CavityParams& p) {
  if (p.t_up == 0.0) throw Error(ErrorCode::DivisionDomain, "upper mirror transmittance is zero");
  if (!(p.n > 1.0) || !(p.finesse > 0.0) || !(p.t_up > 0.0 && p.t_up <= 1.0) ||
      !(p.t_down >= 0.0 && p.t_down <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cavity parameters need n > 1, F > 0, 0 < T <= 1");
  }
  const double prefactor = 2.0 * (1.0 + p.n) * (1.0 + p.n) / (std::numbers::pi * p.n);
  return prefactor * p.finesse / (1.0 + std::abs(1.0 + p.t_down / p.t_up));
}

struct PumpPulse {
  double peak_power_w = 10.0;
  double duration_s = 150e-9;
  double wavelength_nm = 760.0;
};

inline double pump_photons_per_pulse(const PumpPulse& pump) {
  if (!(pump.peak_power_w >= 0.0) || !(pump.duration_s >= 0.0) || !(pump.wavelength_nm > 0.0)) {
    throw Error(ErrorCode::NonPhysicalInput, "pump power, duration and wavelength must be non-negative");
  }
  const double photon_energy = kPlanck * kSpeedOfLight / (pump.wavelength_nm * 1e-9);
  return pump.peak_power_w * pump.duration_s / photon_energy;
}

// Generated pairs per pulse. length_scale rescales an efficiency quoted
// for a reference sample length to the illuminated length (pairs grow
// linearly with the interaction length).
inline double brightness(const PumpPulse& pump, double eta, double length_scale = 1.0) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error(ErrorCode::NonPhysicalInput, "conversion efficiency must lie in [0, 1)");
  if (!(length_scale >= 0.0)) throw Error(ErrorCode::NonPhysicalInput, "length scale must be non-negative");
  return eta * pump_photons_per_pulse(pump) * length_scale;
}

// Defaults reproduce the interferometer of the room-temperature experiment.
struct DetectionChain {
  double pairs_per_pulse = 10.0;       // both interactions
  double selected_fraction = 0.5;      // share kept by the polarisers
  double pulse_rate_hz = 3000.0;
  double pulse_duration_s = 150e-9;
  double facet_transmission = 0.70;
  double objective_transmission = 0.70;
  double filter_transmission = 0.50;
  double splitter_transmission = 0.50;
  double detector_efficiency = 0.20;
  double dark_rate_hz = 20.0;          // per detector
  double coincidence_window_s = 4e-9;
  double luminescence_per_nm_per_pulse = 0.05;
  double filter_bandwidth_nm = 10.0;
  double filter_centre_nm = 1520.0;

  double arm_transmission() const {
    return facet_transmission * objective_transmission * filter_transmission * splitter_transmission;
  }
};

inline void validate(const DetectionChain& d) {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(d.selected_fraction) || !prob(d.facet_transmission) || !prob(d.objective_transmission) ||
      !prob(d.filter_transmission) || !prob(d.splitter_transmission) || !prob(d.detector_efficiency)) {
    throw Error(ErrorCode::InvalidArgument, "detection-chain probabilities must lie in [0, 1]");
  }
  if (!(d.pairs_per_pulse >= 0.0) || !(d.pulse_rate_hz >= 0.0) || !(d.dark_rate_hz >= 0.0) ||
      !(d.luminescence_per_nm_per_pulse >= 0.0) || !(d.filter_bandwidth_nm >= 0.0) ||
      !(d.pulse_duration_s > 0.0) || !(d.coincidence_window_s >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "detection-chain rates must be non-negative");
  }
}

struct CountBudget {
  double arm_transmission = 0.0;
  double detection_probability = 0.0;   // per photon, arm x detector
  double selected_pairs_per_pulse = 0.0;
  double pair_singles_rate = 0.0;       // per detector, from the pairs
  double luminescence_rate = 0.0;       // per detector, inside the filter band
  double dark_rate = 0.0;
  double singles_rate = 0.0;            // per detector
  double true_coincidence_rate = 0.0;
  double accidental_rate = 0.0;
  double accidental_fraction = 0.0;     // accidental / (true + accidental)
};

// One detection opportunity per pump pulse. Accidentals are uncorrelated
// detections of the two detectors landing in the same coincidence window
// inside the pulse.
inline CountBudget expected_counts(const DetectionChain& d) {
  validate(d);
  CountBudget b;
  b.arm_transmission = d.arm_transmission();
  b.detection_probability = b.arm_transmission * d.detector_efficiency;
  b.selected_pairs_per_pulse = d.pairs_per_pulse * d.selected_fraction;
  b.pair_singles_rate = d.pulse_rate_hz * b.selected_pairs_per_pulse * b.detection_probability;
  b.luminescence_rate =
      d.pulse_rate_hz * d.luminescence_per_nm_per_pulse * d.filter_bandwidth_nm * b.detection_probability;
  b.dark_rate = d.dark_rate_hz;
  b.singles_rate = b.pair_singles_rate + b.luminescence_rate + b.dark_rate;
  b.true_coincidence_rate =
      d.pulse_rate_hz * b.selected_pairs_per_pulse * b.detection_probability * b.detection_probability;
  if (d.pulse_rate_hz > 0.0) {
    const double p = b.singles_rate / d.pulse_rate_hz;  // detections per detector per pulse
    const double overlap = std::min(1.0, d.coincidence_window_s / d.pulse_duration_s);
    b.accidental_rate = d.pulse_rate_hz * p * p * overlap;
  }
  const double total = b.true_coincidence_rate + b.accidental_rate;
  b.accidental_fraction = total > 0.0 ? b.accidental_rate / total : 0.0;
  return b;
}

}  // namespace cptwin::efficiency
