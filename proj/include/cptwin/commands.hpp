#pragma once

// Figure-reproduction commands. Each writes its tables (CSV or JSON) plus a
// deterministic metadata sidecar into the output directory and returns a
// RunReport together with the computed data.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cptwin/config.hpp"
#include "cptwin/efficiency.hpp"
#include "cptwin/error.hpp"
#include "cptwin/hom.hpp"
#include "cptwin/io.hpp"
#include "cptwin/modes.hpp"
#include "cptwin/phasematch.hpp"
#include "cptwin/spectra.hpp"
#include "cptwin/stack.hpp"

namespace cptwin::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum class Format { Csv, Json };

struct RunOptions {
  fs::path out_dir = ".";
  Format format = Format::Csv;
};

struct RunReport {
  std::string command;
  std::string config_hash;
  std::vector<std::string> outputs;
  double elapsed_s = 0.0;
  std::vector<std::string> warnings;

  json to_json() const {
    return json{{"command", command},     {"config_hash", config_hash}, {"outputs", outputs},
                {"elapsed_s", elapsed_s}, {"warnings", warnings}};
  }
};

namespace detail {

class Session {
 public:
  Session(std::string command, const config::DeviceConfig& cfg, const RunOptions& opt)
      : opt_(opt), start_(std::chrono::steady_clock::now()) {
    report_.command = std::move(command);
    report_.config_hash = config::config_hash(cfg.source);
    dispersion_ = config::model_to_json(cfg.stack.model);
  }

  // Writes `stem`.csv or `stem`.json depending on the format.
  void table(const std::string& stem, const io::Table& t) {
    if (opt_.format == Format::Csv) {
      file(stem + ".csv", io::to_csv(t));
    } else {
      file(stem + ".json", io::dump(io::to_json(t)));
    }
  }

  void sidecar(const std::string& stem, json meta) {
    meta["command"] = report_.command;
    meta["config_hash"] = report_.config_hash;
    meta["dispersion_model"] = dispersion_;
    file(stem + ".meta.json", io::dump(meta));
  }

  void json_file(const std::string& name, const json& j) { file(name, io::dump(j)); }

  void warn(std::string w) { report_.warnings.push_back(std::move(w)); }

  RunReport finish() {
    report_.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return report_;
  }

 private:
  void file(const std::string& name, const std::string& text) {
    const fs::path p = opt_.out_dir / name;
    io::write_text(p, text);
    report_.outputs.push_back(p.string());
  }

  RunOptions opt_;
  json dispersion_;
  RunReport report_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string d(double v, int decimals) { return io::fixed(v, decimals); }
inline std::string g(double v) { return io::general(v, 10); }

}  // namespace detail

// ---------------------------------------------------------------------------
// stack

struct StackArgs {
  double lambda_min_nm = 740.0;
  double lambda_max_nm = 780.0;
  double step_nm = 0.05;
  double theta_deg = 0.0;
  Polarization pol = Polarization::TE;
};

inline StackArgs stack_args(const config::DeviceConfig& c) {
  StackArgs a;
  a.lambda_min_nm = c.resonance.lambda_min_nm;
  a.lambda_max_nm = c.resonance.lambda_max_nm;
  return a;
}

struct StackRun {
  RunReport report;
  stack::Resonance resonance;
  std::size_t flagged_row = 0;
};

inline StackRun cmd_stack(const config::DeviceConfig& cfg, const StackArgs& a, const RunOptions& opt) {
  detail::Session session("stack", cfg, opt);
  const auto& s = cfg.stack;
  const auto res = stack::find_resonance(s, a.lambda_min_nm, a.lambda_max_nm, a.theta_deg, a.pol);
  const auto grid = spectra::uniform_grid(a.lambda_min_nm, a.lambda_max_nm, a.step_nm);

  StackRun run;
  run.resonance = res;
  std::size_t nearest = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (std::abs(grid[k] - res.lambda_nm) < std::abs(grid[nearest] - res.lambda_nm)) nearest = k;
  }
  run.flagged_row = nearest;

  io::Table refl{{"lambda_nm", "reflectance", "transmittance", "resonance"}, {}};
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto r = stack::stack_response(s, grid[k], a.theta_deg, a.pol);
    refl.add({detail::d(grid[k], 4), detail::d(r.reflectance, 10), detail::d(r.transmittance, 10),
              k == nearest ? "1" : "0"});
  }
  session.table("stack_reflectance", refl);

  // Field and index profile at the resonance, the optical view of the structure.
  const auto field = stack::field_profile(s, res.lambda_nm, a.theta_deg, a.pol);
  const auto n = s.layer_indices(res.lambda_nm);
  io::Table prof{{"depth_nm", "layer", "x", "index", "intensity"}, {}};
  for (std::size_t k = 0; k < field.depth_nm.size(); ++k) {
    const auto j = field.layer[k];
    prof.add({detail::d(field.depth_nm[k], 4), std::to_string(j), detail::d(s.layers[j].composition.x(), 3),
              detail::d(n[j], 8), detail::d(field.intensity(k), 8)});
  }
  session.table("stack_field", prof);

  session.sidecar("stack", {{"theta_deg", a.theta_deg},
                            {"polarization", to_string(a.pol)},
                            {"lambda_min_nm", a.lambda_min_nm},
                            {"lambda_max_nm", a.lambda_max_nm},
                            {"step_nm", a.step_nm},
                            {"layers", s.layers.size()},
                            {"total_thickness_nm", s.total_thickness_nm()},
                            {"resonance",
                             {{"lambda_nm", res.lambda_nm},
                              {"reflectance", res.reflectance},
                              {"finesse", res.finesse},
                              {"fwhm_nm", res.fwhm_nm},
                              {"free_spectral_range_nm", res.free_spectral_range_nm},
                              {"t_up", res.t_up},
                              {"t_down", res.t_down},
                              {"peak_core_enhancement", res.peak_core_enhancement}}},
                            {"flagged_lambda_nm", grid[nearest]}});
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// modes

struct ModesArgs {
  double lambda_nm = 1520.0;
};

struct ModesRun {
  RunReport report;
  std::vector<modes::GuidedMode> te, tm;
};

inline ModesRun cmd_modes(const config::DeviceConfig& cfg, const ModesArgs& a, const RunOptions& opt) {
  detail::Session session("modes", cfg, opt);
  const auto wg = modes::waveguide_view(cfg.stack);
  ModesRun run;
  io::Table t{{"polarization", "order", "lambda_nm", "n_eff", "n_group"}, {}};
  for (const Polarization pol : {Polarization::TE, Polarization::TM}) {
    auto found = modes::guided_modes(wg, a.lambda_nm, pol);
    for (auto& m : found) {
      try {
        m.n_group = modes::mode_group_index(wg, a.lambda_nm, pol, m.order);
      } catch (const Error& e) {
        session.warn(std::string(to_string(pol)) + std::to_string(m.order) + ": " + e.what());
      }
      t.add({to_string(pol), std::to_string(m.order), detail::d(a.lambda_nm, 4), detail::d(m.n_eff, 10),
             detail::d(m.n_group, 8)});
    }
    (pol == Polarization::TE ? run.te : run.tm) = std::move(found);
  }
  session.table("modes", t);
  session.sidecar("modes", {{"lambda_nm", a.lambda_nm},
                            {"lower_cladding_x", wg.substrate.composition->x()},
                            {"birefringence", run.te.front().n_eff - run.tm.front().n_eff}});
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// tuning

struct TuningArgs {
  double theta_min_deg = -1.0;
  double theta_max_deg = 4.0;
  double theta_step_deg = 0.1;
  double lambda_p_nm = 760.0;
};

inline TuningArgs tuning_args(const config::DeviceConfig& c) {
  TuningArgs a;
  a.lambda_p_nm = c.pump.wavelength_nm;
  return a;
}

struct TuningRun {
  RunReport report;
  phasematch::TuningCurve curve;
};

inline TuningRun cmd_tuning(const config::DeviceConfig& cfg, const TuningArgs& a, const RunOptions& opt) {
  detail::Session session("tuning", cfg, opt);
  const phasematch::WaveguideIndex index(cfg.stack);
  TuningRun run;
  run.curve = phasematch::tuning_curve(a.theta_min_deg, a.theta_max_deg, a.theta_step_deg, a.lambda_p_nm, index);
  if (run.curve.failures() == run.curve.rows.size()) {
    throw Error(ErrorCode::NoSolutionInWindow, "every tuning point failed");
  }
  io::Table t{{"interaction", "theta_deg", "lambda_s_nm", "lambda_i_nm", "polarization_s", "polarization_i",
               "crossing", "status"},
              {}};
  for (const auto& r : run.curve.rows) {
    const auto& in = r.interaction;
    if (r.point) {
      t.add({std::to_string(in.id), detail::d(r.theta_deg, 4), detail::d(r.point->lambda_s_nm, 6),
             detail::d(r.point->lambda_i_nm, 6), to_string(in.copropagating), to_string(in.counterpropagating),
             r.crossing ? "1" : "0", "ok"});
    } else {
      t.add({std::to_string(in.id), detail::d(r.theta_deg, 4), "nan", "nan", to_string(in.copropagating),
             to_string(in.counterpropagating), "0", "failed"});
      session.warn("interaction " + std::to_string(in.id) + " theta " + detail::d(r.theta_deg, 4) + ": " + r.error);
    }
  }
  session.table("tuning", t);
  json degeneracy = json::object();
  for (const auto inter : {phasematch::Interaction::one(), phasematch::Interaction::two()}) {
    degeneracy[std::to_string(inter.id)] = phasematch::degeneracy_angle(inter, a.lambda_p_nm, index);
  }
  session.sidecar("tuning", {{"lambda_p_nm", a.lambda_p_nm},
                             {"theta_min_deg", a.theta_min_deg},
                             {"theta_max_deg", a.theta_max_deg},
                             {"theta_step_deg", a.theta_step_deg},
                             {"degeneracy_angle_deg", degeneracy},
                             {"failures", run.curve.failures()}});
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumArgs {
  double theta_deg = 3.1;
  double lambda_p_nm = 759.5;
};

inline SpectrumArgs spectrum_args(const config::DeviceConfig& c) {
  return {c.spectrum.fig_theta_deg, c.spectrum.fig_lambda_p_nm};
}

struct SpectrumRun {
  RunReport report;
  spectra::Spectrum spectrum;
  std::vector<spectra::Peak> peaks;
};

inline SpectrumRun cmd_spectrum(const config::DeviceConfig& cfg, const SpectrumArgs& a, const RunOptions& opt) {
  detail::Session session("spectrum", cfg, opt);
  const phasematch::WaveguideIndex index(cfg.stack);
  spectra::FluorescenceOptions fo;
  fo.pump_fwhm_nm = cfg.pump.linewidth_nm;
  fo.monochromator_fwhm_nm = cfg.spectrum.monochromator_fwhm_nm;
  fo.noise_floor = cfg.spectrum.noise_floor;
  fo.long_wavelength_attenuation = cfg.spectrum.long_wavelength_attenuation;
  fo.step_nm = cfg.spectrum.step_nm;
  fo.half_span_nm = cfg.spectrum.half_span_nm;

  SpectrumRun run;
  run.spectrum = spectra::fluorescence_spectrum(a.theta_deg, a.lambda_p_nm, cfg.sample.length_mm, index, fo);
  run.peaks = spectra::fluorescence_peaks(run.spectrum);

  io::Table t{{"lambda_nm", "intensity"}, {}};
  for (std::size_t k = 0; k < run.spectrum.size(); ++k) {
    t.add({detail::d(run.spectrum.lambda_nm[k], 4), detail::d(run.spectrum.intensity[k], 10)});
  }
  session.table("spectrum", t);

  json peaks = json::array();
  for (const auto& p : run.peaks) peaks.push_back({{"lambda_nm", p.lambda_nm}, {"intensity", p.intensity}});
  session.sidecar("spectrum", {{"theta_deg", a.theta_deg},
                               {"lambda_p_nm", a.lambda_p_nm},
                               {"length_mm", cfg.sample.length_mm},
                               {"kernels", run.spectrum.meta.kernels},
                               {"notes", run.spectrum.meta.notes},
                               {"peaks", peaks}});
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// hom

struct HomSimulateRun {
  RunReport report;
  hom::HomScan scan;
  hom::DipModel truth;
};

inline HomSimulateRun cmd_hom_simulate(const config::DeviceConfig& cfg, const RunOptions& opt) {
  detail::Session session("hom simulate", cfg, opt);
  HomSimulateRun run;
  run.truth = config::dip_model(cfg);
  const auto rates = hom::rates_from_chain(cfg.detection);
  run.scan = hom::simulate_scan(run.truth, rates, hom::scan_positions(cfg.hom.half_span_mm, cfg.hom.points),
                                cfg.hom.dwell_s, cfg.seed);
  session.table("hom_scan", io::scan_table(run.scan));
  session.sidecar("hom_scan", {{"seed", cfg.seed},
                               {"dwell_s", cfg.hom.dwell_s},
                               {"lambda_nm", run.truth.lambda_nm},
                               {"true_visibility", run.truth.visibility},
                               {"true_delta_lambda_nm", run.truth.delta_lambda_nm},
                               {"true_dip_fwhm_mm", hom::dip_fwhm_mm(run.truth.lambda_nm, run.truth.delta_lambda_nm)},
                               {"coincidence_rate_hz", rates.coincidence_hz},
                               {"accidental_rate_hz", rates.accidental_hz}});
  run.report = session.finish();
  return run;
}

struct HomFitRun {
  RunReport report;
  hom::FitResult fit;
  double dip_fwhm_mm = 0.0;
};

inline HomFitRun cmd_hom_fit(const config::DeviceConfig& cfg, const fs::path& input, const RunOptions& opt) {
  detail::Session session("hom fit", cfg, opt);
  const auto scan = io::read_scan(input);
  HomFitRun run;
  run.fit = hom::fit_dip(scan, cfg.hom.lambda_nm);
  run.dip_fwhm_mm = hom::dip_fwhm_mm(cfg.hom.lambda_nm, run.fit.delta_lambda_nm);
  const auto& f = run.fit;
  session.json_file("hom_fit.json", {{"command", "hom fit"},
                                     {"config_hash", config::config_hash(cfg.source)},
                                     {"input", input.string()},
                                     {"lambda_nm", cfg.hom.lambda_nm},
                                     {"visibility", f.visibility},
                                     {"visibility_error", f.visibility_error},
                                     {"delta_lambda_nm", f.delta_lambda_nm},
                                     {"delta_lambda_error_nm", f.delta_lambda_error_nm},
                                     {"dip_fwhm_mm", run.dip_fwhm_mm},
                                     {"baseline_net_counts", f.baseline},
                                     {"baseline_points", f.baseline_points},
                                     {"chi_square", f.chi_square},
                                     {"reduced_chi_square", f.reduced_chi_square},
                                     {"iterations", f.iterations},
                                     {"converged", f.converged}});
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// enhancement

struct EnhancementRun {
  RunReport report;
  efficiency::CavityParams params;
  double factor = 0.0;
};

inline EnhancementRun cmd_enhancement(const config::DeviceConfig& cfg, const RunOptions& opt) {
  detail::Session session("enhancement", cfg, opt);
  const auto& o = cfg.enhancement;
  EnhancementRun run;
  json sources = json::object();

  const bool need_cavity = o.finesse < 0.0 || o.t_up < 0.0 || o.t_down < 0.0;
  stack::Resonance res;
  if (need_cavity) {
    res = stack::find_resonance(cfg.stack, cfg.resonance.lambda_min_nm, cfg.resonance.lambda_max_nm, 0.0,
                                Polarization::TE);
  }
  if (o.n >= 0.0) {
    run.params.n = o.n;
    sources["n"] = "override";
  } else {
    const phasematch::WaveguideIndex index(cfg.stack);
    const double lam = 2.0 * cfg.pump.wavelength_nm;
    run.params.n =
        0.5 * (index.effective_index(lam, Polarization::TE) + index.effective_index(lam, Polarization::TM));
    sources["n"] = "mean TE/TM fundamental effective index at twice the pump wavelength";
  }
  const auto pick = [&](double override_value, double computed, const char* key) {
    sources[key] = override_value >= 0.0 ? "override" : "cavity resonance";
    return override_value >= 0.0 ? override_value : computed;
  };
  run.params.finesse = pick(o.finesse, res.finesse, "finesse");
  run.params.t_up = pick(o.t_up, res.t_up, "t_up");
  run.params.t_down = pick(o.t_down, res.t_down, "t_down");
  run.factor = efficiency::enhancement_factor(run.params);

  json out{{"command", "enhancement"},
           {"config_hash", config::config_hash(cfg.source)},
           {"n", run.params.n},
           {"finesse", run.params.finesse},
           {"t_up", run.params.t_up},
           {"t_down", run.params.t_down},
           {"factor", run.factor},
           {"sources", sources}};
  if (need_cavity) out["resonance_lambda_nm"] = res.lambda_nm;
  session.json_file("enhancement.json", out);
  run.report = session.finish();
  return run;
}

// ---------------------------------------------------------------------------
// budget

struct BudgetRun {
  RunReport report;
  efficiency::CountBudget budget;
};

inline BudgetRun cmd_budget(const config::DeviceConfig& cfg, const RunOptions& opt) {
  detail::Session session("budget", cfg, opt);
  BudgetRun run;
  run.budget = efficiency::expected_counts(cfg.detection);
  const auto& b = run.budget;
  const efficiency::PumpPulse pump{cfg.pump.peak_power_w, cfg.pump.pulse_duration_s, cfg.pump.wavelength_nm};
  const double generated = efficiency::brightness(pump, cfg.pump.conversion_efficiency,
                                                  cfg.sample.illuminated_length_mm / cfg.sample.length_mm);
  session.json_file("budget.json", {{"command", "budget"},
                                    {"config_hash", config::config_hash(cfg.source)},
                                    {"pump_photons_per_pulse", efficiency::pump_photons_per_pulse(pump)},
                                    {"generated_pairs_per_pulse", generated},
                                    {"arm_transmission", b.arm_transmission},
                                    {"detection_probability", b.detection_probability},
                                    {"selected_pairs_per_pulse", b.selected_pairs_per_pulse},
                                    {"pair_singles_rate_hz", b.pair_singles_rate},
                                    {"luminescence_rate_hz", b.luminescence_rate},
                                    {"dark_rate_hz", b.dark_rate},
                                    {"singles_rate_hz", b.singles_rate},
                                    {"true_coincidence_rate_hz", b.true_coincidence_rate},
                                    {"accidental_rate_hz", b.accidental_rate},
                                    {"accidental_fraction", b.accidental_fraction}});
  run.report = session.finish();
  return run;
}

}  // namespace cptwin::cli
