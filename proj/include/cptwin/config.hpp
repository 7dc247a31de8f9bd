#pragma once

// Device configuration: JSON document describing the layer stack, the
// dispersion model, the pump, the sample, the detection chain and the HOM
// scan. Every field has a default mirroring the room-temperature experiment,
// so an empty document "{}" describes the reference device.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cptwin/efficiency.hpp"
#include "cptwin/error.hpp"
#include "cptwin/hom.hpp"
#include "cptwin/materials.hpp"
#include "cptwin/stack.hpp"

namespace cptwin::config {

using nlohmann::json;

struct PumpConfig {
  double wavelength_nm = 760.0;
  double linewidth_nm = 0.3;
  double theta_deg = 0.37;
  double peak_power_w = 10.0;
  double pulse_duration_s = 150e-9;
  double conversion_efficiency = 1e-11;
};

struct SampleConfig {
  double length_mm = 1.0;
  double illuminated_length_mm = 0.65;
  double facet_reflectance = 0.30;
};

struct SpectrumConfig {
  double monochromator_fwhm_nm = 0.1;
  double step_nm = 0.005;
  double half_span_nm = 5.0;
  double noise_floor = 0.02;
  double long_wavelength_attenuation = 0.30;
  double fig_theta_deg = 3.1;
  double fig_lambda_p_nm = 759.5;
};

struct HomConfig {
  double lambda_nm = 1520.0;
  double delta_lambda_nm = 0.53;
  double visibility = -1.0;  // < 0: derive from the facet reflectance
  double half_span_mm = 8.0;
  std::size_t points = 25;
  double dwell_s = 60.0;
};

struct ResonanceConfig {
  double lambda_min_nm = 740.0;
  double lambda_max_nm = 780.0;
};

// Optional overrides of the Eq.-style enhancement inputs; negative = computed.
struct EnhancementOverrides {
  double n = -1.0;
  double finesse = -1.0;
  double t_up = -1.0;
  double t_down = -1.0;
};

struct DeviceConfig {
  stack::LayerStack stack;
  PumpConfig pump;
  SampleConfig sample;
  SpectrumConfig spectrum;
  efficiency::DetectionChain detection;
  HomConfig hom;
  ResonanceConfig resonance;
  EnhancementOverrides enhancement;
  std::uint64_t seed = 1;
  json source;  // the fully resolved document
};

// ---------------------------------------------------------------------------

inline materials::DispersionModel model_from_json(const json& j) {
  materials::DispersionModel m = materials::default_model();
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  if (j.contains("coefficients")) m.coefficients = j.at("coefficients").get<std::vector<double>>();
  if (j.contains("validity")) {
    const json& v = j.at("validity");
    m.window.lambda_min_nm = v.value("lambda_min_nm", m.window.lambda_min_nm);
    m.window.lambda_max_nm = v.value("lambda_max_nm", m.window.lambda_max_nm);
    m.window.x_min = v.value("x_min", m.window.x_min);
    m.window.x_max = v.value("x_max", m.window.x_max);
  }
  if (!materials::has_formula(m.name)) {
    throw Error(ErrorCode::ConfigError, "unknown dispersion formula '" + m.name + "'");
  }
  return m;
}

inline json model_to_json(const materials::DispersionModel& m) {
  return json{{"name", m.name},
              {"coefficients", m.coefficients},
              {"validity",
               {{"lambda_min_nm", m.window.lambda_min_nm},
                {"lambda_max_nm", m.window.lambda_max_nm},
                {"x_min", m.window.x_min},
                {"x_max", m.window.x_max}}}};
}

// Reference structure in config form: quarter-wave mirrors and half-wave core
// layers at the pump design wavelength.
inline json default_stack_json() {
  return json{
      {"ambient_index", 1.0},
      {"substrate", {{"index", 3.69}}},
      {"regions",
       json::array({
           {{"name", "top_dbr"},
            {"periods", 18},
            {"pattern", json::array({{{"x", 0.35}, {"thickness", "quarter-wave@760"}},
                                     {{"x", 0.90}, {"thickness", "quarter-wave@760"}}})}},
           {{"name", "core"},
            {"periods", 4.5},
            {"pattern", json::array({{{"x", 0.25}, {"thickness", "half-wave@760"}, {"nonlinear_sign", 1}},
                                     {{"x", 0.80}, {"thickness", "half-wave@760"}, {"nonlinear_sign", -1}}})}},
           {{"name", "bottom_dbr"},
            {"periods", 41},
            {"pattern", json::array({{{"x", 0.90}, {"thickness", "quarter-wave@760"}},
                                     {{"x", 0.35}, {"thickness", "quarter-wave@760"}}})}},
       })},
  };
}

inline json default_config_json() {
  const PumpConfig pump;
  const SampleConfig sample;
  const SpectrumConfig sp;
  const efficiency::DetectionChain d;
  const HomConfig h;
  const ResonanceConfig r;
  return json{
      {"dispersion", model_to_json(materials::default_model())},
      {"stack", default_stack_json()},
      {"pump",
       {{"wavelength_nm", pump.wavelength_nm},
        {"linewidth_nm", pump.linewidth_nm},
        {"theta_deg", pump.theta_deg},
        {"peak_power_w", pump.peak_power_w},
        {"pulse_duration_s", pump.pulse_duration_s},
        {"conversion_efficiency", pump.conversion_efficiency}}},
      {"sample",
       {{"length_mm", sample.length_mm},
        {"illuminated_length_mm", sample.illuminated_length_mm},
        {"facet_reflectance", sample.facet_reflectance}}},
      {"spectrum",
       {{"monochromator_fwhm_nm", sp.monochromator_fwhm_nm},
        {"step_nm", sp.step_nm},
        {"half_span_nm", sp.half_span_nm},
        {"noise_floor", sp.noise_floor},
        {"long_wavelength_attenuation", sp.long_wavelength_attenuation},
        {"fig_theta_deg", sp.fig_theta_deg},
        {"fig_lambda_p_nm", sp.fig_lambda_p_nm}}},
      {"detection",
       {{"pairs_per_pulse", d.pairs_per_pulse},
        {"selected_fraction", d.selected_fraction},
        {"pulse_rate_hz", d.pulse_rate_hz},
        {"pulse_duration_s", d.pulse_duration_s},
        {"facet_transmission", d.facet_transmission},
        {"objective_transmission", d.objective_transmission},
        {"filter_transmission", d.filter_transmission},
        {"splitter_transmission", d.splitter_transmission},
        {"detector_efficiency", d.detector_efficiency},
        {"dark_rate_hz", d.dark_rate_hz},
        {"coincidence_window_s", d.coincidence_window_s},
        {"luminescence_per_nm_per_pulse", d.luminescence_per_nm_per_pulse},
        {"filter_bandwidth_nm", d.filter_bandwidth_nm},
        {"filter_centre_nm", d.filter_centre_nm}}},
      {"hom",
       {{"lambda_nm", h.lambda_nm},
        {"delta_lambda_nm", h.delta_lambda_nm},
        {"visibility", h.visibility},
        {"half_span_mm", h.half_span_mm},
        {"points", h.points},
        {"dwell_s", h.dwell_s}}},
      {"resonance", {{"lambda_min_nm", r.lambda_min_nm}, {"lambda_max_nm", r.lambda_max_nm}}},
      {"enhancement", {{"n", -1.0}, {"finesse", -1.0}, {"t_up", -1.0}, {"t_down", -1.0}}},
      {"seed", 1},
  };
}

// ---------------------------------------------------------------------------

namespace detail {

// "quarter-wave@760", "half-wave@760" or a plain number of nanometres.
inline double parse_thickness(const json& t, materials::Composition c, const materials::DispersionModel& model) {
  if (t.is_number()) return t.get<double>();
  if (!t.is_string()) throw Error(ErrorCode::ConfigError, "layer thickness must be a number or a rule string");
  const std::string s = t.get<std::string>();
  const auto at = s.find('@');
  if (at == std::string::npos) throw Error(ErrorCode::ConfigError, "bad thickness rule '" + s + "'");
  const std::string rule = s.substr(0, at);
  double lambda = 0.0;
  try {
    lambda = std::stod(s.substr(at + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad wavelength in thickness rule '" + s + "'");
  }
  const double quarter = stack::quarter_wave_nm(lambda, c, model);
  if (rule == "quarter-wave") return quarter;
  if (rule == "half-wave") return 2.0 * quarter;
  throw Error(ErrorCode::ConfigError, "unknown thickness rule '" + rule + "'");
}

inline stack::Medium parse_medium(const json& j) {
  if (j.contains("x")) return stack::Medium::alloy(j.at("x").get<double>());
  if (j.contains("index")) return stack::Medium::fixed(j.at("index").get<double>());
  throw Error(ErrorCode::ConfigError, "medium needs either 'x' or 'index'");
}

inline stack::LayerStack parse_stack(const json& j, const materials::DispersionModel& model) {
  stack::LayerStack s;
  s.model = model;
  s.ambient_index = j.value("ambient_index", 1.0);
  if (j.contains("substrate")) s.substrate = parse_medium(j.at("substrate"));
  if (!j.contains("regions") || !j.at("regions").is_array()) {
    throw Error(ErrorCode::ConfigError, "stack needs a 'regions' array");
  }
  for (const json& r : j.at("regions")) {
    stack::Region region;
    region.name = r.value("name", std::string("region"));
    region.begin = s.layers.size();
    std::vector<stack::Layer> pattern;
    const json& items = r.contains("pattern") ? r.at("pattern") : r.value("layers", json::array());
    for (const json& l : items) {
      const materials::Composition c(l.at("x").get<double>());
      pattern.push_back({c, parse_thickness(l.at("thickness"), c, model), l.value("nonlinear_sign", 0)});
    }
    if (r.contains("pattern")) {
      region.periods = r.at("periods").get<double>();
      const auto count = static_cast<long>(std::lround(region.periods * static_cast<double>(pattern.size())));
      for (long k = 0; k < count && !pattern.empty(); ++k) {
        s.layers.push_back(pattern[static_cast<std::size_t>(k) % pattern.size()]);
      }
      if (pattern.size() != 2) region.periods = 0.0;  // period check only for two-layer patterns
    } else {
      s.layers.insert(s.layers.end(), pattern.begin(), pattern.end());
    }
    region.end = s.layers.size();
    if (region.end > region.begin) s.regions.push_back(region);
  }
  stack::validate(s);
  return s;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

// Merge `patch` into `base` recursively (objects only; arrays replace).
inline void merge(json& base, const json& patch) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object()) {
      merge(base[it.key()], it.value());
    } else {
      base[it.key()] = it.value();
    }
  }
}

}  // namespace detail

// Apply "a.b.c=value"; numeric path components index arrays. The value is
// parsed as JSON when possible, otherwise taken as a string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override must look like key=value: '" + assignment + "'");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    const bool last = i + 1 == parts.size();
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "expected an array index at '" + p + "' in " + path);
      }
      if (idx >= node->size()) throw Error(ErrorCode::ConfigError, "index out of range in " + path);
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) throw Error(ErrorCode::ConfigError, "cannot descend into '" + p + "' in " + path);
      node = &(*node)[p];
    }
    if (last) *node = value;
  }
}

inline DeviceConfig from_json(const json& user) {
  json doc = default_config_json();
  if (!user.is_object()) throw Error(ErrorCode::ConfigError, "config root must be an object");
  // A user-supplied stack replaces the reference stack as a whole.
  json patch = user;
  if (patch.contains("stack")) {
    doc["stack"] = patch["stack"];
    patch.erase("stack");
  }
  detail::merge(doc, patch);

  DeviceConfig c;
  try {
    const auto model = model_from_json(doc.at("dispersion"));
    c.stack = detail::parse_stack(doc.at("stack"), model);

    const json& p = doc.at("pump");
    detail::read(p, "wavelength_nm", c.pump.wavelength_nm);
    detail::read(p, "linewidth_nm", c.pump.linewidth_nm);
    detail::read(p, "theta_deg", c.pump.theta_deg);
    detail::read(p, "peak_power_w", c.pump.peak_power_w);
    detail::read(p, "pulse_duration_s", c.pump.pulse_duration_s);
    detail::read(p, "conversion_efficiency", c.pump.conversion_efficiency);

    const json& s = doc.at("sample");
    detail::read(s, "length_mm", c.sample.length_mm);
    detail::read(s, "illuminated_length_mm", c.sample.illuminated_length_mm);
    detail::read(s, "facet_reflectance", c.sample.facet_reflectance);

    const json& sp = doc.at("spectrum");
    detail::read(sp, "monochromator_fwhm_nm", c.spectrum.monochromator_fwhm_nm);
    detail::read(sp, "step_nm", c.spectrum.step_nm);
    detail::read(sp, "half_span_nm", c.spectrum.half_span_nm);
    detail::read(sp, "noise_floor", c.spectrum.noise_floor);
    detail::read(sp, "long_wavelength_attenuation", c.spectrum.long_wavelength_attenuation);
    detail::read(sp, "fig_theta_deg", c.spectrum.fig_theta_deg);
    detail::read(sp, "fig_lambda_p_nm", c.spectrum.fig_lambda_p_nm);

    const json& d = doc.at("detection");
    auto& chain = c.detection;
    detail::read(d, "pairs_per_pulse", chain.pairs_per_pulse);
    detail::read(d, "selected_fraction", chain.selected_fraction);
    detail::read(d, "pulse_rate_hz", chain.pulse_rate_hz);
    detail::read(d, "pulse_duration_s", chain.pulse_duration_s);
    detail::read(d, "facet_transmission", chain.facet_transmission);
    detail::read(d, "objective_transmission", chain.objective_transmission);
    detail::read(d, "filter_transmission", chain.filter_transmission);
    detail::read(d, "splitter_transmission", chain.splitter_transmission);
    detail::read(d, "detector_efficiency", chain.detector_efficiency);
    detail::read(d, "dark_rate_hz", chain.dark_rate_hz);
    detail::read(d, "coincidence_window_s", chain.coincidence_window_s);
    detail::read(d, "luminescence_per_nm_per_pulse", chain.luminescence_per_nm_per_pulse);
    detail::read(d, "filter_bandwidth_nm", chain.filter_bandwidth_nm);
    detail::read(d, "filter_centre_nm", chain.filter_centre_nm);
    efficiency::validate(chain);

    const json& h = doc.at("hom");
    detail::read(h, "lambda_nm", c.hom.lambda_nm);
    detail::read(h, "delta_lambda_nm", c.hom.delta_lambda_nm);
    detail::read(h, "visibility", c.hom.visibility);
    detail::read(h, "half_span_mm", c.hom.half_span_mm);
    detail::read(h, "points", c.hom.points);
    detail::read(h, "dwell_s", c.hom.dwell_s);

    const json& r = doc.at("resonance");
    detail::read(r, "lambda_min_nm", c.resonance.lambda_min_nm);
    detail::read(r, "lambda_max_nm", c.resonance.lambda_max_nm);

    const json& e = doc.at("enhancement");
    detail::read(e, "n", c.enhancement.n);
    detail::read(e, "finesse", c.enhancement.finesse);
    detail::read(e, "t_up", c.enhancement.t_up);
    detail::read(e, "t_down", c.enhancement.t_down);

    c.seed = doc.value("seed", std::uint64_t{1});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  if (!(c.sample.length_mm > 0.0) || !(c.hom.dwell_s > 0.0) || c.hom.points < 2) {
    throw Error(ErrorCode::ConfigError, "sample length, dwell and point count must be positive");
  }
  c.source = doc;
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "'" + path + "' is not valid JSON");
  return j;
}

inline DeviceConfig load(const std::string& path, const std::vector<std::string>& overrides = {},
                         std::optional<std::uint64_t> seed = std::nullopt) {
  json doc = path.empty() ? json::object() : read_json_file(path);
  if (!overrides.empty()) {
    // Overrides address the resolved document so defaults can be patched too.
    json full = default_config_json();
    if (doc.contains("stack")) full["stack"] = doc["stack"];
    json rest = doc;
    rest.erase("stack");
    detail::merge(full, rest);
    for (const auto& o : overrides) apply_override(full, o);
    doc = full;
  }
  if (seed) doc["seed"] = *seed;
  return from_json(doc);
}

// FNV-1a over the canonical (sorted-key) dump of the resolved document.
inline std::string config_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline hom::DipModel dip_model(const DeviceConfig& c) {
  hom::DipModel m;
  m.lambda_nm = c.hom.lambda_nm;
  m.delta_lambda_nm = c.hom.delta_lambda_nm;
  m.visibility = c.hom.visibility >= 0.0 ? c.hom.visibility
                                          : hom::visibility_from_reflectivity(c.sample.facet_reflectance);
  return m;
}

}  // namespace cptwin::config
