// cptwin: command-line front end.
//
// Exit status: 0 success, 2 input error (config, schema, arguments),
// 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cptwin/commands.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

cptwin::Polarization parse_pol(const std::string& s) {
  if (s == "TE" || s == "te") return cptwin::Polarization::TE;
  if (s == "TM" || s == "tm") return cptwin::Polarization::TM;
  throw cptwin::Error(cptwin::ErrorCode::InvalidArgument, "polarization must be TE or TM");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterpropagating twin-photon microcavity simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::vector<std::string> overrides;
  bool quiet = false;

  app.add_option("--config", config_path, "device config JSON (defaults: reference device)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--set", overrides, "override a config value, KEY=VALUE with dotted keys");
  app.add_flag("--quiet", quiet, "do not print the run report");

  auto* stack_cmd = app.add_subcommand("stack", "reflectance spectrum and field profile at the cavity resonance");
  std::optional<double> s_lo, s_hi;
  double s_step = 0.05, s_theta = 0.0;
  std::string s_pol = "TE";
  stack_cmd->add_option("--lambda-min", s_lo, "nm");
  stack_cmd->add_option("--lambda-max", s_hi, "nm");
  stack_cmd->add_option("--step", s_step, "nm");
  stack_cmd->add_option("--theta", s_theta, "incidence angle, deg");
  stack_cmd->add_option("--pol", s_pol, "TE or TM");

  auto* modes_cmd = app.add_subcommand("modes", "guided-mode table of the waveguide");
  std::optional<double> m_lambda;
  modes_cmd->add_option("--lambda", m_lambda, "nm (default: twice the pump wavelength)");

  auto* tuning_cmd = app.add_subcommand("tuning", "signal/idler wavelengths versus pump angle");
  cptwin::cli::TuningArgs t_args;
  std::optional<double> t_lambda_p;
  tuning_cmd->add_option("--theta-min", t_args.theta_min_deg, "deg");
  tuning_cmd->add_option("--theta-max", t_args.theta_max_deg, "deg");
  tuning_cmd->add_option("--theta-step", t_args.theta_step_deg, "deg");
  tuning_cmd->add_option("--lambda-p", t_lambda_p, "pump wavelength, nm");

  auto* spectrum_cmd = app.add_subcommand("spectrum", "parametric fluorescence spectrum");
  std::optional<double> sp_theta, sp_lambda_p;
  spectrum_cmd->add_option("--theta", sp_theta, "pump angle, deg");
  spectrum_cmd->add_option("--lambda-p", sp_lambda_p, "pump wavelength, nm");

  auto* hom_cmd = app.add_subcommand("hom", "Hong-Ou-Mandel scan simulation and dip fit");
  hom_cmd->require_subcommand(1);
  auto* hom_sim = hom_cmd->add_subcommand("simulate", "write a simulated coincidence scan");
  auto* hom_fit = hom_cmd->add_subcommand("fit", "fit visibility and bandwidth to a scan");
  std::string fit_input;
  hom_fit->add_option("--input,input", fit_input, "scan CSV (delta_z_mm,total_counts,accidental_counts)")
      ->required();

  auto* enh_cmd = app.add_subcommand("enhancement", "cavity enhancement of the conversion efficiency");
  auto* budget_cmd = app.add_subcommand("budget", "expected count rates of the interferometer");
  auto* config_cmd = app.add_subcommand("config", "print the resolved device config as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    const auto cfg = cptwin::config::load(config_path, overrides, seed);
    cptwin::cli::RunOptions opt;
    opt.out_dir = out_dir;
    opt.format = format == "json" ? cptwin::cli::Format::Json : cptwin::cli::Format::Csv;

    if (*config_cmd) {
      std::cout << cfg.source.dump(2) << "\n";
      return 0;
    }
    cptwin::cli::RunReport report;
    if (*stack_cmd) {
      auto a = cptwin::cli::stack_args(cfg);
      if (s_lo) a.lambda_min_nm = *s_lo;
      if (s_hi) a.lambda_max_nm = *s_hi;
      a.step_nm = s_step;
      a.theta_deg = s_theta;
      a.pol = parse_pol(s_pol);
      report = cptwin::cli::cmd_stack(cfg, a, opt).report;
    } else if (*modes_cmd) {
      report = cptwin::cli::cmd_modes(cfg, {m_lambda.value_or(2.0 * cfg.pump.wavelength_nm)}, opt).report;
    } else if (*tuning_cmd) {
      t_args.lambda_p_nm = t_lambda_p.value_or(cfg.pump.wavelength_nm);
      report = cptwin::cli::cmd_tuning(cfg, t_args, opt).report;
    } else if (*spectrum_cmd) {
      auto a = cptwin::cli::spectrum_args(cfg);
      if (sp_theta) a.theta_deg = *sp_theta;
      if (sp_lambda_p) a.lambda_p_nm = *sp_lambda_p;
      report = cptwin::cli::cmd_spectrum(cfg, a, opt).report;
    } else if (*hom_sim) {
      report = cptwin::cli::cmd_hom_simulate(cfg, opt).report;
    } else if (*hom_fit) {
      report = cptwin::cli::cmd_hom_fit(cfg, fit_input, opt).report;
    } else if (*enh_cmd) {
      report = cptwin::cli::cmd_enhancement(cfg, opt).report;
    } else if (*budget_cmd) {
      report = cptwin::cli::cmd_budget(cfg, opt).report;
    }
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
    if (!quiet) std::cout << report.to_json().dump(2) << "\n";
    return 0;
  } catch (const cptwin::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cptwin::is_input_error(e.code()) ? kExitInput : kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: ConfigError: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
