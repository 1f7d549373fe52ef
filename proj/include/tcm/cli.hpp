#pragma once

// Command-line front end. Subcommands: simulate, identify, check, reproduce,
// jaccheck. Exit codes: 0 ok, 1 usage, 2 parse or input/output, 3 numerical
// failure (including a failed Jacobian check).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/experiments.hpp"
#include "tcm/io.hpp"
#include "tcm/jacobian_check.hpp"
#include "tcm/polyexp.hpp"

namespace tcm::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kParse = 2, kNumerical = 3 };

inline constexpr std::uint64_t kDefaultSeed = 20240101;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CliConfig {
  std::string subcommand;
  std::string scenario_path;
  std::string campaign_path;
  std::string data_path;
  std::string out_dir;
  std::string units;  // overrides the scenario file's unit when nonempty
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;

  std::optional<std::string> mode;
  std::optional<double> tau;
  std::optional<double> alpha_a;
  std::optional<double> alpha_b;
  std::optional<double> epsilon;
  std::optional<std::size_t> max_iter;
  std::optional<std::size_t> repetitions;
  unsigned threads = 0;

  bool all = false;
  bool synthesize = false;
  double delta_y = 0.0;
  double delta_x = 0.01;

  std::size_t trials = 20;
  double tolerance = 1e-5;
  std::string corrupt_entry;  // "ROW:COL", test hook

  std::size_t curve_points = 1001;
  bool verbose = false;
};

namespace detail {

inline Scenario load_scenario(const CliConfig& cfg) {
  Scenario sc;
  if (cfg.scenario_path.empty()) {
    if (!cfg.units.empty()) throw UsageError("--units requires --scenario");
    sc = reference_scenario();
  } else {
    auto j = io::detail::read_json_file(cfg.scenario_path);
    if (!cfg.units.empty()) j["units"] = cfg.units;
    sc = io::scenario_from_json(j, cfg.scenario_path);
  }
  return sc;
}

inline DataMode resolve_mode(const CliConfig& cfg, DataMode fallback) {
  return cfg.mode ? data_mode_from_string(*cfg.mode) : fallback;
}

inline void apply_overrides(const CliConfig& cfg, IrgnmSettings& settings) {
  if (cfg.tau) settings.tau = *cfg.tau;
  if (cfg.alpha_a) settings.a = *cfg.alpha_a;
  if (cfg.alpha_b) settings.b = *cfg.alpha_b;
  if (cfg.epsilon) settings.epsilon = *cfg.epsilon;
  if (cfg.max_iter) settings.max_iter = *cfg.max_iter;
  try {
    settings.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

inline std::string fmt(double v, int digits = 10) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

inline std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + fmt(values[i]);
  return out;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) fields.push_back(field);
  if (!line.empty() && line.back() == sep) fields.emplace_back();
  return fields;
}

/// Reads the `value` column of a measurement CSV as written by `simulate`.
inline Eigen::VectorXd read_measurements(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const auto header = split(line, ',');
  std::size_t col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "value") col = c;
  if (col == header.size()) throw ParseError(path.string() + ":1: header has no 'value' column");
  std::vector<double> values;
  for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() <= col) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing value field");
    try {
      std::size_t used = 0;
      values.push_back(std::stod(fields[col], &used));
      if (used != fields[col].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid number '" + fields[col] + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline std::vector<std::string> parameter_names(const Layout& layout, const std::string& plasma_model) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= layout.p; ++j) names.push_back("lambda_" + std::to_string(j));
  for (std::size_t j = 1; j <= layout.p; ++j) names.push_back("mu_" + std::to_string(j));
  if (plasma_model == BiexponentialFraction::kId && layout.q_hat == 3) {
    names.insert(names.end(), {"A", "xi1", "xi2"});
  } else {
    for (std::size_t k = 1; k <= layout.q_hat; ++k) names.push_back("m_" + std::to_string(k));
  }
  for (std::size_t i = 1; i <= layout.n; ++i) {
    for (const char* rate : {"K1_", "k2_", "k3_"}) names.push_back(rate + std::to_string(i));
  }
  return names;
}

inline std::string parameters_csv(const Eigen::VectorXd& x, const std::vector<std::string>& names) {
  std::string csv = "name,value\n";
  for (Eigen::Index i = 0; i < x.size(); ++i)
    csv += names[static_cast<std::size_t>(i)] + "," + io::format_double(x[i]) + "\n";
  return csv;
}

inline std::filesystem::path require_out(const CliConfig& cfg) {
  if (cfg.out_dir.empty()) throw UsageError("--out is required");
  return cfg.out_dir;
}

/// Initial guess of a single run: perturbed truth, plasma block kept exact in
/// known_cart mode, projected.
inline Eigen::VectorXd initial_guess(const Scenario& sc, const ForwardModel& model, const Eigen::VectorXd& center,
                                     double delta_x, std::uint64_t seed) {
  Eigen::VectorXd x0 = perturb_initial(center, delta_x, derive_seed(seed, 0, RandomStream::initial_guess));
  if (model.mode() == DataMode::known_cart) {
    const auto layout = sc.layout();
    const auto o = static_cast<Eigen::Index>(layout.plasma_offset());
    const auto len = static_cast<Eigen::Index>(layout.q_hat);
    x0.segment(o, len) = center.segment(o, len);
  }
  return model.project(x0);
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline int cmd_simulate(const CliConfig& cfg, std::ostream& out) {
  const auto dir = detail::require_out(cfg);
  const Scenario sc = detail::load_scenario(cfg);
  const DataMode mode = detail::resolve_mode(cfg, sc.mode);
  const auto truth = simulate_ground_truth(sc, mode);

  std::string meas = "index,block,region,time,value\n";
  std::size_t idx = 0;
  for (std::size_t i = 0; i < sc.n(); ++i) {
    for (std::size_t l = 0; l < sc.t_grid.size(); ++l, ++idx) {
      meas += std::to_string(idx) + ",tissue," + std::to_string(i + 1) + "," + io::format_double(sc.t_grid[l]) + "," +
              io::format_double(truth.y_flat[static_cast<Eigen::Index>(idx)]) + "\n";
    }
  }
  for (std::size_t l = 0; l < sc.s_grid.size(); ++l, ++idx) {
    meas += std::to_string(idx) + ",blood,0," + io::format_double(sc.s_grid[l]) + "," +
            io::format_double(truth.y_flat[static_cast<Eigen::Index>(idx)]) + "\n";
  }
  io::write_text(dir / "measurements.csv", meas);

  const auto names = detail::parameter_names(sc.layout(), sc.plasma.model_id);
  io::write_text(dir / "parameters.csv", detail::parameters_csv(truth.x_true.flat(), names));

  std::string curves = "time,c_art,f,c_bl";
  for (std::size_t i = 1; i <= sc.n(); ++i) curves += ",c_tis_" + std::to_string(i);
  curves += "\n";
  const auto terms = sc.c_art_terms();
  const std::size_t points = std::max<std::size_t>(cfg.curve_points, 2);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = sc.t_max() * static_cast<double>(k) / static_cast<double>(points - 1);
    curves += io::format_double(t) + "," + io::format_double(sc.c_art(t)) + "," +
              io::format_double(sc.plasma_fraction(t)) + "," + io::format_double(sc.c_bl(t));
    for (const auto& kin : sc.kinetics) curves += "," + io::format_double(c_tis_closed_form(terms, kin, t));
    curves += "\n";
  }
  io::write_text(dir / "curves.csv", curves);

  out << "simulated " << truth.y_flat.size() << " measurements (n = " << sc.n() << ", T = " << sc.t_grid.size()
      << ", q = " << sc.s_grid.size() << ", mode " << to_string(mode) << ") into " << dir.string() << "\n";
  return kOk;
}

inline int cmd_identify(const CliConfig& cfg, std::ostream& out) {
  if (cfg.synthesize == !cfg.data_path.empty()) throw UsageError("identify needs exactly one of --data or --synthesize");
  if (cfg.delta_y < 0.0 || cfg.delta_x < 0.0) throw UsageError("--delta-y and --delta-x must be nonnegative");
  const Scenario sc = detail::load_scenario(cfg);
  const DataMode mode = detail::resolve_mode(cfg, sc.mode);

  IrgnmSettings settings;
  settings.max_iter = default_max_iter(cfg.delta_y);
  detail::apply_overrides(cfg, settings);
  settings.delta_estimate = cfg.delta_y;

  const auto model = sc.make_model(mode, settings.epsilon);
  const Eigen::VectorXd center = pack(sc.true_parameters()).flat();

  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> truth;
  if (cfg.synthesize) {
    const auto gt = simulate_ground_truth(sc, mode);
    y = add_noise(gt.y_flat, model.tissue_size(), cfg.delta_y, derive_seed(cfg.seed, 0, RandomStream::noise));
    truth = center;
  } else {
    y = detail::read_measurements(cfg.data_path);
    if (static_cast<std::size_t>(y.size()) != model.output_size()) {
      throw ParseError(cfg.data_path + ": dimension mismatch: " + std::to_string(y.size()) +
                       " values, scenario expects " + std::to_string(model.output_size()));
    }
  }
  const Eigen::VectorXd x0 = detail::initial_guess(sc, model, center, cfg.delta_x, cfg.seed);
  const RunRecord record = run_irgnm(model, x0, y, settings, truth);

  out << "mode: " << to_string(mode) << "\n";
  if (record.stop_reason == StopReason::failure) {
    throw NumericalError("solver failed: " + record.failure_message);
  }
  out << "stop: " << to_string(record.stop_reason) << " at iteration " << record.stop_iter << "\n";
  out << "residual: " << detail::fmt(record.residual_norms[record.stop_iter]) << "\n";
  if (settings.delta_estimate > 0.0) out << "tau*delta: " << detail::fmt(settings.tau * settings.delta_estimate) << "\n";
  const Parameters fit = unpack(sc.layout(), record.solution);
  for (std::size_t i = 0; i < fit.kinetics.size(); ++i) {
    const auto& k = fit.kinetics[i];
    out << "region " << i + 1 << ": K1 = " << detail::fmt(k.K1) << ", k2 = " << detail::fmt(k.k2)
        << ", k3 = " << detail::fmt(k.k3) << "\n";
  }
  out << "lambda: " << detail::join(fit.lambda) << "\n";
  out << "mu: " << detail::join(fit.mu) << "\n";
  out << "m: " << detail::join(fit.m) << "\n";
  if (truth) {
    out << "rel_error: " << detail::fmt(record.rel_errors[record.stop_iter]) << "\n";
    if (record.rho_opt) out << "rho_opt: " << detail::fmt(*record.rho_opt, 6) << " %\n";
    if (record.rho_d) out << "rho_d: " << detail::fmt(*record.rho_d, 6) << " %\n";
  }
  if (cfg.verbose) {
    for (std::size_t k = 0; k < record.residual_norms.size(); ++k)
      out << "  iter " << k << " residual " << detail::fmt(record.residual_norms[k]) << "\n";
  }
  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir = cfg.out_dir;
    io::write_text(dir / "trace.csv", io::trace_csv(record.residual_norms, record.rel_errors));
    io::write_text(dir / "fit.csv",
                   detail::parameters_csv(record.solution, detail::parameter_names(sc.layout(), sc.plasma.model_id)));
  }
  return kOk;
}

inline int cmd_check(const CliConfig& cfg, std::ostream& out) {
  const Scenario sc = detail::load_scenario(cfg);
  const std::size_t p = sc.p();
  const std::size_t t_count = sc.t_grid.size();
  out << "scenario: p = " << p << ", n = " << sc.n() << ", T = " << t_count << ", q = " << sc.s_grid.size() << "\n";

  const auto report = check_assumption_a(sc.mu, sc.lambda, sc.kinetics);
  if (report.satisfied) {
    out << "assumption A: satisfied (margin " << detail::fmt(report.margin, 6) << ")\n";
  } else {
    out << "assumption A: violated\n";
  }
  for (std::size_t j = 0; j < report.witnesses.size(); ++j) {
    if (const auto& w = report.witnesses[j]) {
      out << "  j0 = " << j + 1 << ": regions (" << (*w)[0] + 1 << ", " << (*w)[1] + 1 << ", " << (*w)[2] + 1 << ")\n";
    } else {
      out << "  j0 = " << j + 1 << ": no admissible region triple\n";
    }
  }
  for (const auto& v : report.violations) out << "  violation: " << v << "\n";

  const std::size_t diverse = max_distinct_regions(sc.kinetics);
  out << "sufficient condition (" << p + 3 << " regions with distinct k3 and k2+k3): "
      << (check_sufficient_condition(sc.kinetics, p) ? "met" : "not met") << " (" << diverse << " available)\n";

  const std::size_t needed = 2 * (p + 3);
  if (t_count >= needed) {
    out << "time grid: T = " << t_count << " >= 2(p+3) = " << needed << ": OK\n";
  } else {
    out << "warning: T < " << needed << " (T = " << t_count << ", 2(p+3) frames needed)\n";
  }
  return kOk;
}

inline int cmd_reproduce(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.all == !cfg.campaign_path.empty()) throw UsageError("reproduce needs exactly one of --campaign or --all");
  const auto dir = detail::require_out(cfg);
  const Scenario sc = detail::load_scenario(cfg);

  std::vector<CampaignSpec> specs;
  if (cfg.all) {
    IrgnmSettings base;
    detail::apply_overrides(cfg, base);
    specs = study_grid(cfg.repetitions.value_or(100), cfg.seed, base);
    if (cfg.max_iter) {
      for (auto& s : specs) s.settings.max_iter = *cfg.max_iter;
    }
    if (cfg.mode) {
      const DataMode mode = data_mode_from_string(*cfg.mode);
      std::erase_if(specs, [&](const CampaignSpec& s) { return s.mode != mode; });
    }
  } else {
    CampaignSpec spec = io::load_campaign(cfg.campaign_path);
    detail::apply_overrides(cfg, spec.settings);
    if (cfg.seed_given) spec.seed = cfg.seed;
    if (cfg.repetitions) spec.repetitions = *cfg.repetitions;
    if (cfg.mode) spec.mode = data_mode_from_string(*cfg.mode);
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    specs.push_back(spec);
  }

  std::vector<CampaignSummary> summaries;
  std::size_t failed = 0;
  for (const auto& spec : specs) {
    try {
      summaries.push_back(run_campaign(spec, sc, cfg.threads));
      const auto& s = summaries.back();
      out << io::cell_name(spec) << ": diverged " << s.diverged_count << "/" << spec.repetitions;
      if (s.median_rho_opt) out << ", median rho_opt " << detail::fmt(*s.median_rho_opt, 6) << " %";
      out << "\n";
    } catch (const std::exception& e) {
      ++failed;
      err << "cell " << io::cell_name(spec) << " failed: " << e.what() << "\n";
    }
  }
  if (cfg.all) {
    io::emit_study(summaries, dir);
  } else if (!summaries.empty()) {
    io::emit_results(summaries.front(), dir);
  }
  return failed == 0 ? kOk : kNumerical;
}

inline int cmd_jaccheck(const CliConfig& cfg, std::ostream& out) {
  if (cfg.trials < 1) throw UsageError("--trials must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw UsageError("--tolerance must be positive");
  const Scenario sc = detail::load_scenario(cfg);
  const DataMode mode = detail::resolve_mode(cfg, sc.mode);
  IrgnmSettings settings;
  detail::apply_overrides(cfg, settings);
  const auto model = sc.make_model(mode, settings.epsilon);

  JacobianCheckSettings check;
  check.trials = cfg.trials;
  check.tolerance = cfg.tolerance;
  check.seed = cfg.seed;
  if (!cfg.corrupt_entry.empty()) {
    const auto parts = detail::split(cfg.corrupt_entry, ':');
    Eigen::Index row = 0, col = 0;
    try {
      if (parts.size() != 2) throw std::invalid_argument("format");
      row = std::stol(parts[0]);
      col = std::stol(parts[1]);
    } catch (const std::exception&) {
      throw UsageError("--corrupt-entry expects ROW:COL");
    }
    if (row < 0 || col < 0 || row >= static_cast<Eigen::Index>(model.output_size()) ||
        col >= static_cast<Eigen::Index>(model.layout().size())) {
      throw UsageError("--corrupt-entry out of range");
    }
    check.corrupt = [row, col](Eigen::MatrixXd& jac) { jac(row, col) += 1e-3 * (1.0 + std::abs(jac(row, col))); };
  }
  const auto report = verify_jacobian(model, pack(sc.true_parameters()).flat(), check);
  out << "jacobian check (" << to_string(mode) << ", " << report.trials << " points, " << report.entries_checked
      << " entries): max relative deviation " << detail::fmt(report.max_deviation, 4) << " at trial "
      << report.worst_trial << ", entry (" << report.worst_row << ", " << report.worst_col << "), tolerance "
      << detail::fmt(cfg.tolerance, 4) << ": " << (report.passed ? "PASS" : "FAIL") << "\n";
  return report.passed ? kOk : kNumerical;
}

// ---------------------------------------------------------------------------

inline int dispatch(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.subcommand == "simulate") return cmd_simulate(cfg, out);
  if (cfg.subcommand == "identify") return cmd_identify(cfg, out);
  if (cfg.subcommand == "check") return cmd_check(cfg, out);
  if (cfg.subcommand == "reproduce") return cmd_reproduce(cfg, out, err);
  if (cfg.subcommand == "jaccheck") return cmd_jaccheck(cfg, out);
  throw UsageError("unknown subcommand '" + cfg.subcommand + "'");
}

/// Parses the command line and runs the selected subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Parameter identification for the irreversible two-tissue compartment model", "tcm"};
  app.require_subcommand(1);

  auto tau_check = CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          return std::stod(s) > 1.0 ? std::string{} : std::string("tau must be > 1");
        } catch (const std::exception&) {
          return "tau must be a number";
        }
      },
      "> 1");

  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario_path, "scenario JSON (default: built-in reference scenario)")
        ->check(CLI::ExistingFile);
    sub->add_option("--units", cfg.units, "override the scenario's unit")->check(CLI::IsMember({"sec", "min"}));
  };
  auto add_mode = [&](CLI::App* sub) {
    sub->add_option("--mode", cfg.mode, "data mode")->check(CLI::IsMember({"full", "known_cart"}));
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", cfg.seed, "base random seed");
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--tau", cfg.tau, "discrepancy factor")->check(tau_check);
    sub->add_option("--alpha-a", cfg.alpha_a, "alpha_0 of the schedule a exp(-b k)")->check(CLI::PositiveNumber);
    sub->add_option("--alpha-b", cfg.alpha_b, "decay rate b of the schedule")->check(CLI::PositiveNumber);
    sub->add_option("--epsilon", cfg.epsilon, "lower bound of the kinetic rates")->check(CLI::NonNegativeNumber);
    sub->add_option("--max-iter", cfg.max_iter, "iteration cap");
  };

  auto* simulate = app.add_subcommand("simulate", "write noise-free data, parameters and curves");
  add_scenario(simulate);
  add_mode(simulate);
  simulate->add_option("--out", cfg.out_dir, "output directory")->required();
  simulate->add_option("--points", cfg.curve_points, "curve samples on [0, T_max]")->check(CLI::Range(2, 1000000));

  auto* identify = app.add_subcommand("identify", "run the projected IRGNM on one data set");
  add_scenario(identify);
  add_mode(identify);
  add_seed(identify);
  add_solver(identify);
  identify->add_option("--data", cfg.data_path, "measurement CSV")->check(CLI::ExistingFile);
  identify->add_flag("--synthesize", cfg.synthesize, "generate data from the scenario");
  identify->add_option("--delta-y", cfg.delta_y, "noise level (also the discrepancy delta)");
  identify->add_option("--delta-x", cfg.delta_x, "initial guess perturbation level");
  identify->add_option("--out", cfg.out_dir, "write trace.csv and fit.csv here");
  identify->add_flag("-v,--verbose", cfg.verbose, "print the residual of every iterate");

  auto* check = app.add_subcommand("check", "identifiability checks for a scenario");
  add_scenario(check);

  auto* reproduce = app.add_subcommand("reproduce", "run simulation campaigns");
  add_scenario(reproduce);
  add_mode(reproduce);
  add_solver(reproduce);
  reproduce->add_option("--campaign", cfg.campaign_path, "campaign JSON")->check(CLI::ExistingFile);
  reproduce->add_flag("--all", cfg.all, "run the full 4 x 4 x 2 study grid");
  reproduce->add_option("--repetitions", cfg.repetitions, "repetitions per cell")->check(CLI::PositiveNumber);
  reproduce->add_option("--threads", cfg.threads, "worker threads (0: hardware concurrency)");
  reproduce->add_option("--out", cfg.out_dir, "output directory")->required();
  auto* reproduce_seed = reproduce->add_option("--seed", cfg.seed, "base random seed");

  auto* jaccheck = app.add_subcommand("jaccheck", "compare the analytic Jacobian with finite differences");
  add_scenario(jaccheck);
  add_mode(jaccheck);
  add_seed(jaccheck);
  jaccheck->add_option("--trials", cfg.trials, "number of random in-domain points");
  jaccheck->add_option("--tolerance", cfg.tolerance, "maximal relative deviation");
  jaccheck->add_option("--epsilon", cfg.epsilon, "lower bound of the kinetic rates")->check(CLI::NonNegativeNumber);
  jaccheck->add_option("--corrupt-entry", cfg.corrupt_entry, "perturb one analytic entry ROW:COL")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();
  cfg.seed_given = reproduce_seed->count() > 0;

  try {
    return dispatch(cfg, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParse;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kParse;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << "\n";
    return kParse;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace tcm::cli
