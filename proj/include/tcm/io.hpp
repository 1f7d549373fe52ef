#pragma once

// File formats: scenario and campaign JSON, results JSON and CSV tables.

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tcm/error.hpp"
#include "tcm/experiments.hpp"

namespace tcm::io {

using nlohmann::json;

/// 17 significant digits, '.' decimal separator.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(context + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(context + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& context) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, context);
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Seconds per declared time unit.
inline double unit_seconds(const std::string& unit, const std::string& context) {
  if (unit == "sec" || unit == "s") return 1.0;
  if (unit == "min") return 60.0;
  throw ParseError(context + ": unknown unit '" + unit + "' (expected sec or min)");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// PolyExp and plasma parameters

[[nodiscard]] inline json polyexp_to_json(const PolyExp& g) {
  json arr = json::array();
  for (const auto& term : g.terms()) arr.push_back({{"lambda", term.lambda}, {"mu", term.mu}});
  return arr;
}

[[nodiscard]] inline PolyExp polyexp_from_json(const json& j, const std::string& context = "polyexp") {
  if (!j.is_array()) throw ParseError(context + ": expected a list of {lambda, mu} records");
  std::vector<ExpTerm> terms;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = context + "[" + std::to_string(i) + "]";
    terms.push_back({detail::get_field<double>(j[i], "lambda", ctx), detail::get_field<double>(j[i], "mu", ctx)});
  }
  return PolyExp(std::move(terms));
}

/// Plasma parameters; rates are scaled by `rate_scale` (1/unit -> 1/sec).
[[nodiscard]] inline PlasmaParams plasma_from_json(const json& j, double rate_scale = 1.0,
                                                   const std::string& context = "plasma") {
  const auto model = detail::get_field<std::string>(j, "model", context);
  if (model == BiexponentialFraction::kId) {
    return PlasmaParams::biexponential(detail::get_field<double>(j, "A", context),
                                       detail::get_field<double>(j, "xi1", context) * rate_scale,
                                       detail::get_field<double>(j, "xi2", context) * rate_scale);
  }
  if (!PlasmaRegistry::instance().contains(model)) throw ParseError(context + ": unknown plasma model '" + model + "'");
  return {model, detail::get_field<std::vector<double>>(j, "m", context)};
}

[[nodiscard]] inline json plasma_to_json(const PlasmaParams& pp) {
  if (pp.model_id == BiexponentialFraction::kId && pp.m.size() == 3) {
    return {{"model", pp.model_id}, {"A", pp.m[0]}, {"xi1", pp.m[1]}, {"xi2", pp.m[2]}};
  }
  return {{"model", pp.model_id}, {"m", pp.m}};
}

// ---------------------------------------------------------------------------
// Scenario files
//
// {
//   "units": "sec" | "min",              time unit of grid, rates in 1/unit
//   "p": 3, "n": 3,                      optional consistency checks
//   "lambda": [...], "mu": [...],
//   "plasma": {"model": "biexp", "A": .., "xi1": .., "xi2": ..},
//   "regions": [{"K1": .., "k2": .., "k3": ..}, ...],
//   "grid": {"segments": [{"duration": .., "points": ..}, ...]} | {"times": [...]},
//   "blood_times": [...],                optional, defaults to the grid
//   "mode": "full" | "known_cart"
// }

[[nodiscard]] inline Scenario scenario_from_json(const json& j, const std::string& context = "scenario") {
  if (!j.is_object()) throw ParseError(context + ": expected an object");
  const auto units = detail::get_or<std::string>(j, "units", "sec", context);
  const double to_sec = detail::unit_seconds(units, context + ".units");
  const double rate_scale = 1.0 / to_sec;

  Scenario sc;
  sc.lambda = detail::get_field<std::vector<double>>(j, "lambda", context);
  sc.mu = detail::get_field<std::vector<double>>(j, "mu", context);
  if (sc.lambda.size() != sc.mu.size()) throw ParseError(context + ": lambda and mu must have equal length");
  for (auto& m : sc.mu) m *= rate_scale;
  if (j.contains("p") && detail::get_field<std::size_t>(j, "p", context) != sc.lambda.size()) {
    throw ParseError(context + ".p: does not match the length of lambda");
  }

  sc.plasma = plasma_from_json(detail::get_field<json>(j, "plasma", context), rate_scale, context + ".plasma");

  const auto regions = detail::get_field<json>(j, "regions", context);
  if (!regions.is_array() || regions.empty()) throw ParseError(context + ".regions: expected a nonempty list");
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const std::string ctx = context + ".regions[" + std::to_string(i) + "]";
    sc.kinetics.push_back({detail::get_field<double>(regions[i], "K1", ctx) * rate_scale,
                           detail::get_field<double>(regions[i], "k2", ctx) * rate_scale,
                           detail::get_field<double>(regions[i], "k3", ctx) * rate_scale});
  }
  if (j.contains("n") && detail::get_field<std::size_t>(j, "n", context) != sc.kinetics.size()) {
    throw ParseError(context + ".n: does not match the number of regions");
  }

  const auto grid = detail::get_field<json>(j, "grid", context);
  if (grid.contains("times")) {
    sc.t_grid = detail::get_field<std::vector<double>>(grid, "times", context + ".grid");
  } else {
    const auto segs = detail::get_field<json>(grid, "segments", context + ".grid");
    std::vector<GridSegment> segments;
    for (std::size_t s = 0; s < segs.size(); ++s) {
      const std::string ctx = context + ".grid.segments[" + std::to_string(s) + "]";
      segments.push_back({detail::get_field<double>(segs[s], "duration", ctx),
                          detail::get_field<std::size_t>(segs[s], "points", ctx)});
    }
    try {
      sc.t_grid = build_time_grid(segments);
    } catch (const std::invalid_argument& e) {
      throw ParseError(context + ".grid: " + e.what());
    }
  }
  for (auto& t : sc.t_grid) t *= to_sec;
  if (j.contains("blood_times")) {
    sc.s_grid = detail::get_field<std::vector<double>>(j, "blood_times", context);
    for (auto& s : sc.s_grid) s *= to_sec;
  } else {
    sc.s_grid = sc.t_grid;
  }
  try {
    sc.mode = data_mode_from_string(detail::get_or<std::string>(j, "mode", "full", context));
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(context + ": " + e.what());
  }
  return sc;
}

/// Serializes in seconds with explicit frame times.
[[nodiscard]] inline json scenario_to_json(const Scenario& sc) {
  json regions = json::array();
  for (const auto& k : sc.kinetics) regions.push_back({{"K1", k.K1}, {"k2", k.k2}, {"k3", k.k3}});
  return {{"units", "sec"},
          {"p", sc.p()},
          {"n", sc.n()},
          {"lambda", sc.lambda},
          {"mu", sc.mu},
          {"plasma", plasma_to_json(sc.plasma)},
          {"regions", regions},
          {"grid", {{"times", sc.t_grid}}},
          {"blood_times", sc.s_grid},
          {"mode", to_string(sc.mode)}};
}

[[nodiscard]] inline Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(detail::read_json_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Campaign files
//
// {"delta_y": .., "delta_x": .., "repetitions": .., "seed": .., "tau": .., "a": ..,
//  "b": .., "epsilon": .., "max_iter": .., "mode": "full" | "known_cart"}

[[nodiscard]] inline CampaignSpec campaign_from_json(const json& j, const std::string& context = "campaign") {
  if (!j.is_object()) throw ParseError(context + ": expected an object");
  CampaignSpec spec;
  spec.delta_y = detail::get_field<double>(j, "delta_y", context);
  spec.delta_x = detail::get_field<double>(j, "delta_x", context);
  spec.repetitions = detail::get_or<std::size_t>(j, "repetitions", spec.repetitions, context);
  spec.seed = detail::get_or<std::uint64_t>(j, "seed", spec.seed, context);
  spec.settings.tau = detail::get_or<double>(j, "tau", spec.settings.tau, context);
  spec.settings.a = detail::get_or<double>(j, "a", spec.settings.a, context);
  spec.settings.b = detail::get_or<double>(j, "b", spec.settings.b, context);
  spec.settings.epsilon = detail::get_or<double>(j, "epsilon", spec.settings.epsilon, context);
  spec.settings.max_iter = detail::get_or<std::size_t>(j, "max_iter", default_max_iter(spec.delta_y), context);
  try {
    spec.mode = data_mode_from_string(detail::get_or<std::string>(j, "mode", "full", context));
  } catch (const std::invalid_argument& e) {
    throw ParseError(context + ".mode: " + e.what());
  }
  return spec;
}

[[nodiscard]] inline json campaign_to_json(const CampaignSpec& spec) {
  return {{"delta_y", spec.delta_y},         {"delta_x", spec.delta_x},     {"repetitions", spec.repetitions},
          {"seed", spec.seed},               {"tau", spec.settings.tau},    {"a", spec.settings.a},
          {"b", spec.settings.b},            {"epsilon", spec.settings.epsilon},
          {"max_iter", spec.settings.max_iter}, {"mode", to_string(spec.mode)}};
}

[[nodiscard]] inline CampaignSpec load_campaign(const std::filesystem::path& path) {
  return campaign_from_json(detail::read_json_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Results

inline StopReason stop_reason_from_string(const std::string& s) {
  if (s == "discrepancy") return StopReason::discrepancy;
  if (s == "max_iter") return StopReason::max_iter;
  if (s == "failure") return StopReason::failure;
  throw ParseError("unknown stop reason '" + s + "'");
}

namespace detail {

inline json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<double> optional_from_json(const json& j, const std::string& key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

[[nodiscard]] inline json summary_to_json(const CampaignSummary& summary, bool include_traces = false) {
  json runs = json::array();
  for (const auto& r : summary.runs) {
    json run = {{"repetition", r.repetition},
                {"noise_seed", r.noise_seed},
                {"init_seed", r.init_seed},
                {"stop_reason", to_string(r.stop_reason)},
                {"stop_iter", r.stop_iter},
                {"iterations", r.iterations},
                {"initial_rel_error", r.initial_rel_error},
                {"stop_residual", r.stop_residual},
                {"stop_rel_error", r.stop_rel_error},
                {"min_rel_error", r.min_rel_error},
                {"rho_opt", detail::optional_to_json(r.rho_opt)},
                {"rho_d", detail::optional_to_json(r.rho_d)},
                {"diverged", r.diverged},
                {"failure_message", r.failure_message}};
    if (include_traces) {
      run["residual_norms"] = r.residual_norms;
      run["rel_errors"] = r.rel_errors;
    }
    runs.push_back(std::move(run));
  }
  return {{"campaign", campaign_to_json(summary.spec)},
          {"diverged_count", summary.diverged_count},
          {"median_run", summary.median_run ? json(*summary.median_run) : json(nullptr)},
          {"median_rho_opt", detail::optional_to_json(summary.median_rho_opt)},
          {"runs", runs}};
}

[[nodiscard]] inline CampaignSummary summary_from_json(const json& j) {
  CampaignSummary summary;
  try {
    summary.spec = campaign_from_json(j.at("campaign"), "results.campaign");
    summary.diverged_count = j.at("diverged_count").get<std::size_t>();
    if (!j.at("median_run").is_null()) summary.median_run = j.at("median_run").get<std::size_t>();
    summary.median_rho_opt = detail::optional_from_json(j, "median_rho_opt");
    for (const auto& run : j.at("runs")) {
      RunDigest r;
      r.repetition = run.at("repetition").get<std::size_t>();
      r.noise_seed = run.at("noise_seed").get<std::uint64_t>();
      r.init_seed = run.at("init_seed").get<std::uint64_t>();
      r.stop_reason = stop_reason_from_string(run.at("stop_reason").get<std::string>());
      r.stop_iter = run.at("stop_iter").get<std::size_t>();
      r.iterations = run.at("iterations").get<std::size_t>();
      r.initial_rel_error = run.at("initial_rel_error").get<double>();
      r.stop_residual = run.at("stop_residual").get<double>();
      r.stop_rel_error = run.at("stop_rel_error").get<double>();
      r.min_rel_error = run.at("min_rel_error").get<double>();
      r.rho_opt = detail::optional_from_json(run, "rho_opt");
      r.rho_d = detail::optional_from_json(run, "rho_d");
      r.diverged = run.at("diverged").get<bool>();
      r.failure_message = run.value("failure_message", std::string{});
      if (run.contains("residual_norms")) r.residual_norms = run.at("residual_norms").get<std::vector<double>>();
      if (run.contains("rel_errors")) r.rel_errors = run.at("rel_errors").get<std::vector<double>>();
      summary.runs.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("results: ") + e.what());
  }
  return summary;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_text(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << content;
  if (!out) throw IoError(path.string() + ": write failed");
}

[[nodiscard]] inline std::string trace_csv(const std::vector<double>& residual_norms,
                                           const std::vector<double>& rel_errors) {
  std::ostringstream out;
  out << "iter,residual_norm,rel_error\n";
  for (std::size_t k = 0; k < residual_norms.size(); ++k) {
    out << k << ',' << format_double(residual_norms[k]) << ',';
    if (k < rel_errors.size()) out << format_double(rel_errors[k]);
    out << '\n';
  }
  return out.str();
}

inline constexpr const char* kTableHeader =
    "mode,delta_y,delta_x,repetitions,diverged,median_run,median_rho_opt,median_rho_d,median_stop_iter\n";

[[nodiscard]] inline std::string table_row(const CampaignSummary& s) {
  std::ostringstream out;
  out << to_string(s.spec.mode) << ',' << format_double(s.spec.delta_y) << ',' << format_double(s.spec.delta_x) << ','
      << s.spec.repetitions << ',' << s.diverged_count << ',';
  if (s.median_run) {
    const auto& run = s.runs[*s.median_run];
    out << *s.median_run << ',' << format_double(run.rho_opt.value_or(0.0)) << ',';
    if (run.rho_d) out << format_double(*run.rho_d);
    out << ',' << run.stop_iter;
  } else {
    out << ",,,";
  }
  out << '\n';
  return out.str();
}

/// Short, filesystem-friendly name of a campaign cell.
[[nodiscard]] inline std::string cell_name(const CampaignSpec& spec) {
  std::ostringstream out;
  out << to_string(spec.mode) << "_dy" << spec.delta_y << "_dx" << spec.delta_x;
  return out.str();
}

/// Writes results.json, table1.csv and the median-run trace trace_<run>.csv
/// to `dir`.
inline void emit_results(const CampaignSummary& summary, const std::filesystem::path& dir) {
  write_text(dir / "results.json", summary_to_json(summary).dump(2) + "\n");
  write_text(dir / "table1.csv", std::string(kTableHeader) + table_row(summary));
  if (summary.median_run) {
    const auto& run = summary.runs[*summary.median_run];
    write_text(dir / ("trace_" + std::to_string(run.repetition) + ".csv"), trace_csv(run.residual_norms, run.rel_errors));
  }
}

/// Several campaign cells: one table1.csv row per cell, plus
/// results_<cell>.json and trace_<cell>.csv.
inline void emit_study(const std::vector<CampaignSummary>& summaries, const std::filesystem::path& dir) {
  std::string table = kTableHeader;
  for (const auto& summary : summaries) {
    table += table_row(summary);
    const std::string cell = cell_name(summary.spec);
    write_text(dir / ("results_" + cell + ".json"), summary_to_json(summary).dump(2) + "\n");
    if (summary.median_run) {
      const auto& run = summary.runs[*summary.median_run];
      write_text(dir / ("trace_" + cell + ".csv"), trace_csv(run.residual_norms, run.rel_errors));
    }
  }
  write_text(dir / "table1.csv", table);
}

}  // namespace tcm::io
