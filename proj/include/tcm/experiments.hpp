#pragma once

// Simulation study harness: ground-truth scenario, PET frame grid, noise and
// initial-guess perturbation, and repeated IRGNM campaigns.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "tcm/forward.hpp"
#include "tcm/plasma.hpp"
#include "tcm/polyexp.hpp"
#include "tcm/solver.hpp"

namespace tcm {

/// `points` equidistant frames ending at the right end of a segment of the
/// given duration.
struct GridSegment {
  double duration = 0.0;
  std::size_t points = 0;
};

/// Frame times from consecutive segments starting at 0. The first segment
/// covers [0, d] including both ends; later segments cover (a, b] including
/// the right end. Times are in the unit of the durations.
[[nodiscard]] inline std::vector<double> build_time_grid(const std::vector<GridSegment>& segments) {
  std::vector<double> times;
  double start = 0.0;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    if (seg.points == 0) continue;
    if (!(seg.duration > 0.0)) throw std::invalid_argument("grid segment duration must be positive");
    const double end = start + seg.duration;
    if (s == 0) {
      if (seg.points == 1) {
        times.push_back(start);
      } else {
        for (std::size_t i = 0; i < seg.points; ++i)
          times.push_back(start + seg.duration * static_cast<double>(i) / static_cast<double>(seg.points - 1));
      }
    } else {
      for (std::size_t i = 1; i <= seg.points; ++i)
        times.push_back(start + seg.duration * static_cast<double>(i) / static_cast<double>(seg.points));
    }
    start = end;
  }
  return times;
}

/// Frame protocol of the reference study in minutes: 6 frames in the first
/// minute, 4 in the next two, 2 in the next two, 3 in the next 7.5 and 10 in
/// the remaining 50 minutes.
[[nodiscard]] inline std::vector<GridSegment> reference_segments_minutes() {
  return {{1.0, 6}, {2.0, 4}, {2.0, 2}, {7.5, 3}, {50.0, 10}};
}

/// The 25 reference frame times in seconds (0 .. 3750).
[[nodiscard]] inline std::vector<double> build_time_grid() {
  auto minutes = build_time_grid(reference_segments_minutes());
  for (auto& t : minutes) t *= 60.0;
  return minutes;
}

/// Ground-truth configuration of a simulation study. Times in seconds, rates
/// in 1/sec.
struct Scenario {
  std::vector<double> lambda;
  std::vector<double> mu;
  PlasmaParams plasma;
  std::vector<KineticParams> kinetics;
  std::vector<double> t_grid;
  std::vector<double> s_grid;
  DataMode mode = DataMode::full;

  [[nodiscard]] std::size_t p() const { return lambda.size(); }
  [[nodiscard]] std::size_t n() const { return kinetics.size(); }
  [[nodiscard]] Layout layout() const { return {p(), find_plasma_family(plasma.model_id)->parameter_count(), n()}; }
  [[nodiscard]] double t_max() const { return t_grid.empty() ? 0.0 : t_grid.back(); }

  [[nodiscard]] std::vector<ExpTerm> c_art_terms() const {
    std::vector<ExpTerm> terms(lambda.size());
    for (std::size_t j = 0; j < lambda.size(); ++j) terms[j] = {lambda[j], mu[j]};
    return terms;
  }

  [[nodiscard]] double c_art(double t) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < lambda.size(); ++j) sum += lambda[j] * std::exp(mu[j] * t);
    return sum;
  }

  [[nodiscard]] double plasma_fraction(double t) const { return eval_plasma_fraction(plasma, t); }

  /// Total blood concentration C_bl = C_art / f (0 where f vanishes).
  [[nodiscard]] double c_bl(double t) const {
    const double f = plasma_fraction(t);
    return f > 0.0 ? c_art(t) / f : 0.0;
  }

  [[nodiscard]] Parameters true_parameters() const { return {lambda, mu, plasma.m, kinetics}; }

  /// Blood data as seen by the forward model in the given mode: C_bl samples
  /// in full mode, C_art samples in known_cart mode.
  [[nodiscard]] std::vector<double> blood_values(DataMode data_mode) const {
    std::vector<double> values(s_grid.size());
    for (std::size_t l = 0; l < s_grid.size(); ++l)
      values[l] = data_mode == DataMode::full ? c_bl(s_grid[l]) : c_art(s_grid[l]);
    return values;
  }

  [[nodiscard]] ForwardModel make_model(DataMode data_mode, double epsilon = kDefaultDomainFloor) const {
    return {layout(), t_grid, s_grid, blood_values(data_mode), data_mode, find_plasma_family(plasma.model_id), epsilon};
  }

  [[nodiscard]] ForwardModel make_model() const { return make_model(mode); }

  void validate() const {
    if (lambda.empty() || lambda.size() != mu.size()) throw std::invalid_argument("scenario: lambda/mu size mismatch");
    if (kinetics.empty()) throw std::invalid_argument("scenario: no regions");
    if (t_grid.empty()) throw std::invalid_argument("scenario: empty time grid");
    if (find_plasma_family(plasma.model_id)->parameter_count() != plasma.m.size()) {
      throw std::invalid_argument("scenario: plasma parameter count does not match model '" + plasma.model_id + "'");
    }
  }
};

/// Three cortical regions, triexponential arterial input and biexponential
/// parent fraction sampled on the 25-frame protocol; blood sampled at the
/// PET frame times.
[[nodiscard]] inline Scenario reference_scenario() {
  Scenario sc;
  sc.lambda = {-5.0, 4.0, 1.0};
  sc.mu = {-0.5, -0.2, -0.1};
  sc.plasma = PlasmaParams::biexponential(0.1, -0.005, -0.1);
  sc.kinetics = {{0.157, 0.174, 0.118}, {0.161, 0.179, 0.096}, {0.177, 0.159, 0.088}};
  sc.t_grid = build_time_grid();
  sc.s_grid = sc.t_grid;
  return sc;
}

struct GroundTruth {
  ParamVector x_true;
  MeasurementSet y;
  Eigen::VectorXd y_flat;
};

/// Noise-free data y = F(x_true) for the scenario in the given mode.
[[nodiscard]] inline GroundTruth simulate_ground_truth(const Scenario& scenario, DataMode data_mode) {
  scenario.validate();
  const auto model = scenario.make_model(data_mode);
  ParamVector x = pack(scenario.true_parameters());
  Eigen::VectorXd y = model.evaluate(x.flat());
  // The blood block vanishes by construction; store exact zeros.
  y.tail(static_cast<Eigen::Index>(scenario.s_grid.size())).setZero();
  auto set = MeasurementSet::from_flat(scenario.n(), scenario.t_grid.size(), y);
  return {std::move(x), std::move(set), std::move(y)};
}

[[nodiscard]] inline GroundTruth simulate_ground_truth(const Scenario& scenario) {
  return simulate_ground_truth(scenario, scenario.mode);
}

// ---------------------------------------------------------------------------
// Random streams

/// SplitMix64 finalizer; decorrelates nearby seeds.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

enum class RandomStream : std::uint64_t { noise = 1, initial_guess = 2 };

/// Seed of one random stream of one repetition: depends only on
/// base_seed XOR repetition and the stream tag.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t repetition,
                                                  RandomStream stream) {
  return splitmix64(splitmix64(base_seed ^ repetition) + static_cast<std::uint64_t>(stream));
}

/// Adds N(0, delta_y^2 / tissue_size) noise to the first `tissue_size`
/// entries; the blood block is left untouched.
[[nodiscard]] inline Eigen::VectorXd add_noise(const Eigen::VectorXd& y, std::size_t tissue_size, double delta_y,
                                               std::uint64_t seed) {
  if (delta_y < 0.0) throw std::invalid_argument("add_noise: delta_y must be nonnegative");
  Eigen::VectorXd out = y;
  if (delta_y == 0.0 || tissue_size == 0) return out;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, delta_y / std::sqrt(static_cast<double>(tissue_size)));
  for (std::size_t l = 0; l < tissue_size; ++l) out[static_cast<Eigen::Index>(l)] += noise(gen);
  return out;
}

/// x_0 = x_true (1 + sigma gamma) componentwise with sigma uniform on {-1, 1}
/// and gamma ~ N(delta_x, delta_x / 4) (variance). Not projected.
[[nodiscard]] inline Eigen::VectorXd perturb_initial(const Eigen::VectorXd& x_true, double delta_x,
                                                     std::uint64_t seed) {
  if (delta_x < 0.0) throw std::invalid_argument("perturb_initial: delta_x must be nonnegative");
  Eigen::VectorXd out = x_true;
  if (delta_x == 0.0) return out;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> gamma(delta_x, std::sqrt(delta_x / 4.0));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double sigma = (gen() >> 63) ? 1.0 : -1.0;
    out[i] = x_true[i] * (1.0 + sigma * gamma(gen));
  }
  return out;
}

/// Perturbed initial guess projected onto the model's domain.
[[nodiscard]] inline Eigen::VectorXd perturb_initial(const Eigen::VectorXd& x_true, double delta_x,
                                                     std::uint64_t seed, const ForwardModel& model) {
  return model.project(perturb_initial(x_true, delta_x, seed));
}

// ---------------------------------------------------------------------------
// Campaigns

/// Iteration cap used by the study: 300 for exact data, 200 otherwise.
[[nodiscard]] inline std::size_t default_max_iter(double delta_y) { return delta_y == 0.0 ? 300 : 200; }

struct CampaignSpec {
  double delta_y = 0.0;
  double delta_x = 0.05;
  std::size_t repetitions = 100;
  DataMode mode = DataMode::full;
  std::uint64_t seed = 20240101;
  IrgnmSettings settings;

  void validate() const {
    if (repetitions < 1) throw std::invalid_argument("campaign: repetitions must be >= 1");
    if (delta_y < 0.0 || delta_x < 0.0) throw std::invalid_argument("campaign: deltas must be nonnegative");
    settings.validate();
  }
};

/// Per-run summary kept by a campaign.
struct RunDigest {
  std::size_t repetition = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t init_seed = 0;
  StopReason stop_reason = StopReason::max_iter;
  std::size_t stop_iter = 0;
  std::size_t iterations = 0;
  double initial_rel_error = 0.0;
  double stop_residual = 0.0;
  double stop_rel_error = 0.0;
  double min_rel_error = 0.0;
  std::optional<double> rho_opt;
  std::optional<double> rho_d;
  bool diverged = false;
  std::string failure_message;
  std::vector<double> residual_norms;
  std::vector<double> rel_errors;
};

struct CampaignSummary {
  CampaignSpec spec;
  std::size_t diverged_count = 0;
  std::vector<RunDigest> runs;
  std::optional<std::size_t> median_run;  // index into runs
  std::optional<double> median_rho_opt;
};

/// Runs one repetition of a campaign.
[[nodiscard]] inline RunDigest run_repetition(const CampaignSpec& spec, const Scenario& scenario,
                                              const ForwardModel& model, const GroundTruth& truth,
                                              std::size_t repetition) {
  RunDigest digest;
  digest.repetition = repetition;
  digest.noise_seed = derive_seed(spec.seed, repetition, RandomStream::noise);
  digest.init_seed = derive_seed(spec.seed, repetition, RandomStream::initial_guess);

  const Eigen::VectorXd& x_true = truth.x_true.flat();
  const Eigen::VectorXd y = add_noise(truth.y_flat, model.tissue_size(), spec.delta_y, digest.noise_seed);
  Eigen::VectorXd x0 = perturb_initial(x_true, spec.delta_x, digest.init_seed);
  if (spec.mode == DataMode::known_cart) {
    // The plasma fraction plays no role with measured C_art; keep it exact.
    const auto layout = scenario.layout();
    x0.segment(static_cast<Eigen::Index>(layout.plasma_offset()), static_cast<Eigen::Index>(layout.q_hat)) =
        x_true.segment(static_cast<Eigen::Index>(layout.plasma_offset()), static_cast<Eigen::Index>(layout.q_hat));
  }
  x0 = model.project(x0);

  IrgnmSettings settings = spec.settings;
  settings.delta_estimate = spec.delta_y;
  settings.continue_after_discrepancy = true;
  settings.store_iterates = false;

  RunRecord record;
  try {
    record = run_irgnm(model, x0, y, settings, std::optional<Eigen::VectorXd>(x_true));
  } catch (const std::exception& e) {
    digest.stop_reason = StopReason::failure;
    digest.diverged = true;
    digest.failure_message = e.what();
    return digest;
  }
  digest.stop_reason = record.stop_reason;
  digest.stop_iter = record.stop_iter;
  digest.iterations = record.last_iter();
  digest.initial_rel_error = record.rel_errors.front();
  digest.stop_residual = record.residual_norms[record.stop_iter];
  digest.stop_rel_error = record.rel_errors[record.stop_iter];
  digest.min_rel_error = *std::min_element(record.rel_errors.begin(), record.rel_errors.end());
  digest.rho_opt = record.rho_opt;
  digest.rho_d = record.rho_d;
  digest.diverged = record.diverged;
  digest.failure_message = record.failure_message;
  digest.residual_norms = std::move(record.residual_norms);
  digest.rel_errors = std::move(record.rel_errors);
  return digest;
}

/// Index of the non-diverged run whose rho_opt is closest to the median
/// rho_opt of all non-diverged runs (lowest repetition on ties).
inline void select_median_run(CampaignSummary& summary) {
  std::vector<double> values;
  for (const auto& run : summary.runs)
    if (!run.diverged && run.rho_opt) values.push_back(*run.rho_opt);
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  const double median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  summary.median_rho_opt = median;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < summary.runs.size(); ++r) {
    const auto& run = summary.runs[r];
    if (run.diverged || !run.rho_opt) continue;
    const double dist = std::abs(*run.rho_opt - median);
    if (dist < best) {
      best = dist;
      summary.median_run = r;
    }
  }
}

/// Runs all repetitions (in parallel over `threads` workers; 0 = hardware
/// concurrency). The summary depends only on the spec and scenario.
[[nodiscard]] inline CampaignSummary run_campaign(const CampaignSpec& spec, const Scenario& scenario,
                                                  unsigned threads = 0) {
  spec.validate();
  scenario.validate();
  CampaignSummary summary;
  summary.spec = spec;
  summary.runs.resize(spec.repetitions);

  const auto model = scenario.make_model(spec.mode, spec.settings.epsilon);
  const auto truth = simulate_ground_truth(scenario, spec.mode);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, spec.repetitions));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < spec.repetitions; r = next++) {
      summary.runs[r] = run_repetition(spec, scenario, model, truth, r);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
  }

  for (const auto& run : summary.runs)
    if (run.diverged) ++summary.diverged_count;
  select_median_run(summary);
  return summary;
}

/// The full study grid: 4 noise levels x 4 perturbation levels x 2 modes.
[[nodiscard]] inline std::vector<CampaignSpec> study_grid(std::size_t repetitions, std::uint64_t seed,
                                                          const IrgnmSettings& base = {}) {
  std::vector<CampaignSpec> specs;
  for (DataMode mode : {DataMode::full, DataMode::known_cart}) {
    for (double dy : {0.0, 1e-4, 1e-3, 1e-2}) {
      for (double dx : {0.15, 0.1, 0.05, 0.01}) {
        CampaignSpec spec;
        spec.delta_y = dy;
        spec.delta_x = dx;
        spec.repetitions = repetitions;
        spec.mode = mode;
        spec.seed = seed;
        spec.settings = base;
        spec.settings.max_iter = default_max_iter(dy);
        specs.push_back(spec);
      }
    }
  }
  return specs;
}

}  // namespace tcm
