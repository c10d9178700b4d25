#pragma once

// Built-in instances, delta sweeps and characteristic-time reports.

#include "policytest/allocation.hpp"
#include "policytest/mdp.hpp"
#include "policytest/ptst.hpp"
#include "policytest/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace policytest {

struct BuiltinInstance {
  MdpInstance instance;
  Allocation allocation;  // uniform
};

/// two_state, three_state, five_state or nonconvex_example. The published
/// tables are rounded to four digits, so their rows are renormalized.
BuiltinInstance builtin_instance(const std::string& name);
std::vector<std::string> builtin_names();

/// The two kernels q1, q2 of the non-convexity example; their midpoint is the
/// example's kernel.
std::pair<TransitionKernel, TransitionKernel> nonconvex_alternatives();

/// A built-in name or a path to a JSON instance file (uniform allocation).
BuiltinInstance resolve_instance(const std::string& name_or_path);

struct SweepSpec {
  std::string instance = "two_state";
  std::vector<double> delta_grid = {1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-14};
  int trials = 30;
  std::uint64_t seed = 0;
  SolverMode mode = SolverMode::Practical;
  std::string output;  // empty: no file
  std::string format = "csv";
  int threads = 0;  // 0: hardware concurrency
  long check_stride = 1;
  long max_rounds = 1'000'000;
  /// Stop scheduling new deltas once this much wall time has passed (0: no
  /// limit). The first delta always runs.
  double time_budget_s = 0.0;

  void validate() const;
};

SweepSpec sweep_spec_from_json(const nlohmann::json& doc);

struct TrialRow {
  double delta = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  long tau = 0;
  std::string decision;  // "+", "-" or "none" (budget exceeded)
  std::string correct;   // "true", "false" or "na"
  double wall_ms = 0.0;
  std::string solver_mode;
};

struct SweepSummary {
  double delta = 0.0;
  int trials = 0;
  double mean_tau = 0.0;
  double stderr_tau = 0.0;
  double error_fraction = 0.0;
  int budget_exceeded = 0;
};

struct SweepResult {
  std::vector<TrialRow> rows;  // delta-major, trial-minor
  std::vector<SweepSummary> summary;
};

/// Trial i of every delta uses the stream trial_seed(spec.seed, i).
SweepResult run_sweep(const SweepSpec& spec);

inline constexpr const char* kSweepCsvHeader = "delta,trial,seed,tau,decision,correct,wall_ms,solver_mode";

void write_rows_csv(std::ostream& out, const std::vector<TrialRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary);
nlohmann::json sweep_to_json(const SweepResult& result);
/// Writes spec.output (and, for CSV, spec.output + ".summary.csv").
void write_sweep(const SweepSpec& spec, const SweepResult& result);

struct CharacteristicTimeReport {
  double v_p = 0.0;
  double t_star = 0.0;
  double sigma_star = 0.0;
  double minimizer_value = 0.0;
  double minimizer_weighted_kl = 0.0;
  TransitionKernel minimizer;
};

/// Throws InvalidInput when the instance or allocation fail validation.
CharacteristicTimeReport report_characteristic_time(const MdpInstance& instance, const Allocation& w,
                                                    const SolverConfig& config = SolverConfig::reference());

/// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace policytest
