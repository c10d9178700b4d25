#pragma once

// The sequential policy test with static sampling.

#include "policytest/allocation.hpp"
#include "policytest/mdp.hpp"
#include "policytest/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace policytest {

/// beta(t, delta) = log(1/delta) + (|S|-1) sum_sa log(e (1 + N_sa / (|S|-1))), in nats.
double beta_threshold(const Eigen::MatrixXi& counts, double delta, int n_states);

/// zeta_t = scale / t^exponent; the default is 5 / t^{3/2}.
struct ZetaSchedule {
  double scale = 5.0;
  double exponent = 1.5;
  double operator()(long t) const;
};

struct PtstOptions {
  SolverConfig solver = SolverConfig::practical();
  ZetaSchedule zeta;
  long check_stride = 1;
  long max_rounds = 1'000'000;
  bool record_trace = false;
};

struct TraceEntry {
  long t = 0;
  double sigma = 0.0;  // beta(t, delta) / t
  double u = 0.0;
  double zeta = 0.0;
  bool converged = false;
  std::string error;  // solver failure; sampling continued
};

enum class RunOutcome { Stopped, BudgetExceeded };

struct TestRunRecord {
  double delta = 0.0;
  std::uint64_t seed = 0;
  RunOutcome outcome = RunOutcome::BudgetExceeded;
  long tau = 0;  // stopping round, or the last round when the budget ran out
  std::optional<Sign> decision;
  std::optional<bool> correct;
  long checks = 0;
  std::vector<TraceEntry> trace;
};

/// Runs one sequential test against the generative model of `instance`.
/// Every `check_stride` rounds the solver approximates
/// u_NO(beta(t)/t, w_hat(t), p_hat_t) to tolerance zeta_t; the test stops
/// once u >= zeta_t (and, in practical mode, the descent converged) and
/// reports the answer of p_hat_tau.
TestRunRecord ptst_run(const MdpInstance& instance, const Allocation& w, double delta, const PtstOptions& options,
                       std::uint64_t seed);

nlohmann::json to_json(const TestRunRecord& record);

}  // namespace policytest
