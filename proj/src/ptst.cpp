#include "policytest/ptst.hpp"

#include "policytest/sampling.hpp"

#include <cmath>

namespace policytest {

double beta_threshold(const Eigen::MatrixXi& counts, double delta, int n_states) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (n_states < 1) throw InvalidInput("n_states must be positive");
  const double k = n_states - 1;
  double sum = 0.0;
  if (k > 0.0)
    for (Eigen::Index i = 0; i < counts.size(); ++i) sum += 1.0 + std::log1p(counts.data()[i] / k);
  return std::log(1.0 / delta) + k * sum;
}

double ZetaSchedule::operator()(long t) const {
  if (t < 1) throw InvalidInput("zeta schedule needs t >= 1");
  return scale / std::pow(static_cast<double>(t), exponent);
}

TestRunRecord ptst_run(const MdpInstance& m, const Allocation& w, double delta, const PtstOptions& opt,
                       std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (opt.check_stride < 1) throw InvalidInput("check_stride must be positive");
  if (w.n_states() != m.n_states || w.n_actions() != m.n_actions)
    throw DimensionError("allocation shape does not match the instance");

  TestRunRecord rec;
  rec.delta = delta;
  rec.seed = seed;

  SampleState state(m.n_states, m.n_actions, seed);
  initialize(state, m.kernel, w);
  const long t0 = state.t();
  // The practical descent resumes from the previous check's iterate.
  std::optional<TransitionKernel> carry;

  auto stop_now = [&]() {
    const long t = state.t();
    const EmpiricalKernel p_hat = empirical_kernel(state);
    const Allocation w_hat = Allocation::from_counts(state.counts());
    TraceEntry entry;
    entry.t = t;
    entry.sigma = beta_threshold(state.counts(), delta, m.n_states) / static_cast<double>(t);
    entry.zeta = opt.zeta(t);
    ++rec.checks;
    bool stop = false;
    try {
      SolverConfig cfg = opt.solver;
      cfg.stop_below = entry.zeta;
      SolveResult r = nested_pgd(m, p_hat.kernel, entry.zeta, entry.sigma, w_hat, cfg, carry ? &*carry : nullptr);
      if (cfg.mode == SolverMode::Practical) carry = std::move(r.last_iterate);
      entry.u = r.u_value;
      entry.converged = r.converged;
      // An unconverged practical descent is never used as a certificate.
      stop = r.u_value >= entry.zeta && r.converged;
    } catch (const Error& e) {
      entry.error = e.what();
    }
    if (opt.record_trace) rec.trace.push_back(std::move(entry));
    return stop;
  };

  bool stopped = stop_now();
  while (!stopped && state.t() < opt.max_rounds) {
    const auto [s, a] = tracking_next(state, w);
    draw(state, m.kernel, s, a);
    if ((state.t() - t0) % opt.check_stride == 0) stopped = stop_now();
  }

  rec.tau = state.t();
  if (!stopped) {
    rec.outcome = RunOutcome::BudgetExceeded;
    return rec;
  }
  rec.outcome = RunOutcome::Stopped;
  const EmpiricalKernel p_hat = empirical_kernel(state);
  rec.decision = answer(p_hat.kernel, m);
  try {
    rec.correct = *rec.decision == answer(m.kernel, m);
  } catch (const BoundaryError&) {
    // True value on the threshold: correctness is undefined.
  }
  return rec;
}

nlohmann::json to_json(const TestRunRecord& r) {
  nlohmann::json doc;
  doc["delta"] = r.delta;
  doc["seed"] = r.seed;
  doc["outcome"] = r.outcome == RunOutcome::Stopped ? "stopped" : "budget_exceeded";
  doc["tau"] = r.tau;
  doc["decision"] = r.decision ? nlohmann::json(to_string(*r.decision)) : nlohmann::json(nullptr);
  doc["correct"] = r.correct ? nlohmann::json(*r.correct) : nlohmann::json(nullptr);
  doc["checks"] = r.checks;
  if (!r.trace.empty()) {
    auto& trace = doc["trace"] = nlohmann::json::array();
    for (const TraceEntry& e : r.trace) {
      nlohmann::json row = {{"t", e.t}, {"sigma", e.sigma}, {"u", e.u}, {"zeta", e.zeta}, {"converged", e.converged}};
      if (!e.error.empty()) row["error"] = e.error;
      trace.push_back(std::move(row));
    }
  }
  return doc;
}

}  // namespace policytest
