#include "policytest/sampling.hpp"

namespace policytest {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index) { return splitmix64(base ^ splitmix64(index + 1)); }

double uniform01(std::mt19937_64& engine) { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

SampleState::SampleState(int n_states, int n_actions, std::uint64_t seed)
    : ns_(n_states),
      na_(n_actions),
      seed_(seed),
      counts_(Eigen::MatrixXi::Zero(n_states, n_actions)),
      next_(static_cast<std::size_t>(n_states) * n_actions * n_states, 0),
      engine_(seed) {
  if (n_states <= 0 || n_actions <= 0) throw DimensionError("sample state dimensions must be positive");
}

void SampleState::record(int s, int a, int s2) {
  if (s < 0 || s >= ns_ || a < 0 || a >= na_ || s2 < 0 || s2 >= ns_) throw DimensionError("transition out of range");
  ++counts_(s, a);
  ++next_[(static_cast<std::size_t>(s) * na_ + a) * ns_ + s2];
  ++t_;
}

int draw(SampleState& state, const TransitionKernel& kernel, int s, int a) {
  if (kernel.n_states() != state.n_states() || kernel.n_actions() != state.n_actions())
    throw DimensionError("kernel shape does not match the sample state");
  auto row = kernel.row(s, a);
  const double u = uniform01(state.engine());
  double acc = 0.0;
  int pick = -1;
  for (int s2 = 0; s2 < state.n_states(); ++s2) {
    if (row[s2] <= 0.0) continue;
    pick = s2;
    acc += row[s2];
    if (u < acc) break;
  }
  state.record(s, a, pick);
  return pick;
}

std::pair<int, int> tracking_next(const SampleState& state, const Allocation& w) {
  if (w.n_states() != state.n_states() || w.n_actions() != state.n_actions())
    throw DimensionError("allocation shape does not match the sample state");
  const auto& n = state.counts();
  std::pair<int, int> best{-1, -1};
  double best_ratio = 0.0;
  for (int s = 0; s < state.n_states(); ++s)
    for (int a = 0; a < state.n_actions(); ++a) {
      if (w(s, a) <= 0.0) continue;
      if (n(s, a) == 0) return {s, a};
      const double ratio = n(s, a) / w(s, a);
      if (best.first < 0 || ratio < best_ratio) {
        best = {s, a};
        best_ratio = ratio;
      }
    }
  if (best.first < 0) throw InvalidInput("allocation has no positive entry");
  return best;
}

void initialize(SampleState& state, const TransitionKernel& kernel, const Allocation& w) {
  for (int s = 0; s < state.n_states(); ++s)
    for (int a = 0; a < state.n_actions(); ++a)
      if (w(s, a) > 0.0 && state.counts()(s, a) == 0) draw(state, kernel, s, a);
}

EmpiricalKernel empirical_kernel(const SampleState& state) {
  const int ns = state.n_states(), na = state.n_actions();
  KernelArray arr(ns, na);
  EmpiricalKernel out;
  out.placeholder.assign(static_cast<std::size_t>(ns) * na, false);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      const int total = state.counts()(s, a);
      auto row = arr.row(s, a);
      if (total == 0) {
        out.placeholder[s * na + a] = true;
        for (double& x : row) x = 1.0 / ns;
        continue;
      }
      for (int s2 = 0; s2 < ns; ++s2) row[s2] = static_cast<double>(state.transitions(s, a, s2)) / total;
    }
  out.kernel = TransitionKernel(std::move(arr), 1e-9);
  return out;
}

}  // namespace policytest
