#pragma once

// Generative-model simulation and the static tracking sampler.

#include "policytest/allocation.hpp"
#include "policytest/mdp.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace policytest {

/// Seed for trial `index` of an experiment with base seed `base`:
/// splitmix64(base ^ splitmix64(index + 1)). Every trial owns its stream.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits of one engine output. The
/// engine is std::mt19937_64, whose output sequence is fixed by the standard.
double uniform01(std::mt19937_64& engine);

class SampleState {
 public:
  SampleState(int n_states, int n_actions, std::uint64_t seed);

  int n_states() const { return ns_; }
  int n_actions() const { return na_; }
  long t() const { return t_; }
  std::uint64_t seed() const { return seed_; }

  /// N_sa(t)
  const Eigen::MatrixXi& counts() const { return counts_; }
  /// n(s, a, s')
  long transitions(int s, int a, int s2) const { return next_[(static_cast<std::size_t>(s) * na_ + a) * ns_ + s2]; }

  void record(int s, int a, int s2);
  std::mt19937_64& engine() { return engine_; }

 private:
  int ns_, na_;
  long t_ = 0;
  std::uint64_t seed_;
  Eigen::MatrixXi counts_;
  std::vector<long> next_;
  std::mt19937_64 engine_;
};

/// Samples s' ~ kernel(. | s, a) and records the transition.
int draw(SampleState& state, const TransitionKernel& kernel, int s, int a);

/// Next pair of the static sampler: a pair with positive weight that was
/// never sampled, else argmin N_sa / w_sa; ties go to the lowest flat index
/// s * |A| + a.
std::pair<int, int> tracking_next(const SampleState& state, const Allocation& w);

/// Samples every pair with positive weight once, in flat index order.
void initialize(SampleState& state, const TransitionKernel& kernel, const Allocation& w);

struct EmpiricalKernel {
  TransitionKernel kernel;
  /// Rows with N_sa = 0, filled with the uniform distribution.
  std::vector<bool> placeholder;
};

EmpiricalKernel empirical_kernel(const SampleState& state);

}  // namespace policytest
