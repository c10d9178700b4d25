#pragma once

// The reversed MDP: states are pairs (s, a), actions are next states s',
// and a candidate transition kernel plays the role of the policy. The target
// policy pi becomes part of the fixed dynamics.

#include "policytest/mdp.hpp"

namespace policytest {

class ReversedView {
 public:
  /// `base` must outlive the view.
  explicit ReversedView(const MdpInstance& base);

  const MdpInstance& base() const { return *base_; }
  /// rho_bar(s, a) = rho_s pi(a|s)
  const Mat& rho_bar() const { return rho_bar_; }
  /// r_bar((s, a), s') = r(s, a)
  const Mat& r_bar() const { return base_->reward; }
  double one_over_rho_bar_inf() const { return inv_rho_bar_inf_; }
  int n_states() const { return base_->n_states * base_->n_actions; }
  int n_actions() const { return base_->n_states; }

 private:
  const MdpInstance* base_;
  Mat rho_bar_;
  double inv_rho_bar_inf_;
};

using GradientTensor = KernelArray;

/// V_bar(s_bar) for every reversed state, laid out as an (s, a) matrix. Solved
/// directly on the |S||A|-state reversed chain; equals Q^pi_candidate(s, a).
Mat reversed_state_values(const TransitionKernel& candidate, const ReversedView& view);

/// V_bar^{candidate}(rho_bar), which equals V^pi_candidate(rho).
double reversed_value(const TransitionKernel& candidate, const ReversedView& view);

/// g(s, a, s') = d_rho(s, a) / (1 - gamma) * (r(s, a) + gamma V(s')),
/// the policy gradient of V_bar(rho_bar) with respect to candidate(s'|s, a).
GradientTensor reversed_gradient(const TransitionKernel& candidate, const ReversedView& view);

struct SmoothnessConstants {
  double l0 = 0.0;  // 2 gamma |S| r_max / (1 - gamma)^3
  double l = 0.0;   // 2 (gamma |S| + 1) r_max / (1 - gamma)^3
};

SmoothnessConstants smoothness_constants(const ReversedView& view);

}  // namespace policytest
