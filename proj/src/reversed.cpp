#include "policytest/reversed.hpp"

#include <cmath>
#include <limits>

namespace policytest {

ReversedView::ReversedView(const MdpInstance& base) : base_(&base) {
  rho_bar_ = base.policy.array().colwise() * base.rho.array();
  const double smallest = rho_bar_.minCoeff();
  inv_rho_bar_inf_ = smallest > 0.0 ? 1.0 / smallest : std::numeric_limits<double>::infinity();
}

Mat reversed_state_values(const TransitionKernel& candidate, const ReversedView& view) {
  const MdpInstance& m = view.base();
  if (candidate.n_states() != m.n_states || candidate.n_actions() != m.n_actions)
    throw DimensionError("candidate shape does not match the instance");
  const int ns = m.n_states, na = m.n_actions, n = ns * na;
  // Transition between reversed states: (s, a) -> (s', a') with
  // probability candidate(s'|s, a) * pi(a'|s').
  Mat lhs = Mat::Identity(n, n);
  Vec rhs(n);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      const int i = s * na + a;
      rhs(i) = m.reward(s, a);
      auto row = candidate.row(s, a);
      for (int s2 = 0; s2 < ns; ++s2)
        for (int a2 = 0; a2 < na; ++a2) lhs(i, s2 * na + a2) -= m.gamma * row[s2] * m.policy(s2, a2);
    }
  Vec v = lhs.partialPivLu().solve(rhs);
  if (!v.allFinite()) throw Error("singular reversed Bellman system");
  Mat out(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) out(s, a) = v(s * na + a);
  return out;
}

double reversed_value(const TransitionKernel& candidate, const ReversedView& view) {
  return view.rho_bar().cwiseProduct(reversed_state_values(candidate, view)).sum();
}

GradientTensor reversed_gradient(const TransitionKernel& candidate, const ReversedView& view) {
  const MdpInstance& m = view.base();
  const ValueBundle vb = value_bundle(candidate, m);
  const Visitation d = visitation(candidate, m);
  GradientTensor g(m.n_states, m.n_actions);
  const double inv = 1.0 / (1.0 - m.gamma);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      const double scale = d.d_state_action(s, a) * inv;
      auto row = g.row(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) row[s2] = scale * (m.reward(s, a) + m.gamma * vb.v(s2));
    }
  return g;
}

SmoothnessConstants smoothness_constants(const ReversedView& view) {
  const MdpInstance& m = view.base();
  const double r_max = m.r_max();
  const double denom = std::pow(1.0 - m.gamma, 3);
  const double actions = view.n_actions();
  return {2.0 * m.gamma * actions * r_max / denom, 2.0 * (m.gamma * actions + 1.0) * r_max / denom};
}

}  // namespace policytest
