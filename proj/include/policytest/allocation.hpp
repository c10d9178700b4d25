#pragma once

#include "policytest/mdp.hpp"

namespace policytest {

/// Sampling proportions over state-action pairs, stored as an (s, a) matrix
/// summing to one.
class Allocation {
 public:
  Allocation() = default;
  /// Throws InvalidInput on negative entries or when the total is off by
  /// more than 1e-12 (smaller drift is renormalized).
  explicit Allocation(Mat w);

  static Allocation uniform(int n_states, int n_actions);
  /// Empirical proportions N_sa / t. Throws if every count is zero.
  static Allocation from_counts(const Eigen::MatrixXi& counts);

  int n_states() const { return static_cast<int>(w_.rows()); }
  int n_actions() const { return static_cast<int>(w_.cols()); }
  double operator()(int s, int a) const { return w_(s, a); }
  double flat(int i) const { return w_(i / n_actions(), i % n_actions()); }
  const Mat& weights() const { return w_; }

  bool full_support() const { return (w_.array() > 0.0).all(); }
  int support_size() const { return static_cast<int>((w_.array() > 0.0).count()); }

 private:
  Mat w_;
};

/// Per-pair KL budgets in nats, stored as an (s, a) matrix.
struct BudgetVector {
  Mat b;

  double weighted_total(const Allocation& w) const { return w.weights().cwiseProduct(b).sum(); }
  bool in_budget_simplex(const Allocation& w, double sigma, double slack = 0.0) const {
    return (b.array() >= 0.0).all() && weighted_total(w) <= sigma + slack;
  }
};

}  // namespace policytest
