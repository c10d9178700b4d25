#pragma once

// KL divergences between kernel rows, Euclidean projections onto
// KL-constrained sets of kernels, and the lattice of per-pair budgets.

#include "policytest/allocation.hpp"
#include "policytest/mdp.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace policytest {

/// sum p log(p / q) with 0 log 0 = 0; +inf on a support mismatch.
double kl_row(std::span<const double> p, std::span<const double> q);

/// sum_sa w_sa KL(p_sa, q_sa); a pair with zero weight contributes 0.
double weighted_kl(const Allocation& w, const TransitionKernel& p, const TransitionKernel& q);

/// Euclidean projection onto the probability simplex.
std::vector<double> project_simplex(std::span<const double> x);

struct ProjectionOptions {
  double tol = 1e-10;
  int max_iter = 200;
};

struct RowProjection {
  std::vector<double> q;
  double kl = 0.0;
  double multiplier = 0.0;  // KL multiplier; 0 when the ball is slack
  double residual = 0.0;    // |KL - budget| when active, simplex error otherwise
  int iterations = 0;
  bool converged = true;
};

/// Projects x onto { q in simplex : KL(p, q) <= budget }.
RowProjection project_kl_ball(std::span<const double> x, std::span<const double> p, double budget,
                              const ProjectionOptions& opts = {});

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, int s, int a, double residual)
      : Error(what), s_(s), a_(a), residual_(residual) {}
  int s() const { return s_; }
  int a() const { return a_; }
  double residual() const { return residual_; }

 private:
  int s_, a_;
  double residual_;
};

/// Row-wise projection onto the product box Q(b). Throws ProjectionError
/// naming the first row that failed to converge.
TransitionKernel project_product_box(const KernelArray& x, const TransitionKernel& p, const BudgetVector& b,
                                     const ProjectionOptions& opts = {});

struct GlobalProjection {
  TransitionKernel q;
  double weighted_kl = 0.0;
  double multiplier = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Projects x onto { q : sum_sa w_sa KL(p_sa, q_sa) <= sigma } by a scalar
/// search on the multiplier of the coupling constraint; each row then solves
/// a penalized subproblem with multiplier lambda * w_sa.
GlobalProjection project_global_kl(const KernelArray& x, const TransitionKernel& p, const Allocation& w,
                                   double sigma, const ProjectionOptions& opts = {});

class GridExplosion : public Error {
 public:
  GridExplosion(const std::string& what, double estimate) : Error(what), estimate_(estimate) {}
  double estimated_points() const { return estimate_; }

 private:
  double estimate_;
};

inline constexpr std::size_t kDefaultGridCap = 1'000'000;

/// Upper bound on |{b in B_sigma(w) : b_sa in h Z_+}| (volume of the
/// enlarged budget simplex in lattice units). +inf if some w_sa = 0.
double budget_grid_estimate(double sigma, const Allocation& w, double h);

/// Every lattice point of the weighted budget simplex, in lexicographic order
/// of the integer multipliers over pairs (s, a). Throws GridExplosion when the
/// grid holds more than `cap` points.
std::vector<BudgetVector> budget_grid(double sigma, const Allocation& w, double h,
                                      std::size_t cap = kDefaultGridCap);

}  // namespace policytest
