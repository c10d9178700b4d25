#pragma once

// Approximate solvers for the lower-bound problem in its swapped form:
//   u_NO(sigma) = min_q V_p(rho) V_q(rho)  s.t.  sum_sa w_sa KL(p_sa, q_sa) <= sigma
// and its inverse sigma_NC(u), which yields the characteristic time.

#include "policytest/allocation.hpp"
#include "policytest/kl.hpp"
#include "policytest/mdp.hpp"
#include "policytest/reversed.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace policytest {

enum class SolverMode { Faithful, Practical };

std::string to_string(SolverMode mode);
SolverMode parse_solver_mode(const std::string& name);

struct SolverConfig {
  SolverMode mode = SolverMode::Practical;
  double zeta = 0.05;
  /// Practical mode: cap on projected-gradient steps per solve.
  int max_inner_iters = 20;
  /// Practical mode: gradient steps have length 1 / step_L.
  double step_L = 400.0;
  std::size_t grid_cap = kDefaultGridCap;
  double projection_tol = 1e-10;
  /// sigma_nc stops once its bracket on sigma is this narrow.
  double bisection_tol = 1e-6;
  /// Practical mode: the solve counts as converged once a projected step is
  /// shorter than stationarity_tol times the unprojected tangent step.
  double stationarity_tol = 0.05;
  /// Practical mode: abandon the descent as soon as the best value drops
  /// below this level (the caller only needs to know u < level).
  std::optional<double> stop_below;

  /// Heuristic settings used by the sequential test: L = 400, 20 steps.
  static SolverConfig practical();
  /// Closed-form L, grid resolution and iteration count.
  static SolverConfig faithful(double zeta);
  /// Long-running practical descent used for characteristic times.
  static SolverConfig reference();
};

struct SolveResult {
  double u_value = 0.0;
  TransitionKernel argmin_kernel;
  long inner_iters_used = 0;
  std::size_t boxes_evaluated = 0;
  bool converged = false;
  /// True when the practical descent stopped early on `stop_below`.
  bool stopped_below = false;
  /// Practical mode: the final descent iterate, for warm-starting a later solve.
  TransitionKernel last_iterate;
};

/// Closed-form constants of the faithful solver for a given center kernel.
struct FaithfulConstants {
  double step_L = 0.0;
  double grid_h = 0.0;
  long iterations = 0;
};

FaithfulConstants faithful_constants(const ReversedView& view, double v_p, double zeta);

/// Approximates u_NO(sigma, w, p). Faithful mode enumerates the budget grid
/// and runs exact projected gradient on every product box; practical mode
/// runs a capped projected descent on the global KL ball, started from p or,
/// when given, from the projection of `warm_start` onto that ball.
SolveResult nested_pgd(const MdpInstance& instance, const TransitionKernel& p, double zeta, double sigma,
                       const Allocation& w, const SolverConfig& config, const TransitionKernel* warm_start = nullptr);

struct InnerResult {
  TransitionKernel kernel;
  double u_value = 0.0;
};

/// Projected gradient on Q(b) from q = p: M steps of length 1/L on
/// sign(V_p) V_bar. If `trajectory` is given it receives u after every step
/// (index k holds the value at iterate k, k = 0..M).
InnerResult inner_pgd(const TransitionKernel& p, const BudgetVector& b, long M, double L, const ReversedView& view,
                      std::vector<double>* trajectory = nullptr, const ProjectionOptions& opts = {});

class RangeError : public Error {
 public:
  using Error::Error;
};

struct SigmaResult {
  double sigma = 0.0;
  /// Minimizer found at the upper end of the final bracket.
  TransitionKernel argmin_kernel;
  double u_at_sigma = 0.0;
  int evaluations = 0;
};

/// Inverse of u_NO(., w, p) by bisection on sigma. Throws RangeError unless
/// min_q V_p V_q < u <= V_p^2.
SigmaResult sigma_nc(double u, const Allocation& w, const MdpInstance& instance, const TransitionKernel& p,
                     const SolverConfig& config);

struct CharacteristicTime {
  double t_star = 0.0;       // 1 / sigma_NC(0)
  double inverse = 0.0;      // sigma_NC(0)
  TransitionKernel minimizer;
  double minimizer_value = 0.0;  // V_{q*}(rho)
};

CharacteristicTime characteristic_time(const MdpInstance& instance, const TransitionKernel& p, const Allocation& w,
                                       const SolverConfig& config);

// Lattice oracles (test support). Both restrict |S| <= 3 and |A| <= 2 and
// search kernels whose rows lie on the lattice with denominator
// ceil(1 / resolution), plus the rows of p itself.
struct BruteForceResult {
  double u_value = 0.0;
  TransitionKernel argmin_kernel;
  std::size_t kernels_evaluated = 0;
};

/// min V_p V_q over lattice kernels with sum w KL(p, q) <= sigma (+1e-9 slack).
BruteForceResult u_no_bruteforce(const MdpInstance& instance, const TransitionKernel& p, double sigma,
                                 const Allocation& w, double resolution);
/// min V_p V_q over lattice kernels in the product box Q(b) (+1e-9 slack).
BruteForceResult u_box_bruteforce(const MdpInstance& instance, const TransitionKernel& p, const BudgetVector& b,
                                  double resolution);

}  // namespace policytest
