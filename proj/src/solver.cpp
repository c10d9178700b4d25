#include "policytest/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace policytest {

std::string to_string(SolverMode mode) { return mode == SolverMode::Faithful ? "faithful" : "practical"; }

SolverMode parse_solver_mode(const std::string& name) {
  if (name == "faithful") return SolverMode::Faithful;
  if (name == "practical") return SolverMode::Practical;
  throw InvalidInput("unknown solver mode '" + name + "' (expected faithful or practical)");
}

SolverConfig SolverConfig::practical() { return SolverConfig{}; }

SolverConfig SolverConfig::faithful(double zeta) {
  SolverConfig c;
  c.mode = SolverMode::Faithful;
  c.zeta = zeta;
  return c;
}

SolverConfig SolverConfig::reference() {
  SolverConfig c;
  c.max_inner_iters = 20000;
  c.stationarity_tol = 1e-9;
  c.projection_tol = 1e-12;
  return c;
}

FaithfulConstants faithful_constants(const ReversedView& view, double v_p, double zeta) {
  const MdpInstance& m = view.base();
  if (!(zeta > 0.0)) throw InvalidInput("zeta must be positive");
  const double r_max = m.r_max();
  const double g = m.gamma;
  const double ns = m.n_states, na = m.n_actions;
  const double bar_states = ns * na;
  const double bar_actions = ns;
  const double abs_v = std::abs(v_p);
  const double inv_rho2 = view.one_over_rho_bar_inf() * view.one_over_rho_bar_inf();

  FaithfulConstants c;
  c.step_L = smoothness_constants(view).l;
  c.grid_h = zeta * zeta * std::pow(1.0 - g, 4) / (18.0 * ns * ns * na * na * abs_v * abs_v * r_max * r_max);
  const double m_real =
      384.0 * (g * bar_actions + 1.0) * bar_states * r_max * abs_v * inv_rho2 / (std::pow(1.0 - g, 5) * zeta);
  if (!(m_real < 1e15)) throw InvalidInput("iteration count overflows");
  c.iterations = std::max<long>(1, static_cast<long>(std::ceil(m_real)));
  return c;
}

InnerResult inner_pgd(const TransitionKernel& p, const BudgetVector& b, long M, double L, const ReversedView& view,
                      std::vector<double>* trajectory, const ProjectionOptions& opts) {
  if (M < 1) throw InvalidInput("inner_pgd: M must be at least 1");
  if (!(L > 0.0)) throw InvalidInput("inner_pgd: L must be positive");
  const MdpInstance& m = view.base();
  const double v_p = value_rho(p, m);
  const double step = (v_p > 0.0 ? 1.0 : -1.0) / L;

  TransitionKernel q = p;
  if (trajectory) {
    trajectory->clear();
    trajectory->push_back(v_p * v_p);
  }
  for (long k = 0; k < M; ++k) {
    KernelArray x = q.array();
    x -= step * reversed_gradient(q, view);
    q = project_product_box(x, p, b, opts);
    if (trajectory) trajectory->push_back(v_p * value_rho(q, m));
  }
  return {q, v_p * value_rho(q, m)};
}

namespace {

SolveResult solve_faithful(const MdpInstance& m, const TransitionKernel& p, double v_p, double zeta, double sigma,
                           const Allocation& w, const SolverConfig& cfg) {
  const ReversedView view(m);
  const FaithfulConstants c = faithful_constants(view, v_p, zeta);
  const std::vector<BudgetVector> grid = budget_grid(sigma, w, c.grid_h, cfg.grid_cap);
  const ProjectionOptions opts{cfg.projection_tol, 200};

  SolveResult out;
  out.u_value = std::numeric_limits<double>::infinity();
  for (const BudgetVector& b : grid) {
    InnerResult r = inner_pgd(p, b, c.iterations, c.step_L, view, nullptr, opts);
    // Strict comparison keeps the lexicographically first minimizer.
    if (r.u_value < out.u_value) {
      out.u_value = r.u_value;
      out.argmin_kernel = std::move(r.kernel);
    }
    ++out.boxes_evaluated;
    out.inner_iters_used += c.iterations;
  }
  out.converged = true;
  return out;
}

double tangent_norm(const KernelArray& g) {
  double total = 0.0;
  for (int i = 0; i < g.n_rows(); ++i) {
    auto row = g.row(i);
    double mean = 0.0;
    for (double x : row) mean += x;
    mean /= static_cast<double>(row.size());
    for (double x : row) total += (x - mean) * (x - mean);
  }
  return std::sqrt(total);
}

SolveResult solve_practical(const MdpInstance& m, const TransitionKernel& p, double v_p, double sigma,
                            const Allocation& w, const SolverConfig& cfg, const TransitionKernel* warm_start) {
  if (cfg.max_inner_iters < 1) throw InvalidInput("max_inner_iters must be positive");
  if (!(cfg.step_L > 0.0)) throw InvalidInput("step_L must be positive");
  const ReversedView view(m);
  const ProjectionOptions opts{cfg.projection_tol, 200};
  const double step = (v_p > 0.0 ? 1.0 : -1.0) / cfg.step_L;

  SolveResult out;
  out.u_value = v_p * v_p;
  out.argmin_kernel = p;
  out.boxes_evaluated = 1;
  TransitionKernel q = p;
  if (warm_start) {
    if (warm_start->n_states() != p.n_states() || warm_start->n_actions() != p.n_actions())
      throw DimensionError("warm start shape does not match the kernel");
    q = project_global_kl(warm_start->array(), p, w, sigma, opts).q;
    const double u = v_p * value_rho(q, m);
    if (u < out.u_value) {
      out.u_value = u;
      out.argmin_kernel = q;
    }
  }
  for (int k = 0; k < cfg.max_inner_iters; ++k) {
    if (cfg.stop_below && out.u_value < *cfg.stop_below) {
      out.stopped_below = true;
      break;
    }
    const GradientTensor g = reversed_gradient(q, view);
    KernelArray x = q.array();
    x -= step * g;
    GlobalProjection proj = project_global_kl(x, p, w, sigma, opts);
    const double moved = (proj.q.array() - q.array()).norm();
    const double free_step = tangent_norm(g) / cfg.step_L;
    q = std::move(proj.q);
    ++out.inner_iters_used;

    const double u = v_p * value_rho(q, m);
    if (u < out.u_value) {
      out.u_value = u;
      out.argmin_kernel = q;
    }
    if (moved <= cfg.stationarity_tol * free_step || free_step <= 1e-14) {
      out.converged = true;
      break;
    }
  }
  out.last_iterate = std::move(q);
  return out;
}

}  // namespace

SolveResult nested_pgd(const MdpInstance& m, const TransitionKernel& p, double zeta, double sigma,
                       const Allocation& w, const SolverConfig& cfg, const TransitionKernel* warm_start) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be nonnegative");
  if (w.n_states() != m.n_states || w.n_actions() != m.n_actions)
    throw DimensionError("allocation shape does not match the instance");
  const double v_p = value_rho(p, m);
  if (std::abs(v_p) <= kDefaultBoundaryTol) {
    SolveResult out;
    out.argmin_kernel = p;
    out.converged = true;
    out.last_iterate = p;
    return out;
  }
  if (cfg.mode == SolverMode::Faithful) return solve_faithful(m, p, v_p, zeta, sigma, w, cfg);
  return solve_practical(m, p, v_p, sigma, w, cfg, warm_start);
}

SigmaResult sigma_nc(double u, const Allocation& w, const MdpInstance& m, const TransitionKernel& p,
                     const SolverConfig& cfg) {
  const double v_p = value_rho(p, m);
  if (std::abs(v_p) <= kDefaultBoundaryTol) throw RangeError("sigma_nc: V_p(rho) is zero");
  const ExtremalValues ext = extremal_values(m);
  const double u_top = v_p * v_p;
  const double u_floor = v_p * (v_p > 0.0 ? ext.min_value : ext.max_value);
  if (!(u > u_floor) || u > u_top + 1e-12) {
    std::ostringstream msg;
    msg << "sigma_nc: u = " << u << " outside (" << u_floor << ", " << u_top << "]";
    throw RangeError(msg.str());
  }

  SigmaResult out;
  auto solve = [&](double sigma) {
    ++out.evaluations;
    return nested_pgd(m, p, cfg.zeta, sigma, w, cfg);
  };
  if (u >= u_top) {
    out.argmin_kernel = p;
    out.u_at_sigma = u_top;
    return out;
  }

  double lo = 0.0, hi = 1.0;
  SolveResult at_hi = solve(hi);
  int doublings = 0;
  while (at_hi.u_value > u) {
    if (++doublings > 60) throw RangeError("sigma_nc: no bracket found after 60 doublings");
    lo = hi;
    hi *= 2.0;
    at_hi = solve(hi);
  }
  while (hi - lo > cfg.bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    SolveResult r = solve(mid);
    if (r.u_value <= u) {
      hi = mid;
      at_hi = std::move(r);
    } else {
      lo = mid;
    }
  }
  out.sigma = hi;
  out.argmin_kernel = std::move(at_hi.argmin_kernel);
  out.u_at_sigma = at_hi.u_value;
  return out;
}

CharacteristicTime characteristic_time(const MdpInstance& m, const TransitionKernel& p, const Allocation& w,
                                       const SolverConfig& cfg) {
  SigmaResult r = sigma_nc(0.0, w, m, p, cfg);
  if (!(r.sigma > 0.0)) throw RangeError("characteristic_time: sigma_NC(0) is zero");
  CharacteristicTime out;
  out.inverse = r.sigma;
  out.t_star = 1.0 / r.sigma;
  out.minimizer_value = value_rho(r.argmin_kernel, m);
  out.minimizer = std::move(r.argmin_kernel);
  return out;
}

}  // namespace policytest
