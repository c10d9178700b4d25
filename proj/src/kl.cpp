#include "policytest/kl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace policytest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stationary point of 1/2 (q - x)^2 + nu q - lp log q in q > 0, i.e. the
// positive root of q^2 - c q - lp = 0 with c = x - nu. lp = 0 gives the
// plain simplex clamp.
double penalized_component(double c, double lp) {
  if (lp <= 0.0) return std::max(c, 0.0);
  const double disc = std::sqrt(c * c + 4.0 * lp);
  return c >= 0.0 ? 0.5 * (c + disc) : 2.0 * lp / (disc - c);
}

double penalized_slope(double c, double lp, double q) {
  if (lp <= 0.0) return c > 0.0 ? 1.0 : 0.0;
  return q / std::sqrt(c * c + 4.0 * lp);
}

// Solves sum_i q_i(nu) = 1 for the row multiplier nu. The sum is convex and
// decreasing in nu, so Newton started left of the root climbs to it
// monotonically; bisection takes over if the step leaves the bracket.
int solve_row(std::span<const double> x, std::span<const double> p, double lambda, std::vector<double>& q,
              const ProjectionOptions& opts) {
  const std::size_t n = x.size();
  q.resize(n);
  const double xmax = *std::max_element(x.begin(), x.end());
  double lo = xmax - 1.0;
  double hi = xmax + lambda + 1.0;
  double nu = lo;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    double sum = 0.0, slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = x[i] - nu;
      const double lp = lambda * p[i];
      q[i] = penalized_component(c, lp);
      sum += q[i];
      slope += penalized_slope(c, lp, q[i]);
    }
    const double f = sum - 1.0;
    if (std::abs(f) <= 1e-15) break;
    if (f > 0.0)
      lo = nu;
    else
      hi = nu;
    double next = slope > 0.0 ? nu + f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == nu || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(nu))) break;
    nu = next;
  }
  const double sum = std::accumulate(q.begin(), q.end(), 0.0);
  for (double& v : q) v /= sum;
  return it + 1;
}

struct RootResult {
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Finds lambda > 0 with g(lambda) in [-tol, 0] for g decreasing, given
// g(0) > 0 (possibly +inf). Bracketing regula falsi with the Illinois
// modification; the returned point always satisfies g <= 0.
RootResult decreasing_root(const std::function<double(double)>& g, double g0, const ProjectionOptions& opts) {
  RootResult out;
  double lo = 0.0, glo = g0;
  double hi = 1.0, ghi = g(hi);
  int it = 1;
  while (ghi > 0.0 && it < opts.max_iter) {
    lo = hi;
    glo = ghi;
    hi *= 2.0;
    ghi = g(hi);
    ++it;
  }
  if (ghi > 0.0) {
    out.lambda = hi;
    out.iterations = it;
    return out;
  }
  // glo/ghi carry the Illinois-scaled values; hi_value the true g(hi).
  double hi_value = ghi;
  int side = 0;
  while (it < opts.max_iter) {
    if (hi_value >= -opts.tol || hi - lo <= 1e-15 * hi) {
      out.converged = true;
      break;
    }
    double m;
    if (std::isfinite(glo) && glo > ghi)
      m = hi - ghi * (hi - lo) / (ghi - glo);
    else
      m = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
    if (!(m > lo && m < hi)) m = 0.5 * (lo + hi);
    const double gm = g(m);
    ++it;
    if (gm <= 0.0) {
      hi = m;
      ghi = hi_value = gm;
      if (side == -1 && std::isfinite(glo)) glo *= 0.5;
      side = -1;
    } else {
      lo = m;
      glo = gm;
      if (side == 1) ghi *= 0.5;
      side = 1;
    }
  }
  out.lambda = hi;
  out.iterations = it;
  return out;
}

}  // namespace

double kl_row(std::span<const double> p, std::span<const double> q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInf;
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(sum, 0.0);
}

double weighted_kl(const Allocation& w, const TransitionKernel& p, const TransitionKernel& q) {
  if (p.n_states() != q.n_states() || p.n_actions() != q.n_actions() || w.n_states() != p.n_states() ||
      w.n_actions() != p.n_actions())
    throw DimensionError("weighted_kl: shape mismatch");
  double total = 0.0;
  for (int s = 0; s < p.n_states(); ++s)
    for (int a = 0; a < p.n_actions(); ++a) {
      if (w(s, a) == 0.0) continue;
      total += w(s, a) * kl_row(p.row(s, a), q.row(s, a));
    }
  return total;
}

std::vector<double> project_simplex(std::span<const double> x) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::max(x[i] - theta, 0.0);
  const double sum = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= sum;
  return out;
}

RowProjection project_kl_ball(std::span<const double> x, std::span<const double> p, double budget,
                              const ProjectionOptions& opts) {
  if (x.size() != p.size()) throw DimensionError("project_kl_ball: size mismatch");
  if (!(budget >= 0.0)) throw InvalidInput("project_kl_ball: negative budget");
  RowProjection out;
  if (budget == 0.0) {
    out.q.assign(p.begin(), p.end());
    return out;
  }
  out.q = project_simplex(x);
  out.kl = kl_row(p, out.q);
  if (out.kl <= budget) return out;

  std::vector<double> trial;
  auto gap = [&](double lambda) {
    solve_row(x, p, lambda, trial, opts);
    return kl_row(p, trial) - budget;
  };
  const RootResult root = decreasing_root(gap, out.kl - budget, opts);
  solve_row(x, p, root.lambda, out.q, opts);
  out.kl = kl_row(p, out.q);
  out.multiplier = root.lambda;
  out.iterations = root.iterations;
  out.residual = std::abs(out.kl - budget);
  out.converged = root.converged && out.kl <= budget + opts.tol;
  return out;
}

TransitionKernel project_product_box(const KernelArray& x, const TransitionKernel& p, const BudgetVector& b,
                                     const ProjectionOptions& opts) {
  if (!x.same_shape(p.array())) throw DimensionError("project_product_box: shape mismatch");
  if (b.b.rows() != p.n_states() || b.b.cols() != p.n_actions())
    throw DimensionError("project_product_box: budget shape mismatch");
  KernelArray out(p.n_states(), p.n_actions());
  for (int s = 0; s < p.n_states(); ++s)
    for (int a = 0; a < p.n_actions(); ++a) {
      RowProjection r = project_kl_ball(x.row(s, a), p.row(s, a), b.b(s, a), opts);
      if (!r.converged) {
        std::ostringstream msg;
        msg << "KL-ball projection of row (" << s << ", " << a << ") did not converge, residual " << r.residual;
        throw ProjectionError(msg.str(), s, a, r.residual);
      }
      std::copy(r.q.begin(), r.q.end(), out.row(s, a).begin());
    }
  return TransitionKernel(std::move(out), 1e-9);
}

GlobalProjection project_global_kl(const KernelArray& x, const TransitionKernel& p, const Allocation& w,
                                   double sigma, const ProjectionOptions& opts) {
  if (!x.same_shape(p.array()) || w.n_states() != p.n_states() || w.n_actions() != p.n_actions())
    throw DimensionError("project_global_kl: shape mismatch");
  if (!(sigma >= 0.0)) throw InvalidInput("project_global_kl: negative sigma");
  const int rows = p.array().n_rows();
  KernelArray buffer(p.n_states(), p.n_actions());
  std::vector<double> row_q;

  // Rows without weight are never constrained.
  auto fill = [&](double lambda) {
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
      const double wi = w.flat(i);
      if (wi == 0.0) {
        row_q = project_simplex(x.row(i));
      } else if (lambda == 0.0) {
        row_q = project_simplex(x.row(i));
        total += wi * kl_row(p.row(i), row_q);
      } else {
        solve_row(x.row(i), p.row(i), lambda * wi, row_q, opts);
        total += wi * kl_row(p.row(i), row_q);
      }
      std::copy(row_q.begin(), row_q.end(), buffer.row(i).begin());
    }
    return total;
  };

  GlobalProjection out;
  if (sigma == 0.0) {
    KernelArray pinned = p.array();
    for (int i = 0; i < rows; ++i)
      if (w.flat(i) == 0.0) {
        row_q = project_simplex(x.row(i));
        std::copy(row_q.begin(), row_q.end(), pinned.row(i).begin());
      }
    out.q = TransitionKernel(std::move(pinned), 1e-9);
    return out;
  }
  const double slack = fill(0.0);
  if (slack <= sigma) {
    out.q = TransitionKernel(buffer, 1e-9);
    out.weighted_kl = slack;
    return out;
  }
  const RootResult root = decreasing_root([&](double lambda) { return fill(lambda) - sigma; }, slack - sigma, opts);
  out.weighted_kl = fill(root.lambda);
  out.q = TransitionKernel(buffer, 1e-9);
  out.multiplier = root.lambda;
  out.iterations = root.iterations;
  out.converged = root.converged && out.weighted_kl <= sigma + opts.tol;
  return out;
}

double budget_grid_estimate(double sigma, const Allocation& w, double h) {
  if (!(h > 0.0)) throw InvalidInput("budget grid: h must be positive");
  if (!(sigma >= 0.0)) throw InvalidInput("budget grid: sigma must be nonnegative");
  const int n = w.n_states() * w.n_actions();
  double log_est = 0.0;
  double weight_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (w.flat(i) <= 0.0) return kInf;
    weight_sum += w.flat(i);
    log_est -= std::log(w.flat(i)) + std::log(static_cast<double>(i + 1));
  }
  log_est += n * std::log(sigma / h + weight_sum);
  return std::exp(log_est);
}

std::vector<BudgetVector> budget_grid(double sigma, const Allocation& w, double h, std::size_t cap) {
  const double estimate = budget_grid_estimate(sigma, w, h);
  const int ns = w.n_states(), na = w.n_actions(), n = ns * na;
  // Integer multipliers k_i with sum_i w_i h k_i <= sigma. A tiny slack keeps
  // points lying exactly on the face.
  const double limit = sigma + 1e-12 * std::max(1.0, sigma);
  std::vector<long> k(n, 0);
  std::vector<BudgetVector> out;
  std::size_t count = 0;
  const bool store = estimate <= static_cast<double>(cap);

  auto explode = [&]() {
    std::ostringstream msg;
    msg << "budget grid has more than " << cap << " points (estimate " << estimate << ")";
    throw GridExplosion(msg.str(), estimate);
  };
  if (!std::isfinite(estimate)) explode();

  std::function<void(int, double)> recurse = [&](int i, double used) {
    if (i == n) {
      if (++count > cap) explode();
      if (store) {
        BudgetVector b{Mat(ns, na)};
        for (int j = 0; j < n; ++j) b.b(j / na, j % na) = h * static_cast<double>(k[j]);
        out.push_back(std::move(b));
      }
      return;
    }
    const double step = w.flat(i) * h;
    for (k[i] = 0;; ++k[i]) {
      const double next = used + step * static_cast<double>(k[i]);
      if (next > limit) break;
      recurse(i + 1, next);
    }
    k[i] = 0;
  };
  recurse(0, 0.0);
  if (!store) return budget_grid(sigma, w, h, std::numeric_limits<std::size_t>::max());
  return out;
}

}  // namespace policytest
