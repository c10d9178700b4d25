#pragma once

// Independent reference computations used by the tests. None of them calls
// into the linear solves of the library.

#include "policytest/allocation.hpp"
#include "policytest/mdp.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using policytest::KernelArray;
using policytest::Mat;
using policytest::MdpInstance;
using policytest::TransitionKernel;
using policytest::Vec;

inline std::vector<double> dirichlet_row(std::mt19937_64& rng, int n, double floor = 0.0) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> row(n);
  double sum = 0.0;
  for (double& x : row) sum += (x = g(rng) + floor);
  for (double& x : row) x /= sum;
  return row;
}

inline TransitionKernel random_kernel(std::mt19937_64& rng, int ns, int na, double floor = 0.0) {
  KernelArray k(ns, na);
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      auto row = dirichlet_row(rng, ns, floor);
      for (int s2 = 0; s2 < ns; ++s2) k(s, a, s2) = row[s2];
    }
  return TransitionKernel(std::move(k), 1e-9);
}

/// Random instance with full-support rho and pi, rewards uniform in [-1, 1].
inline MdpInstance random_instance(std::mt19937_64& rng, int ns, int na, double gamma = 0.9) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat r(ns, na), pi(ns, na);
  for (int s = 0; s < ns; ++s) {
    auto row = dirichlet_row(rng, na, 0.05);
    for (int a = 0; a < na; ++a) {
      r(s, a) = u(rng);
      pi(s, a) = row[a];
    }
  }
  auto rho_row = dirichlet_row(rng, ns, 0.05);
  Vec rho = Eigen::Map<Vec>(rho_row.data(), ns);
  return policytest::make_instance(random_kernel(rng, ns, na, 0.01), r, rho / rho.sum(), gamma, pi);
}

/// Value iteration V <- r_pi + gamma P_pi V for `steps` sweeps from V = 0.
inline Vec value_iteration(const TransitionKernel& q, const MdpInstance& m, int steps) {
  Vec v = Vec::Zero(m.n_states);
  for (int it = 0; it < steps; ++it) {
    Vec next = Vec::Zero(m.n_states);
    for (int s = 0; s < m.n_states; ++s)
      for (int a = 0; a < m.n_actions; ++a) {
        double cont = 0.0;
        for (int s2 = 0; s2 < m.n_states; ++s2) cont += q(s, a, s2) * v(s2);
        next(s) += m.policy(s, a) * (m.reward(s, a) + m.gamma * cont);
      }
    v = next;
  }
  return v;
}

/// (1 - gamma) sum_{t <= horizon} gamma^t P(s_t = .) started from rho.
inline Vec truncated_visitation(const TransitionKernel& q, const MdpInstance& m, int horizon) {
  Vec mu = m.rho, d = Vec::Zero(m.n_states);
  double disc = 1.0;
  for (int t = 0; t <= horizon; ++t) {
    d += (1.0 - m.gamma) * disc * mu;
    Vec next = Vec::Zero(m.n_states);
    for (int s = 0; s < m.n_states; ++s)
      for (int a = 0; a < m.n_actions; ++a)
        for (int s2 = 0; s2 < m.n_states; ++s2) next(s2) += mu(s) * m.policy(s, a) * q(s, a, s2);
    mu = next;
    disc *= m.gamma;
  }
  return d;
}

inline double vi_value_rho(const TransitionKernel& q, const MdpInstance& m, int steps) {
  return m.rho.dot(value_iteration(q, m, steps));
}

/// Central difference of V(rho) along e_i - e_j inside row (s, a); values
/// from value iteration so the oracle shares no code with the library.
inline double fd_directional(const TransitionKernel& q, const MdpInstance& m, int s, int a, int i, int j, double h,
                             int steps = 2000) {
  KernelArray plus = q.array(), minus = q.array();
  plus(s, a, i) += h;
  plus(s, a, j) -= h;
  minus(s, a, i) -= h;
  minus(s, a, j) += h;
  // Raw arrays: the perturbed rows still sum to one but may leave the simplex
  // by h, which value iteration does not care about.
  auto value = [&](const KernelArray& k) {
    Vec v = Vec::Zero(m.n_states);
    for (int it = 0; it < steps; ++it) {
      Vec next = Vec::Zero(m.n_states);
      for (int s1 = 0; s1 < m.n_states; ++s1)
        for (int a1 = 0; a1 < m.n_actions; ++a1) {
          double cont = 0.0;
          for (int s2 = 0; s2 < m.n_states; ++s2) cont += k(s1, a1, s2) * v(s2);
          next(s1) += m.policy(s1, a1) * (m.reward(s1, a1) + m.gamma * cont);
        }
      v = next;
    }
    return m.rho.dot(v);
  };
  return (value(plus) - value(minus)) / (2.0 * h);
}

inline double kl2(double p0, double q0) {
  auto term = [](double p, double q) {
    if (p == 0.0) return 0.0;
    if (q == 0.0) return std::numeric_limits<double>::infinity();
    return p * std::log(p / q);
  };
  return term(p0, q0) + term(1.0 - p0, 1.0 - q0);
}

/// Projection of x onto {q in simplex(2) : KL(p, q) <= budget} by a dense scan
/// of q0 at the given resolution.
inline std::vector<double> grid_project_row2(const std::vector<double>& x, const std::vector<double>& p,
                                             double budget, double resolution) {
  double best = std::numeric_limits<double>::infinity(), arg = p[0];
  const long n = static_cast<long>(std::llround(1.0 / resolution));
  for (long k = 0; k <= n; ++k) {
    const double q0 = static_cast<double>(k) / n;
    if (kl2(p[0], q0) > budget) continue;
    const double d = (x[0] - q0) * (x[0] - q0) + (x[1] - 1.0 + q0) * (x[1] - 1.0 + q0);
    if (d < best) {
      best = d;
      arg = q0;
    }
  }
  return {arg, 1.0 - arg};
}

/// Minimizer of a unimodal f on [a, b].
inline double golden_section(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Largest x in [lo, hi] with pred(x) true, for pred true on [lo, x*] only.
inline double bisect_last_true(const std::function<bool(double)>& pred, double lo, double hi, double tol = 1e-12) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace oracle
