#include "policytest/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

namespace policytest {

namespace {

constexpr double kLatticeSlack = 1e-9;

struct Candidate {
  std::array<double, 3> q{};
  double kl = 0.0;
};

std::vector<std::array<double, 3>> lattice_rows(int ns, int denom) {
  std::vector<std::array<double, 3>> out;
  const double d = denom;
  if (ns == 1) {
    out.push_back({1.0, 0.0, 0.0});
  } else if (ns == 2) {
    for (int i = 0; i <= denom; ++i) out.push_back({i / d, (denom - i) / d, 0.0});
  } else {
    for (int i = 0; i <= denom; ++i)
      for (int j = 0; i + j <= denom; ++j) out.push_back({i / d, j / d, (denom - i - j) / d});
  }
  return out;
}

// V(rho) for a kernel given row-by-row; |S| <= 3.
double small_value(const MdpInstance& m, const std::vector<const Candidate*>& rows) {
  const int ns = m.n_states, na = m.n_actions;
  double lhs[3][4] = {};
  for (int s = 0; s < ns; ++s) {
    lhs[s][s] = 1.0;
    double r_pi = 0.0;
    for (int a = 0; a < na; ++a) {
      const double w = m.policy(s, a);
      r_pi += w * m.reward(s, a);
      const auto& q = rows[s * na + a]->q;
      for (int s2 = 0; s2 < ns; ++s2) lhs[s][s2] -= m.gamma * w * q[s2];
    }
    lhs[s][ns] = r_pi;
  }
  // Gaussian elimination with partial pivoting on the augmented system.
  for (int c = 0; c < ns; ++c) {
    int piv = c;
    for (int r = c + 1; r < ns; ++r)
      if (std::abs(lhs[r][c]) > std::abs(lhs[piv][c])) piv = r;
    for (int k = 0; k <= ns; ++k) std::swap(lhs[c][k], lhs[piv][k]);
    for (int r = c + 1; r < ns; ++r) {
      const double f = lhs[r][c] / lhs[c][c];
      for (int k = c; k <= ns; ++k) lhs[r][k] -= f * lhs[c][k];
    }
  }
  double v[3] = {};
  for (int r = ns - 1; r >= 0; --r) {
    double acc = lhs[r][ns];
    for (int k = r + 1; k < ns; ++k) acc -= lhs[r][k] * v[k];
    v[r] = acc / lhs[r][r];
  }
  double total = 0.0;
  for (int s = 0; s < ns; ++s) total += m.rho(s) * v[s];
  return total;
}

// Candidate rows per pair, each within `row_budget[i]`, sorted by KL.
std::vector<std::vector<Candidate>> candidates(const MdpInstance& m, const TransitionKernel& p, double resolution,
                                               const std::vector<double>& row_budget) {
  if (m.n_states > 3 || m.n_actions > 2) throw InvalidInput("brute force limited to |S| <= 3 and |A| <= 2");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw InvalidInput("resolution must lie in (0, 1]");
  const int denom = static_cast<int>(std::ceil(1.0 / resolution - 1e-9));
  const auto lattice = lattice_rows(m.n_states, denom);
  const int n = m.n_states * m.n_actions;
  std::vector<std::vector<Candidate>> out(n);
  for (int i = 0; i < n; ++i) {
    auto prow = p.row(i);
    Candidate own;
    std::copy(prow.begin(), prow.end(), own.q.begin());
    own.kl = 0.0;
    out[i].push_back(own);
    for (const auto& q : lattice) {
      const double kl = kl_row(prow, std::span<const double>(q.data(), m.n_states));
      if (kl <= row_budget[i] + kLatticeSlack) out[i].push_back({q, kl});
    }
    std::stable_sort(out[i].begin(), out[i].end(), [](const Candidate& a, const Candidate& b) { return a.kl < b.kl; });
  }
  return out;
}

BruteForceResult search(const MdpInstance& m, const TransitionKernel& p,
                        const std::vector<std::vector<Candidate>>& cands, const std::vector<double>& weights,
                        double sigma) {
  const int n = m.n_states * m.n_actions;
  const double v_p = value_rho(p, m);
  std::vector<const Candidate*> chosen(n, nullptr);
  BruteForceResult out;
  out.u_value = std::numeric_limits<double>::infinity();
  std::vector<const Candidate*> best;

  std::function<void(int, double)> recurse = [&](int i, double used) {
    if (i == n) {
      ++out.kernels_evaluated;
      const double u = v_p * small_value(m, chosen);
      if (u < out.u_value) {
        out.u_value = u;
        best = chosen;
      }
      return;
    }
    for (const Candidate& c : cands[i]) {
      const double next = used + weights[i] * c.kl;
      if (next > sigma + kLatticeSlack) break;
      chosen[i] = &c;
      recurse(i + 1, next);
    }
  };
  recurse(0, 0.0);

  KernelArray arr(m.n_states, m.n_actions);
  for (int i = 0; i < n; ++i) std::copy(best[i]->q.begin(), best[i]->q.begin() + m.n_states, arr.row(i).begin());
  out.argmin_kernel = TransitionKernel(std::move(arr), 1e-9);
  return out;
}

}  // namespace

BruteForceResult u_no_bruteforce(const MdpInstance& m, const TransitionKernel& p, double sigma, const Allocation& w,
                                 double resolution) {
  if (!(sigma >= 0.0)) throw InvalidInput("sigma must be nonnegative");
  const int n = m.n_states * m.n_actions;
  std::vector<double> weights(n), row_budget(n);
  for (int i = 0; i < n; ++i) {
    weights[i] = w.flat(i);
    row_budget[i] = weights[i] > 0.0 ? sigma / weights[i] : std::numeric_limits<double>::infinity();
  }
  return search(m, p, candidates(m, p, resolution, row_budget), weights, sigma);
}

BruteForceResult u_box_bruteforce(const MdpInstance& m, const TransitionKernel& p, const BudgetVector& b,
                                  double resolution) {
  const int n = m.n_states * m.n_actions;
  std::vector<double> row_budget(n);
  for (int i = 0; i < n; ++i) row_budget[i] = b.b(i / m.n_actions, i % m.n_actions);
  // Per-row constraints only: zero weights switch the global sum off.
  return search(m, p, candidates(m, p, resolution, row_budget), std::vector<double>(n, 0.0), 0.0);
}

}  // namespace policytest
