#include "policytest/mdp.hpp"

#include "policytest/allocation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace policytest {

KernelArray::KernelArray(int n_states, int n_actions, double fill)
    : ns_(n_states), na_(n_actions) {
  if (n_states <= 0 || n_actions <= 0) throw DimensionError("kernel dimensions must be positive");
  data_.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, fill);
}

KernelArray& KernelArray::operator+=(const KernelArray& other) {
  if (!same_shape(other)) throw DimensionError("kernel array shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

KernelArray& KernelArray::operator-=(const KernelArray& other) {
  if (!same_shape(other)) throw DimensionError("kernel array shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

KernelArray& KernelArray::operator*=(double c) {
  for (double& x : data_) x *= c;
  return *this;
}

double KernelArray::dot(const KernelArray& other) const {
  if (!same_shape(other)) throw DimensionError("kernel array shape mismatch");
  return std::inner_product(data_.begin(), data_.end(), other.data_.begin(), 0.0);
}

double KernelArray::norm() const { return std::sqrt(dot(*this)); }

double KernelArray::max_abs_diff(const KernelArray& other) const {
  if (!same_shape(other)) throw DimensionError("kernel array shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < data_.size(); ++i) m = std::max(m, std::abs(data_[i] - other.data_[i]));
  return m;
}

TransitionKernel::TransitionKernel(KernelArray probs, double tol) : probs_(std::move(probs)) {
  for (int i = 0; i < probs_.n_rows(); ++i) {
    auto row = probs_.row(i);
    double sum = 0.0;
    for (double x : row) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        std::ostringstream msg;
        msg << "kernel row " << i << " has a negative or non-finite entry";
        throw InvalidInput(msg.str());
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << "kernel row " << i << " sums to " << sum;
      throw InvalidInput(msg.str());
    }
    if (sum != 1.0)
      for (double& x : row) x /= sum;
  }
}

TransitionKernel TransitionKernel::uniform(int n_states, int n_actions) {
  return TransitionKernel(KernelArray(n_states, n_actions, 1.0 / n_states), 1e-9);
}

TransitionKernel TransitionKernel::from_nested(const std::vector<std::vector<std::vector<double>>>& rows,
                                               double tol) {
  const int ns = static_cast<int>(rows.size());
  if (ns == 0 || rows[0].empty()) throw DimensionError("empty kernel");
  const int na = static_cast<int>(rows[0].size());
  KernelArray arr(ns, na);
  for (int s = 0; s < ns; ++s) {
    if (static_cast<int>(rows[s].size()) != na) throw DimensionError("ragged kernel (actions)");
    for (int a = 0; a < na; ++a) {
      if (static_cast<int>(rows[s][a].size()) != ns) throw DimensionError("ragged kernel (next states)");
      for (int s2 = 0; s2 < ns; ++s2) arr(s, a, s2) = rows[s][a][s2];
    }
  }
  return TransitionKernel(std::move(arr), tol);
}

namespace {

void check_distribution(Eigen::Ref<Vec> v, const char* what) {
  if ((v.array() < 0.0).any() || !v.allFinite()) throw InvalidInput(std::string(what) + " has a negative entry");
  const double sum = v.sum();
  if (std::abs(sum - 1.0) > TransitionKernel::kRowTolerance)
    throw InvalidInput(std::string(what) + " does not sum to one");
  v /= sum;
}

void check_shapes(const TransitionKernel& kernel, const MdpInstance& instance) {
  if (kernel.n_states() != instance.n_states || kernel.n_actions() != instance.n_actions)
    throw DimensionError("kernel shape does not match the instance");
}

Mat policy_transition(const TransitionKernel& kernel, const MdpInstance& m) {
  Mat p_pi = Mat::Zero(m.n_states, m.n_states);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      const double w = m.policy(s, a);
      if (w == 0.0) continue;
      auto row = kernel.row(s, a);
      for (int s2 = 0; s2 < m.n_states; ++s2) p_pi(s, s2) += w * row[s2];
    }
  return p_pi;
}

Vec solve_checked(const Mat& lhs, const Vec& rhs) {
  Vec x = lhs.partialPivLu().solve(rhs);
  if (!x.allFinite()) throw Error("singular Bellman system");
  return x;
}

// (I - gamma P_pi^T) d = (1 - gamma) start
Vec state_visitation(const Mat& p_pi, const Vec& start, double gamma) {
  const auto n = p_pi.rows();
  Mat lhs = Mat::Identity(n, n) - gamma * p_pi.transpose();
  return solve_checked(lhs, (1.0 - gamma) * start);
}

}  // namespace

MdpInstance make_instance(TransitionKernel kernel, Mat reward, Vec rho, double gamma, Mat policy,
                          double threshold) {
  MdpInstance m;
  m.n_states = kernel.n_states();
  m.n_actions = kernel.n_actions();
  if (reward.rows() != m.n_states || reward.cols() != m.n_actions)
    throw DimensionError("reward must be |S| x |A|");
  if (policy.rows() != m.n_states || policy.cols() != m.n_actions)
    throw DimensionError("policy must be |S| x |A|");
  if (rho.size() != m.n_states) throw DimensionError("rho must have |S| entries");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidInput("gamma must lie in [0, 1)");
  if (!reward.allFinite()) throw InvalidInput("reward has non-finite entries");
  check_distribution(rho, "rho");
  for (int s = 0; s < m.n_states; ++s) {
    Vec row = policy.row(s).transpose();
    check_distribution(row, "policy row");
    policy.row(s) = row.transpose();
  }
  m.kernel = std::move(kernel);
  m.reward = std::move(reward);
  m.rho = std::move(rho);
  m.gamma = gamma;
  m.policy = std::move(policy);
  if (threshold != 0.0) apply_threshold(m, threshold);
  return m;
}

void apply_threshold(MdpInstance& instance, double threshold) {
  instance.reward.array() -= (1.0 - instance.gamma) * threshold;
  instance.threshold += threshold;
}

ValueBundle value_bundle(const TransitionKernel& kernel, const MdpInstance& m) {
  check_shapes(kernel, m);
  const Mat p_pi = policy_transition(kernel, m);
  const Vec r_pi = m.policy_reward();
  ValueBundle out;
  out.v = solve_checked(Mat::Identity(m.n_states, m.n_states) - m.gamma * p_pi, r_pi);
  out.q_values.resize(m.n_states, m.n_actions);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      auto row = kernel.row(s, a);
      double next = 0.0;
      for (int s2 = 0; s2 < m.n_states; ++s2) next += row[s2] * out.v(s2);
      out.q_values(s, a) = m.reward(s, a) + m.gamma * next;
    }
  out.v_rho = m.rho.dot(out.v);
  return out;
}

double value_rho(const TransitionKernel& kernel, const MdpInstance& m) {
  check_shapes(kernel, m);
  const Mat p_pi = policy_transition(kernel, m);
  const Vec v = solve_checked(Mat::Identity(m.n_states, m.n_states) - m.gamma * p_pi, m.policy_reward());
  return m.rho.dot(v);
}

Visitation visitation(const TransitionKernel& kernel, const MdpInstance& m) {
  check_shapes(kernel, m);
  Visitation out;
  out.d_state = state_visitation(policy_transition(kernel, m), m.rho, m.gamma);
  out.d_state_action = m.policy.array().colwise() * out.d_state.array();
  return out;
}

Visitation visitation(const TransitionKernel& kernel, const MdpInstance& m, StateActionStart start) {
  check_shapes(kernel, m);
  if (start.s < 0 || start.s >= m.n_states || start.a < 0 || start.a >= m.n_actions)
    throw DimensionError("start pair out of range");
  // The first step is forced; afterwards the chain follows pi from the
  // next-state distribution q(. | s, a).
  Vec next(m.n_states);
  auto row = kernel.row(start.s, start.a);
  for (int s2 = 0; s2 < m.n_states; ++s2) next(s2) = row[s2];
  const Vec later = state_visitation(policy_transition(kernel, m), next, m.gamma);
  Visitation out;
  out.d_state_action = m.gamma * (m.policy.array().colwise() * later.array()).matrix();
  out.d_state_action(start.s, start.a) += 1.0 - m.gamma;
  out.d_state = out.d_state_action.rowwise().sum();
  return out;
}

Mat visitation_from_all(const TransitionKernel& kernel, const MdpInstance& m) {
  check_shapes(kernel, m);
  const int n = m.n_states * m.n_actions;
  Mat out(n, n);
  for (int s = 0; s < m.n_states; ++s)
    for (int a = 0; a < m.n_actions; ++a) {
      const Visitation d = visitation(kernel, m, {s, a});
      for (int s2 = 0; s2 < m.n_states; ++s2)
        for (int a2 = 0; a2 < m.n_actions; ++a2) out(s * m.n_actions + a, s2 * m.n_actions + a2) = d.d_state_action(s2, a2);
    }
  return out;
}

ExtremalValues extremal_values(const MdpInstance& m) {
  const Vec r_pi = m.policy_reward();
  const double base = m.rho.dot(r_pi);
  const double scale = m.gamma / (1.0 - m.gamma);
  return {base + scale * r_pi.maxCoeff(), base + scale * r_pi.minCoeff()};
}

Sign answer(const TransitionKernel& kernel, const MdpInstance& instance, double tol) {
  const double v = value_rho(kernel, instance);
  if (std::abs(v) <= tol) {
    std::ostringstream msg;
    msg << "policy value " << v << " is within " << tol << " of the threshold";
    throw BoundaryError(msg.str(), v);
  }
  return v > 0.0 ? Sign::Plus : Sign::Minus;
}

std::string to_string(Sign sign) { return sign == Sign::Plus ? "+" : "-"; }

ValidationReport validate_instance(const MdpInstance& m, const Allocation* allocation) {
  ValidationReport rep;
  rep.rho_positive = (m.rho.array() > 0.0).all();
  if (!rep.rho_positive) rep.messages.emplace_back("rho has a zero entry");

  const Vec r_pi = m.policy_reward();
  const double base = m.rho.dot(r_pi);
  const double scale = -m.gamma / (1.0 - m.gamma);
  rep.reward_condition = scale * r_pi.minCoeff() > base && base > scale * r_pi.maxCoeff();
  if (!rep.reward_condition)
    rep.messages.emplace_back("r^pi(rho) is not strictly between -g/(1-g) max r^pi and -g/(1-g) min r^pi");

  rep.policy_full_support = (m.policy.array() > 0.0).all();
  if (!rep.policy_full_support) rep.messages.emplace_back("policy has a zero entry");

  if (allocation) {
    if (allocation->n_states() != m.n_states || allocation->n_actions() != m.n_actions)
      throw DimensionError("allocation shape does not match the instance");
    rep.allocation_full_support = allocation->full_support();
    if (!rep.allocation_full_support) rep.messages.emplace_back("allocation has a zero entry");
  } else {
    rep.messages.emplace_back("no allocation supplied");
  }

  const ValueBundle vb = value_bundle(m.kernel, m);
  rep.value_nonconstant = vb.v.maxCoeff() - vb.v.minCoeff() > 0.0;
  if (!rep.value_nonconstant) rep.messages.emplace_back("state values are constant on the instance kernel");
  rep.value_nonzero = std::abs(vb.v_rho) > kDefaultBoundaryTol;
  if (!rep.value_nonzero) rep.messages.emplace_back("V(rho) is zero within tolerance");
  return rep;
}

Allocation::Allocation(Mat w) : w_(std::move(w)) {
  if (w_.size() == 0) throw DimensionError("empty allocation");
  if ((w_.array() < 0.0).any() || !w_.allFinite()) throw InvalidInput("allocation has a negative entry");
  const double sum = w_.sum();
  if (std::abs(sum - 1.0) > TransitionKernel::kRowTolerance) throw InvalidInput("allocation does not sum to one");
  w_ /= sum;
}

Allocation Allocation::uniform(int n_states, int n_actions) {
  return Allocation(Mat::Constant(n_states, n_actions, 1.0 / (n_states * n_actions)));
}

Allocation Allocation::from_counts(const Eigen::MatrixXi& counts) {
  const long total = counts.cast<long>().sum();
  if (total <= 0) throw InvalidInput("no samples yet");
  return Allocation(counts.cast<double>() / static_cast<double>(total));
}

}  // namespace policytest
