#pragma once

// Exact tabular-MDP primitives: kernels, instances, values, visitation
// distributions and the sign of the policy value.

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace policytest {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Thrown by answer() when |V(rho)| is within the boundary tolerance.
class BoundaryError : public Error {
 public:
  BoundaryError(const std::string& what, double value) : Error(what), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

/// Dense real array indexed (s, a, s'). Used both for kernels and for
/// quantities of the same shape (gradients, unprojected iterates).
class KernelArray {
 public:
  KernelArray() = default;
  KernelArray(int n_states, int n_actions, double fill = 0.0);

  int n_states() const { return ns_; }
  int n_actions() const { return na_; }
  int n_rows() const { return ns_ * na_; }
  std::size_t size() const { return data_.size(); }

  double operator()(int s, int a, int s2) const { return data_[index(s, a, s2)]; }
  double& operator()(int s, int a, int s2) { return data_[index(s, a, s2)]; }

  std::span<const double> row(int s, int a) const {
    return {data_.data() + index(s, a, 0), static_cast<std::size_t>(ns_)};
  }
  std::span<double> row(int s, int a) { return {data_.data() + index(s, a, 0), static_cast<std::size_t>(ns_)}; }
  std::span<const double> row(int flat) const {
    return {data_.data() + static_cast<std::size_t>(flat) * ns_, static_cast<std::size_t>(ns_)};
  }
  std::span<double> row(int flat) {
    return {data_.data() + static_cast<std::size_t>(flat) * ns_, static_cast<std::size_t>(ns_)};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool same_shape(const KernelArray& other) const { return ns_ == other.ns_ && na_ == other.na_; }

  KernelArray& operator+=(const KernelArray& other);
  KernelArray& operator-=(const KernelArray& other);
  KernelArray& operator*=(double c);
  friend KernelArray operator+(KernelArray a, const KernelArray& b) { return a += b; }
  friend KernelArray operator-(KernelArray a, const KernelArray& b) { return a -= b; }
  friend KernelArray operator*(double c, KernelArray a) { return a *= c; }

  double dot(const KernelArray& other) const;
  double norm() const;
  double max_abs_diff(const KernelArray& other) const;

 private:
  std::size_t index(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * na_ + a) * ns_ + s2;
  }

  int ns_ = 0;
  int na_ = 0;
  std::vector<double> data_;
};

inline bool operator==(const KernelArray& a, const KernelArray& b) {
  return a.same_shape(b) && std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

/// A row-stochastic map (s, a) -> Delta(S). Doubles as the decision variable
/// of the lower-bound problem and as the policy of the reversed MDP.
class TransitionKernel {
 public:
  static constexpr double kRowTolerance = 1e-12;

  TransitionKernel() = default;

  /// Validates every row. Rows whose sum drifts from 1 by at most
  /// `tol` are renormalized; larger drift or a negative entry throws.
  explicit TransitionKernel(KernelArray probs, double tol = kRowTolerance);

  static TransitionKernel uniform(int n_states, int n_actions);
  static TransitionKernel from_nested(const std::vector<std::vector<std::vector<double>>>& rows,
                                      double tol = kRowTolerance);

  int n_states() const { return probs_.n_states(); }
  int n_actions() const { return probs_.n_actions(); }

  double operator()(int s, int a, int s2) const { return probs_(s, a, s2); }
  std::span<const double> row(int s, int a) const { return probs_.row(s, a); }
  std::span<const double> row(int flat) const { return probs_.row(flat); }

  const KernelArray& array() const { return probs_; }

  friend bool operator==(const TransitionKernel&, const TransitionKernel&) = default;

 private:
  KernelArray probs_;
};

/// The tuple (S, A, p, r, rho, gamma) together with the target policy.
struct MdpInstance {
  int n_states = 0;
  int n_actions = 0;
  TransitionKernel kernel;
  Mat reward;  // (s, a)
  Vec rho;
  double gamma = 0.0;
  Mat policy;  // pi(a | s), (s, a)
  /// Threshold R the value was tested against; already folded into `reward`.
  double threshold = 0.0;

  double r_max() const { return reward.cwiseAbs().maxCoeff(); }
  /// r^pi(s) = sum_a pi(a|s) r(s, a)
  Vec policy_reward() const { return policy.cwiseProduct(reward).rowwise().sum(); }
};

/// Checks shapes, kernel rows, rho and policy rows. Rows of rho and pi
/// drifting by at most 1e-12 are renormalized. Throws InvalidInput or
/// DimensionError.
MdpInstance make_instance(TransitionKernel kernel, Mat reward, Vec rho, double gamma, Mat policy,
                          double threshold = 0.0);

/// Replaces r by r - (1 - gamma) R so that testing V > R becomes V > 0.
void apply_threshold(MdpInstance& instance, double threshold);

struct ValueBundle {
  Vec v;         // V(s)
  Mat q_values;  // Q(s, a)
  double v_rho = 0.0;
};

struct StateActionStart {
  int s = 0;
  int a = 0;
};

struct Visitation {
  Vec d_state;         // sums to 1
  Mat d_state_action;  // (s, a), sums to 1
};

ValueBundle value_bundle(const TransitionKernel& kernel, const MdpInstance& instance);

/// V(rho) only; the hot path of the solvers.
double value_rho(const TransitionKernel& kernel, const MdpInstance& instance);

/// Discounted visitation started from rho.
Visitation visitation(const TransitionKernel& kernel, const MdpInstance& instance);
/// Discounted visitation started from a fixed pair (s(0), a(0)) = (s, a).
Visitation visitation(const TransitionKernel& kernel, const MdpInstance& instance, StateActionStart start);
/// d_{s,a}(s', a') for every start pair; row index s*|A|+a, column s'*|A|+a'.
Mat visitation_from_all(const TransitionKernel& kernel, const MdpInstance& instance);

struct ExtremalValues {
  double max_value = 0.0;
  double min_value = 0.0;
};

/// Largest and smallest V(rho) over all kernels (all mass sent to the
/// best or worst state under r^pi).
ExtremalValues extremal_values(const MdpInstance& instance);

enum class Sign { Plus, Minus };

inline constexpr double kDefaultBoundaryTol = 1e-9;

Sign answer(const TransitionKernel& kernel, const MdpInstance& instance, double tol = kDefaultBoundaryTol);
std::string to_string(Sign sign);

class Allocation;

struct ValidationReport {
  bool rho_positive = false;
  bool reward_condition = false;  // strict inequalities on r^pi(rho)
  bool policy_full_support = false;
  bool allocation_full_support = false;  // false when no allocation given
  bool value_nonconstant = false;        // checked on the instance kernel
  bool value_nonzero = false;
  std::vector<std::string> messages;

  bool test_valid() const { return rho_positive && reward_condition && value_nonzero; }
  bool all_pass() const {
    return test_valid() && policy_full_support && allocation_full_support && value_nonconstant;
  }
};

ValidationReport validate_instance(const MdpInstance& instance, const Allocation* allocation = nullptr);

}  // namespace policytest
