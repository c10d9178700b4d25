#pragma once

#include "policytest/mdp.hpp"

namespace fixture {

/// 2x2 instance with a short horizon and small rewards, so the closed-form
/// grid resolution and iteration count of the faithful solver stay small.
inline policytest::MdpInstance faithful_small() {
  using namespace policytest;
  KernelArray k(2, 2);
  const double rows[4][2] = {{0.7, 0.3}, {0.4, 0.6}, {0.8, 0.2}, {0.1, 0.9}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) k(i / 2, i % 2, j) = rows[i][j];
  Mat r(2, 2);
  r << -0.05, -0.15, 0.12, 0.22;
  return make_instance(TransitionKernel(std::move(k)), r, Vec::Constant(2, 0.5), 0.3, Mat::Constant(2, 2, 0.5));
}

/// Two states, one action: q is described by the two numbers q(0|0), q(0|1).
inline policytest::MdpInstance single_action_toy() {
  using namespace policytest;
  KernelArray k(2, 1);
  k(0, 0, 0) = 0.6;
  k(0, 0, 1) = 0.4;
  k(1, 0, 0) = 0.5;
  k(1, 0, 1) = 0.5;
  Mat r(2, 1);
  r << 0.3, -0.2;
  return make_instance(TransitionKernel(std::move(k)), r, Vec::Constant(2, 0.5), 0.5, Mat::Ones(2, 1));
}

inline policytest::TransitionKernel toy_kernel(double a, double b) {
  using namespace policytest;
  KernelArray k(2, 1);
  k(0, 0, 0) = a;
  k(0, 0, 1) = 1.0 - a;
  k(1, 0, 0) = b;
  k(1, 0, 1) = 1.0 - b;
  return TransitionKernel(std::move(k), 1e-9);
}

}  // namespace fixture
