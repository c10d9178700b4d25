#include "oracles.hpp"

#include "policytest/bench.hpp"
#include "policytest/instance_io.hpp"
#include "policytest/mdp.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace policytest;

namespace {

MdpInstance nonconvex() { return builtin_instance("nonconvex_example").instance; }

}  // namespace

TEST_CASE("kernel rows are validated and small drift renormalized") {
  KernelArray k(2, 1);
  k(0, 0, 0) = 0.5;
  k(0, 0, 1) = 0.5 + 5e-13;
  k(1, 0, 0) = 1.0;
  TransitionKernel t(k);
  CHECK(t(0, 0, 0) + t(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-15));

  k(0, 0, 1) = 0.6;
  CHECK_THROWS_AS(TransitionKernel{k}, InvalidInput);
  k(0, 0, 1) = 0.5;
  k(0, 0, 0) = -0.1;
  k(0, 0, 1) = 1.1;
  CHECK_THROWS_AS(TransitionKernel{k}, InvalidInput);
}

TEST_CASE("make_instance rejects bad shapes and distributions") {
  const TransitionKernel k = TransitionKernel::uniform(2, 2);
  const Mat r = Mat::Zero(2, 2), pi = Mat::Constant(2, 2, 0.5);
  CHECK_THROWS_AS(make_instance(k, Mat::Zero(3, 2), Vec::Constant(2, 0.5), 0.9, pi), DimensionError);
  CHECK_THROWS_AS(make_instance(k, r, Vec::Constant(3, 1.0 / 3), 0.9, pi), DimensionError);
  CHECK_THROWS_AS(make_instance(k, r, Vec::Constant(2, 0.6), 0.9, pi), InvalidInput);
  CHECK_THROWS_AS(make_instance(k, r, Vec::Constant(2, 0.5), 1.0, pi), InvalidInput);
  CHECK_THROWS_AS(make_instance(k, r, Vec::Constant(2, 0.5), 0.9, Mat::Constant(2, 2, 0.7)), InvalidInput);
}

TEST_CASE("values of the non-convexity example") {
  const MdpInstance m = nonconvex();
  const auto [q1, q2] = nonconvex_alternatives();
  CHECK(std::abs(value_rho(m.kernel, m) + 0.15) <= 0.01);
  CHECK(std::abs(value_rho(q1, m) - 0.87) <= 0.01);
  CHECK(std::abs(value_rho(q2, m) - 0.13) <= 0.01);
  CHECK(answer(m.kernel, m) == Sign::Minus);
  CHECK(answer(q1, m) == Sign::Plus);
  CHECK(answer(q2, m) == Sign::Plus);
}

TEST_CASE("zero discount gives the immediate policy reward") {
  MdpInstance m = builtin_instance("three_state").instance;
  m.gamma = 0.0;
  CHECK(value_rho(m.kernel, m) == doctest::Approx(m.rho.dot(m.policy_reward())).epsilon(1e-15));
}

TEST_CASE("two_state value matches value iteration") {
  const MdpInstance m = builtin_instance("two_state").instance;
  const ValueBundle vb = value_bundle(m.kernel, m);
  const Vec vi = oracle::value_iteration(m.kernel, m, 10000);
  CHECK((vb.v - vi).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(vb.v_rho - m.rho.dot(vi)) <= 1e-10);
  CHECK(vb.v_rho == doctest::Approx(0.20923).epsilon(1e-4));
}

TEST_CASE("Bellman consistency and Q/V identity on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const int ns = 1 + static_cast<int>(rng() % 6), na = 1 + static_cast<int>(rng() % 6);
    const MdpInstance m = oracle::random_instance(rng, ns, na, 0.95);
    const ValueBundle vb = value_bundle(m.kernel, m);
    Vec residual = vb.v - m.policy_reward();
    for (int s = 0; s < ns; ++s)
      for (int a = 0; a < na; ++a)
        for (int s2 = 0; s2 < ns; ++s2) residual(s) -= m.gamma * m.policy(s, a) * m.kernel(s, a, s2) * vb.v(s2);
    CHECK(residual.cwiseAbs().maxCoeff() <= 1e-10);
    const Vec from_q = m.policy.cwiseProduct(vb.q_values).rowwise().sum();
    CHECK((from_q - vb.v).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(vb.v.cwiseAbs().maxCoeff() <= m.r_max() / (1.0 - m.gamma) + 1e-12);
  }
}

TEST_CASE("a constant reward shift moves every value by c / (1 - gamma)") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    MdpInstance m = oracle::random_instance(rng, 4, 3);
    const Vec before = value_bundle(m.kernel, m).v;
    m.reward.array() += 0.37;
    const Vec after = value_bundle(m.kernel, m).v;
    CHECK(((after - before).array() - 0.37 / (1.0 - m.gamma)).abs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("visitation") {
  SUBCASE("absorbing self-loops keep rho") {
    KernelArray k(3, 2);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 2; ++a) k(s, a, s) = 1.0;
    const MdpInstance m = make_instance(TransitionKernel(k), Mat::Zero(3, 2), Vec(Eigen::Vector3d(0.2, 0.3, 0.5)),
                                        0.9, Mat::Constant(3, 2, 0.5));
    CHECK((visitation(m.kernel, m).d_state - m.rho).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("uniform everything is uniform") {
    const MdpInstance m = make_instance(TransitionKernel::uniform(3, 3), Mat::Zero(3, 3), Vec::Constant(3, 1.0 / 3),
                                        0.9, Mat::Constant(3, 3, 1.0 / 3));
    const Visitation d = visitation(m.kernel, m);
    CHECK((d.d_state.array() - 1.0 / 3).abs().maxCoeff() <= 1e-12);
    CHECK((d.d_state_action.array() - 1.0 / 9).abs().maxCoeff() <= 1e-12);
  }
  SUBCASE("three_state matches the truncated geometric sum") {
    const MdpInstance m = builtin_instance("three_state").instance;
    const Vec d = visitation(m.kernel, m).d_state;
    CHECK((d - oracle::truncated_visitation(m.kernel, m, 500)).cwiseAbs().maxCoeff() <= 1e-6);
  }
  SUBCASE("random instances: sums and the lower bound") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
      const MdpInstance m = oracle::random_instance(rng, 1 + trial % 5, 1 + trial % 4);
      const Visitation d = visitation(m.kernel, m);
      CHECK(d.d_state.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(d.d_state_action.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(((d.d_state - (1.0 - m.gamma) * m.rho).array() >= -1e-15).all());
      const Visitation ds = visitation(m.kernel, m, {0, 0});
      CHECK(ds.d_state_action.sum() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(ds.d_state_action(0, 0) >= 1.0 - m.gamma - 1e-15);
    }
  }
  SUBCASE("pair starts aggregate to the rho start") {
    const MdpInstance m = builtin_instance("two_state").instance;
    const Mat all = visitation_from_all(m.kernel, m);
    Mat mixed = Mat::Zero(2, 2);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        const Visitation ds = visitation(m.kernel, m, {s, a});
        for (int s2 = 0; s2 < 2; ++s2)
          for (int a2 = 0; a2 < 2; ++a2) CHECK(all(s * 2 + a, s2 * 2 + a2) == doctest::Approx(ds.d_state_action(s2, a2)));
        mixed += m.rho(s) * m.policy(s, a) * ds.d_state_action;
      }
    CHECK((mixed - visitation(m.kernel, m).d_state_action).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("extremal values") {
  SUBCASE("non-convexity example") {
    const MdpInstance m = nonconvex();
    const ExtremalValues e = extremal_values(m);
    const double base = m.rho.dot(m.policy_reward());
    CHECK(e.max_value == doctest::Approx(base + 1.08));
    CHECK(e.min_value == doctest::Approx(base - 0.88 * 9));
  }
  SUBCASE("constant reward") {
    MdpInstance m = builtin_instance("two_state").instance;
    m.reward.setConstant(0.3);
    const ExtremalValues e = extremal_values(m);
    CHECK(e.max_value == doctest::Approx(3.0));
    CHECK(e.min_value == doctest::Approx(3.0));
  }
  SUBCASE("random kernels stay inside") {
    const MdpInstance m = builtin_instance("two_state").instance;
    const ExtremalValues e = extremal_values(m);
    std::mt19937_64 rng(14);
    for (int i = 0; i < 200; ++i) {
      const double v = value_rho(oracle::random_kernel(rng, 2, 2), m);
      CHECK(v <= e.max_value + 1e-12);
      CHECK(v >= e.min_value - 1e-12);
    }
  }
}

TEST_CASE("answer agrees with long value iteration") {
  std::mt19937_64 rng(15);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const MdpInstance m = oracle::random_instance(rng, 1 + trial % 3, 1 + (trial / 3) % 3);
    const double vi = oracle::vi_value_rho(m.kernel, m, 100000);
    if (std::abs(vi) <= 1e-9) continue;
    CHECK(answer(m.kernel, m) == (vi > 0.0 ? Sign::Plus : Sign::Minus));
    ++checked;
  }
  CHECK(checked >= 95);
}

TEST_CASE("answer on the boundary throws") {
  MdpInstance m = builtin_instance("two_state").instance;
  const double v = value_rho(m.kernel, m);
  apply_threshold(m, v);
  CHECK(std::abs(value_rho(m.kernel, m)) <= 1e-12);
  CHECK_THROWS_AS(answer(m.kernel, m), BoundaryError);
  CHECK(to_string(Sign::Plus) == "+");
  CHECK(to_string(Sign::Minus) == "-");
}

TEST_CASE("validate_instance") {
  const BuiltinInstance b = builtin_instance("two_state");
  CHECK(validate_instance(b.instance, &b.allocation).all_pass());
  CHECK_FALSE(validate_instance(b.instance).allocation_full_support);

  MdpInstance zero_rho = b.instance;
  zero_rho.rho << 1.0, 0.0;
  const ValidationReport r1 = validate_instance(zero_rho, &b.allocation);
  CHECK_FALSE(r1.rho_positive);
  CHECK_FALSE(r1.test_valid());

  MdpInstance flat = b.instance;
  flat.reward.setZero();
  const ValidationReport r2 = validate_instance(flat, &b.allocation);
  CHECK_FALSE(r2.reward_condition);
  CHECK_FALSE(r2.value_nonconstant);

  Mat w = Mat::Constant(2, 2, 1.0 / 3);
  w(1, 1) = 0.0;
  const Allocation partial(w);
  CHECK_FALSE(validate_instance(b.instance, &partial).allocation_full_support);
}

TEST_CASE("instance files round trip") {
  const MdpInstance m = builtin_instance("three_state").instance;
  const nlohmann::json doc = instance_to_json(m);
  const MdpInstance back = instance_from_json(doc);
  CHECK(back.kernel.array().max_abs_diff(m.kernel.array()) <= 1e-15);
  CHECK((back.reward - m.reward).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.gamma == m.gamma);

  nlohmann::json shifted = doc;
  shifted["threshold"] = 0.5;
  const MdpInstance s = instance_from_json(shifted);
  CHECK(value_rho(s.kernel, s) == doctest::Approx(value_rho(m.kernel, m) - 0.5));

  const auto path = std::filesystem::temp_directory_path() / "policytest_instance.json";
  {
    std::ofstream f(path);
    f << doc.dump();
  }
  CHECK(load_instance_file(path.string()).n_states == 3);
  std::filesystem::remove(path);

  nlohmann::json bad = doc;
  bad["kernel"][0][0] = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(instance_from_json(bad), InvalidInput);
  bad = doc;
  bad.erase("gamma");
  CHECK_THROWS_AS(instance_from_json(bad), InvalidInput);
  CHECK_THROWS(load_instance_file("/nonexistent/instance.json"));
}

TEST_CASE("allocations") {
  CHECK(Allocation::uniform(2, 3).weights().sum() == doctest::Approx(1.0));
  Eigen::MatrixXi counts(2, 2);
  counts << 3, 1, 0, 4;
  const Allocation w = Allocation::from_counts(counts);
  CHECK(w(0, 0) == doctest::Approx(3.0 / 8));
  CHECK(w.support_size() == 3);
  CHECK_THROWS_AS(Allocation::from_counts(Eigen::MatrixXi::Zero(2, 2)), InvalidInput);
  CHECK_THROWS_AS(Allocation(Mat::Constant(2, 2, 0.3)), InvalidInput);
}
