#include "doctest.h"
#include "fmo/fem2d.hpp"
#include "fmo/model.hpp"
#include "fmo/penalty.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>

using namespace fmo;

namespace {

ProblemInstance identity2(double gamma, double nu) {
  ProblemInstance inst;
  inst.k = 2;
  inst.N = 2;
  ElementOperator el;
  el.cols = {0, 1};
  el.B.push_back(Eigen::MatrixXd::Identity(2, 2));
  inst.elements.push_back(el);
  inst.loads.push_back(Vector::Unit(2, 0));
  inst.r = 0.1;
  inst.gamma = gamma;
  inst.nu = nu;
  inst.rho_l = {0.2};
  inst.rho_u = {4.0};
  return inst;
}

// Small cantilever with a compliance cap well below the starting compliance.
ProblemInstance tight_instance(double nu) {
  fem2d::MeshSpec s;
  s.nx = 4;
  s.ny = 2;
  s.loads = {fem2d::parse_load("corner:br"), fem2d::parse_load("corner:tr@0.5,0")};
  s.nu = nu;
  auto inst = fem2d::build_instance(s);
  inst.gamma = 0.2 * fem2d::calibrated_gamma(inst, 1.0);
  return inst;
}

MaterialState shifted(const MaterialState& E, const MaterialState& D, double h) {
  MaterialState out = E;
  for (int i = 0; i < E.m(); ++i) out.blocks[std::size_t(i)].axpy(h, D.blocks[std::size_t(i)]);
  return out;
}

}  // namespace

TEST_CASE("penalty vanishes when every compliance is below gamma or nu = 0") {
  std::mt19937_64 rng(1);
  auto inst = tight_instance(3.0);
  const auto E = fmo::testing::random_material(rng, inst);
  const auto x = fmo::testing::random_dual(rng, inst);
  inst.gamma = 1e9;
  CHECK(penalty_value(inst, E, x) == saddle_value(inst, E, x));
  CHECK(penalty_grad_E(inst, E, x).blocks == subgrad_E(inst, E, x).blocks);
  inst.gamma = 1e-6;
  inst.nu = 0.0;
  CHECK(penalty_value(inst, E, x) == saddle_value(inst, E, x));
  CHECK(penalty_grad_E(inst, E, x).blocks == subgrad_E(inst, E, x).blocks);
}

TEST_CASE("one-element penalty evaluated by hand") {
  // A(E) = E = diag(0.5, 1.5), f = e1: c = 2, p = F + nu (sqrt 2 - sqrt gamma)^2
  const auto inst = identity2(0.5, 3.0);
  MaterialState E;
  BlockMatrix d = BlockMatrix::Zero(2, 2);
  d.diagonal() << 0.5, 1.5;
  E.blocks.push_back(SymBlock::from_dense(d));
  DualState x;
  x.vectors.push_back(Vector::Zero(2));
  const double expect = 2.0 + 3.0 * std::pow(std::sqrt(2.0) - std::sqrt(0.5), 2);
  CHECK(penalty_value(inst, E, x) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(oracle::penalty_value(inst, oracle::to_dense(E), oracle::to_vectors(x)) == doctest::Approx(expect).epsilon(1e-14));
  // u = (2, 0): gradient of the term in E_11 is -nu (1 - sqrt(gamma / c)) u_1^2 = -3 (1 - 0.5) 4 = -6
  const auto g = penalty_grad_E(inst, E, x);
  CHECK(g.blocks[0](0, 0) == doctest::Approx(1.0 - 6.0).epsilon(1e-14));
  CHECK(g.blocks[0](1, 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.blocks[0](0, 1) == 0.0);
}

TEST_CASE("penalty gradient matches central differences at strict violations") {
  std::mt19937_64 rng(2);
  const auto inst = tight_instance(2.0);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto E = fmo::testing::random_material(rng, inst);
    const auto x = fmo::testing::random_dual(rng, inst);
    const auto st = penalty_state(inst, E);
    bool strict = true;
    for (double c : st.compliances) strict = strict && std::abs(c - inst.gamma) > 1e-3 * inst.gamma;
    if (!strict || st.violated.empty()) continue;
    ++checked;
    CHECK(penalty_value(inst, E, x) ==
          doctest::Approx(oracle::penalty_value(inst, oracle::to_dense(E), oracle::to_vectors(x))).epsilon(1e-10));
    MaterialState D;
    for (int i = 0; i < inst.m(); ++i)
      D.blocks.push_back(SymBlock::from_dense(BlockMatrix(fmo::testing::random_symmetric(rng, 3, 1.0))));
    const auto g = penalty_grad_E(inst, E, x);
    const double fd = oracle::central_difference(
        [&](double h) { return oracle::penalty_value(inst, oracle::to_dense(shifted(E, D, h)), oracle::to_vectors(x)); });
    CHECK(oracle::relative_error(fd, g.dot(D)) <= 1e-5);
    // the x-gradient of p is g_x
    const auto dx = fmo::testing::random_dual(rng, inst);
    const double fdx = oracle::central_difference([&](double h) {
      auto xs = oracle::to_vectors(x);
      for (std::size_t j = 0; j < xs.size(); ++j) xs[j] += h * dx.vectors[j];
      return oracle::penalty_value(inst, oracle::to_dense(E), xs);
    });
    CHECK(oracle::relative_error(fdx, subgrad_x(inst, E, x).dot(dx)) <= 1e-5);
  }
  CHECK(checked >= 10);
}

TEST_CASE("penalty term is convex along segments in Q") {
  std::mt19937_64 rng(3);
  const auto inst = tight_instance(5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto E1 = fmo::testing::random_material(rng, inst);
    const auto E2 = fmo::testing::random_material(rng, inst);
    MaterialState mid = E1;
    for (int i = 0; i < inst.m(); ++i) {
      mid.blocks[std::size_t(i)] *= 0.5;
      mid.blocks[std::size_t(i)].axpy(0.5, E2.blocks[std::size_t(i)]);
    }
    const double a = penalty_state(inst, E1).term, b = penalty_state(inst, E2).term;
    CHECK(penalty_state(inst, mid).term <= 0.5 * (a + b) + 1e-9);
  }
}

TEST_CASE("penalty mode refuses large instances and singular stiffness") {
  auto inst = tight_instance(1.0);
  const auto E = uniform_material(inst, 1.0);
  CHECK_THROWS_AS(penalty_state(inst, E, 10), Error);
  const auto Z = uniform_material(inst, 0.0);
  CHECK_THROWS_AS(penalty_state(inst, Z), Error);
}

TEST_CASE("penalty step keeps iterates feasible") {
  const auto inst = tight_instance(4.0);
  MaterialState E;
  DualState x;
  starting_point(inst, E, x);
  auto acc = DualAccumulators::zeros(inst);
  StepSchedule sched{Scheme::weighted, 0.5, 0.5};
  CompliancePenalty pen;
  StepOptions opt;
  opt.extra = &pen;
  FlopCounter fc;
  for (int s = 0; s < 50; ++s) {
    da_step(inst, acc, sched, E, x, opt, &fc);
    CHECK(feasible_E(inst, E).feasible);
  }
  CHECK(fc.dense > 0);
  CHECK(pen.last().compliances.size() == 2);
}
