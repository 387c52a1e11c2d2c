#include "doctest.h"
#include "fmo/fem2d.hpp"
#include "fmo/instance_io.hpp"
#include "fmo/model.hpp"
#include "oracle.hpp"
#include "test_support.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace fmo;
using namespace fmo::fem2d;

namespace {

MeshSpec mesh(int nx, int ny) {
  MeshSpec s;
  s.nx = nx;
  s.ny = ny;
  s.lx = double(nx);
  s.ly = double(ny);
  return s;
}

std::vector<Eigen::MatrixXd> identity_blocks(const ProblemInstance& inst, double scale = 1.0) {
  return std::vector<Eigen::MatrixXd>(std::size_t(inst.m()), scale * Eigen::MatrixXd::Identity(inst.k, inst.k));
}

}  // namespace

TEST_CASE("unit square with the left edge fixed") {
  const auto inst = build_instance(mesh(1, 1));
  CHECK(inst.N == 4);
  CHECK(inst.m() == 1);
  CHECK(inst.k == 3);
  REQUIRE(inst.nig() == 4);
  CHECK(inst.elements[0].cols == std::vector<int>{0, 1, 2, 3});

  // Free nodes are (1,0) and (1,1). Bilinear gradients on [0,1]^2 at the
  // Gauss point (gx, gy) in reference coordinates:
  //   node (1,0): d/dx = (1-gy)/2, d/dy = -(1+gx)/2
  //   node (1,1): d/dx = (1+gy)/2, d/dy =  (1+gx)/2
  const double g = 1.0 / std::sqrt(3.0);
  const double gx[4] = {-g, g, g, -g}, gy[4] = {-g, -g, g, g};
  for (int l = 0; l < 4; ++l) {
    const double ax = 0.5 * (1 - gy[l]), ay = -0.5 * (1 + gx[l]);
    const double bx = 0.5 * (1 + gy[l]), by = 0.5 * (1 + gx[l]);
    Eigen::MatrixXd expect(3, 4);
    expect << ax, 0, bx, 0,
              0, ay, 0, by,
              0.5 * ay, 0.5 * ax, 0.5 * by, 0.5 * bx;
    CHECK((inst.elements[0].B[std::size_t(l)] - expect).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("shape gradients annihilate constants and infinitesimal rotations") {
  const auto grads = shape_gradients(0.5, 2.0);
  const double hx = 0.5, hy = 2.0;
  const double px[4] = {0, hx, hx, 0}, py[4] = {0, 0, hy, hy};
  for (const auto& gp : grads) {
    double sx = 0, sy = 0, rot = 0, xx = 0, yy = 0;
    for (int a = 0; a < 4; ++a) {
      sx += gp[std::size_t(a)][0];
      sy += gp[std::size_t(a)][1];
      // u = (-y, x): shear strain du_x/dy + du_y/dx
      rot += -py[a] * gp[std::size_t(a)][1] + px[a] * gp[std::size_t(a)][0];
      xx += px[a] * gp[std::size_t(a)][0];
      yy += py[a] * gp[std::size_t(a)][1];
    }
    CHECK(std::abs(sx) <= 1e-15);
    CHECK(std::abs(sy) <= 1e-15);
    CHECK(std::abs(rot) <= 1e-14);
    // linear fields are reproduced exactly
    CHECK(xx == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(yy == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("rigid translations of an unconstrained element produce no strain") {
  const auto inst = build_instance(mesh(2, 1));
  CHECK(inst.N == 8);
  // element 1 has no node on the fixed edge
  const auto& el = inst.elements[1];
  REQUIRE(el.support() == 8);
  for (int comp = 0; comp < 2; ++comp) {
    Vector u = Vector::Zero(inst.N);
    for (int c = 0; c < el.support(); ++c)
      if (el.cols[std::size_t(c)] % 2 == comp) u[el.cols[std::size_t(c)]] = 1.0;
    for (int l = 0; l < 4; ++l) CHECK((oracle::dense_B(inst, 1, l) * u).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("element Gram matrices are symmetric positive semidefinite") {
  const auto inst = build_instance(mesh(3, 2));
  for (int i = 0; i < inst.m(); ++i) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(inst.elements[std::size_t(i)].support(), inst.elements[std::size_t(i)].support());
    for (const auto& B : inst.elements[std::size_t(i)].B) G += B.transpose() * B;
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(G).eigenvalues().minCoeff() >= -1e-14);
  }
}

TEST_CASE("fixing an edge makes the stiffness positive definite") {
  for (auto edge : {Edge::left, Edge::right, Edge::bottom, Edge::top}) {
    auto spec = mesh(3, 2);
    spec.fixed = edge;
    spec.loads = {parse_load(edge == Edge::left ? "corner:br" : (edge == Edge::right ? "corner:bl" : (edge == Edge::bottom ? "corner:tr" : "corner:br")))};
    const auto inst = build_instance(spec);
    const auto A = oracle::dense_A(inst, identity_blocks(inst));
    CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff() > 1e-6);
  }
}

TEST_CASE("dense assembly agrees with the matrix-free operator") {
  std::mt19937_64 rng(4);
  const auto inst = build_instance(mesh(4, 3));
  const auto E = fmo::testing::random_material(rng, inst);
  const auto A = oracle::dense_A(inst, oracle::to_dense(E));
  for (int c = 0; c < inst.N; ++c) {
    const Vector col = apply_A(inst, E, Vector::Unit(inst.N, c));
    CHECK((col - A.col(c)).cwiseAbs().maxCoeff() <= 1e-12 * A.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("mesh numbering and sizes") {
  const auto spec = mesh(4, 3);
  const auto inst = build_instance(spec);
  CHECK(inst.m() == 12);
  CHECK(inst.N == 2 * 4 * 4);
  CHECK(element_nodes(spec, 1, 2) == std::array<int, 4>{11, 12, 17, 16});
  const auto idx = free_numbering(spec);
  CHECK(idx[0] == -1);
  CHECK(idx[1] == 0);
  CHECK(idx[5] == -1);
  CHECK(idx[6] == 4);
}

TEST_CASE("load selectors") {
  auto spec = mesh(4, 2);
  SUBCASE("corner") {
    spec.loads = {parse_load("corner:br")};
    const auto f = assemble_loads(spec).front();
    const int node = free_numbering(spec)[std::size_t(spec.node_id(4, 0))];
    CHECK(f[2 * node + 1] == -1.0);
    CHECK(f.sum() == -1.0);
  }
  SUBCASE("midedge with an odd node count picks one node") {
    spec.loads = {parse_load("midedge:right@2,0")};
    const auto f = assemble_loads(spec).front();
    const int node = free_numbering(spec)[std::size_t(spec.node_id(4, 1))];
    CHECK(f[2 * node] == 2.0);
    CHECK(f.norm() == 2.0);
  }
  SUBCASE("edge drops fixed nodes and spreads the resultant") {
    spec.loads = {parse_load("edge:top")};
    const auto f = assemble_loads(spec).front();
    CHECK((f.array() != 0.0).count() == 4);
    CHECK(f.sum() == doctest::Approx(-1.0).epsilon(1e-15));
  }
  SUBCASE("node on the fixed edge is rejected") {
    spec.loads = {parse_load("node:0,1")};
    CHECK_THROWS_AS(assemble_loads(spec), Error);
  }
  SUBCASE("malformed selectors") {
    spec.loads = {parse_load("corner:xx")};
    CHECK_THROWS_AS(assemble_loads(spec), Error);
    spec.loads = {parse_load("edge:middle")};
    CHECK_THROWS_AS(assemble_loads(spec), Error);
    spec.loads = {parse_load("node:9,0")};
    CHECK_THROWS_AS(assemble_loads(spec), Error);
    CHECK_THROWS_AS(parse_load("corner:br@1"), Error);
  }
}

TEST_CASE("invalid mesh specs are rejected") {
  auto spec = mesh(0, 1);
  CHECK_THROWS_AS(build_instance(spec), Error);
  spec = mesh(1, 1);
  spec.lx = 0.0;
  CHECK_THROWS_AS(build_instance(spec), Error);
  spec = mesh(1, 1);
  spec.loads.clear();
  CHECK_THROWS_AS(build_instance(spec), Error);
}

TEST_CASE("reference compliance matches a dense LU solve and scales inversely") {
  std::mt19937_64 rng(17);
  auto spec = mesh(1, 1);
  spec.loads = {parse_load("corner:tr"), parse_load("corner:br@1,0")};
  const auto inst = build_instance(spec);
  const auto E = uniform_material(inst, 1.0);
  const auto c = reference_compliance(inst, E);
  const auto o = oracle::compliance(inst, identity_blocks(inst));
  REQUIRE(c.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) CHECK(c[j] == doctest::Approx(o[j]).epsilon(1e-12));

  const auto big = build_instance(mesh(5, 3));
  const auto Er = fmo::testing::random_material(rng, big);
  auto Es = Er;
  for (auto& b : Es.blocks) b *= 2.5;
  const double c1 = reference_compliance(big, Er)[0], c2 = reference_compliance(big, Es)[0];
  CHECK(c2 == doctest::Approx(c1 / 2.5).epsilon(1e-12));
  CHECK(c1 == doctest::Approx(oracle::compliance(big, oracle::to_dense(Er))[0]).epsilon(1e-10));
}

TEST_CASE("reference compliance edge cases") {
  auto inst = build_instance(mesh(2, 2));
  const auto E = uniform_material(inst, 1.0);
  inst.loads[0].setZero();
  CHECK(reference_compliance(inst, E)[0] == 0.0);
  CHECK_THROWS_AS(reference_compliance(inst, E, 4), Error);
  const auto zero = uniform_material(inst, 0.0);
  try {
    reference_compliance(inst, zero);
    FAIL("singular stiffness accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
    CHECK(std::string(e.what()).find("stiffness singular") != std::string::npos);
  }
}

TEST_CASE("calibrated gamma scales the starting compliance") {
  const auto inst = build_instance(mesh(3, 2));
  const double g = calibrated_gamma(inst, 0.5);
  const auto c = reference_compliance(inst, uniform_material(inst, inst.rho_u[0] / 3.0));
  CHECK(g == doctest::Approx(0.5 * c[0]).epsilon(1e-14));
}

TEST_CASE("instance files round-trip bit-exactly") {
  auto spec = mesh(3, 2);
  spec.lx = 1.7;
  spec.ly = 0.3;
  spec.r = 0.0123;
  spec.gamma = 1.0 / 3.0;
  spec.nu = 2.5;
  spec.loads = {parse_load("edge:right"), parse_load("node:2,2@0.1,-0.7")};
  const auto inst = build_instance(spec);
  std::stringstream ss;
  io::write_instance(ss, inst);
  const std::string text = ss.str();
  const auto back = io::read_instance(ss);
  CHECK(back.N == inst.N);
  CHECK(back.k == inst.k);
  CHECK(back.r == inst.r);
  CHECK(back.gamma == inst.gamma);
  CHECK(back.eta == inst.eta);
  CHECK(back.nu == inst.nu);
  CHECK(back.rho_l == inst.rho_l);
  CHECK(back.rho_u == inst.rho_u);
  REQUIRE(back.m() == inst.m());
  for (int i = 0; i < inst.m(); ++i) {
    CHECK(back.elements[std::size_t(i)].cols == inst.elements[std::size_t(i)].cols);
    for (int l = 0; l < inst.nig(); ++l)
      CHECK(back.elements[std::size_t(i)].B[std::size_t(l)] == inst.elements[std::size_t(i)].B[std::size_t(l)]);
  }
  for (int j = 0; j < inst.L(); ++j) CHECK(back.loads[std::size_t(j)] == inst.loads[std::size_t(j)]);
  std::stringstream again;
  io::write_instance(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("random instances with awkward doubles round-trip") {
  std::mt19937_64 rng(99);
  auto inst = fmo::testing::random_instance(rng, 7, 9, 2, 3, 2, 4);
  inst.elements[0].B[0](0, 0) = 5e-324;
  inst.elements[0].B[0](1, 1) = -1.7976931348623157e308;
  inst.loads[1][3] = 0.1 + 0.2;
  std::stringstream ss;
  io::write_instance(ss, inst);
  const auto back = io::read_instance(ss);
  CHECK(back.elements[0].B[0] == inst.elements[0].B[0]);
  CHECK(back.loads[1] == inst.loads[1]);
}

TEST_CASE("malformed instance files name the line") {
  const auto inst = build_instance(mesh(1, 1));
  std::stringstream ss;
  io::write_instance(ss, inst);
  std::string text = ss.str();
  auto expect_error = [](const std::string& t, const std::string& needle) {
    std::istringstream is(t);
    try {
      io::read_instance(is);
      FAIL("accepted malformed input");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::invalid_input);
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error("fmo-inst/2\n", "header");
  std::string t = text;
  t.replace(t.find("gamma 1"), 7, "gamma x");
  expect_error(t, "line 8");
  expect_error(text.substr(0, text.size() / 2), "end of file");
  t = text;
  t.replace(t.find("support 4 0 1"), 13, "support 4 1 0");
  expect_error(t, "increasing");
  CHECK_THROWS_AS(io::load_instance("/nonexistent/dir/x.fmo"), Error);
}

TEST_CASE("state files round-trip") {
  std::mt19937_64 rng(7);
  const auto inst = fmo::testing::random_instance(rng, 6, 10, 3, 2);
  const auto E = fmo::testing::random_material(rng, inst);
  const auto x = fmo::testing::random_dual(rng, inst);
  std::stringstream ss;
  io::write_state(ss, E, x);
  MaterialState E2;
  DualState x2;
  io::read_state(ss, E2, x2);
  CHECK(E2.blocks == E.blocks);
  REQUIRE(x2.L() == x.L());
  for (int j = 0; j < x.L(); ++j) CHECK(x2.vectors[std::size_t(j)] == x.vectors[std::size_t(j)]);
}
