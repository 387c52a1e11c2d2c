#pragma once

// Brute-force references for tests. Nothing here calls into the fmo library;
// only its plain data containers are read.

#include "fmo/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct QpResult {
  Vec z;
  double objective = 0.0;
  bool feasible = false;
  int candidates = 0;
};

/// min ||diag(a) z - b||^2 s.t. c_l <= <w,z> <= c_u, z >= r by enumerating every
/// active set (which variables sit on their bound, and which side of the
/// inner-product constraint binds). n <= 8.
QpResult qp_reference(const Vec& a, const Vec& b, const Vec& w, const Vec& r, std::optional<double> c_l,
                      std::optional<double> c_u);

struct SpectralReference {
  Mat Z;
  Vec lambda;  // ascending
  Vec omega;
  bool order_preserved = false;
};

/// Frobenius projection of U onto {tr in [c_l, c_u], lambda_min >= r} through an
/// eigendecomposition and an enumerated eigenvalue QP.
SpectralReference spectral_kkt_reference(const Mat& U, std::optional<double> c_l, std::optional<double> c_u,
                                         double r);

/// Dense k x N strain operator B_{i,l}.
Mat dense_B(const fmo::ProblemInstance& inst, int i, int l);
/// Dense A(E) = sum_i sum_l B^T E_i B.
Mat dense_A(const fmo::ProblemInstance& inst, const std::vector<Mat>& E);
/// F(E, x) straight from the definition, with dense A(E).
double saddle_value(const fmo::ProblemInstance& inst, const std::vector<Mat>& E, const std::vector<Vec>& x);
/// <A(E)^{-1} f_j, f_j> through a dense LU solve.
std::vector<double> compliance(const fmo::ProblemInstance& inst, const std::vector<Mat>& E);
/// F plus the squared-hinge compliance penalty.
double penalty_value(const fmo::ProblemInstance& inst, const std::vector<Mat>& E, const std::vector<Vec>& x);

/// Central difference of t -> f(t) at t = 0.
double central_difference(const std::function<double(double)>& f, double h = 1e-6);
/// |fd - analytic| / max(1, |fd|, |analytic|)
double relative_error(double fd, double analytic);

std::vector<Mat> to_dense(const fmo::MaterialState& E);
std::vector<Vec> to_vectors(const fmo::DualState& x);

/// One dual-averaging step written out with dense matrices.
struct DaState {
  std::vector<Mat> E;
  std::vector<Vec> x;
  std::vector<Mat> sE;
  std::vector<Vec> sx;
  double beta_hat = 1.0;  // beta-hat of the iteration being produced
  int t = 0;
};

/// weighted: alpha = 1 / sqrt(||gE||^2/tau + ||gx||^2/(1-tau)), else alpha = 1.
DaState reference_da_step(const fmo::ProblemInstance& inst, const DaState& in, double tau, double sigma,
                          bool weighted);

}  // namespace oracle
