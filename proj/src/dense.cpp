#include "fmo/dense.hpp"

#include <algorithm>
#include <sstream>

namespace fmo::dense {

void require_small(const ProblemInstance& inst, int threshold, const char* what) {
  if (inst.N > threshold) {
    std::ostringstream os;
    os << what << " needs a dense stiffness matrix; N = " << inst.N << " exceeds the dense threshold " << threshold;
    throw Error(ErrorKind::invalid_input, os.str());
  }
}

Eigen::MatrixXd assemble_A(const ProblemInstance& inst, const MaterialState& E, FlopCounter* flops) {
  check_dimensions(inst, E);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(inst.N, inst.N);
  for (int i = 0; i < inst.m(); ++i) {
    const auto& el = inst.elements[std::size_t(i)];
    const BlockMatrix e = E.blocks[std::size_t(i)].dense();
    const int n = el.support();
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(n, n);
    for (const auto& B : el.B) local.noalias() += B.transpose() * (e * B);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) A(el.cols[std::size_t(a)], el.cols[std::size_t(b)]) += local(a, b);
    if (flops) {
      const long long k = inst.k;
      flops->dense += inst.nig() * (2 * k * k * n + 2 * k * n * n);
    }
  }
  return A;
}

Factorization::Factorization(const Eigen::MatrixXd& A, FlopCounter* flops) : llt_(A) {
  if (flops) {
    const long long n = A.rows();
    flops->dense += n * n * n / 3;
  }
  if (llt_.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << "stiffness singular, check boundary conditions (lambda_min estimate "
       << (eig.info() == Eigen::Success ? eig.eigenvalues().minCoeff() : 0.0) << ")";
    throw Error(ErrorKind::numerical, os.str());
  }
}

Vector Factorization::solve(const Vector& f, FlopCounter* flops) const {
  if (flops) {
    const long long n = llt_.rows();
    flops->dense += 2 * n * n;
  }
  return llt_.solve(f);
}

std::vector<double> compliances(const ProblemInstance& inst, const MaterialState& E, int threshold) {
  require_small(inst, threshold, "compliance evaluation");
  const Factorization fac(assemble_A(inst, E));
  std::vector<double> c;
  c.reserve(std::size_t(inst.L()));
  for (const auto& f : inst.loads) c.push_back(f.dot(fac.solve(f)));
  return c;
}

Violation violation(const std::vector<double>& compliances, double gamma) {
  Violation v;
  for (double c : compliances) {
    v.literal += std::min(c - gamma, 0.0);
    v.positive += std::max(c - gamma, 0.0);
  }
  return v;
}

}  // namespace fmo::dense
