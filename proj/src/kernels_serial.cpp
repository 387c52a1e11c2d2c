#include "element_ops.hpp"
#include "fmo/kernels.hpp"
#include "fmo/proj.hpp"

namespace fmo::serial {

void apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, Vector& out) {
  std::vector<double> xl(std::size_t(detail::max_support(inst))), local(xl.size());
  out = Vector::Zero(inst.N);
  for (int i = 0; i < inst.m(); ++i) {
    const auto& el = inst.elements[std::size_t(i)];
    detail::gather(el, v, xl.data());
    detail::element_apply(el, E.blocks[std::size_t(i)], xl.data(), local.data());
    for (int c = 0; c < el.support(); ++c) out[el.cols[std::size_t(c)]] += local[std::size_t(c)];
  }
}

double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v) {
  std::vector<double> xl(std::size_t(detail::max_support(inst)));
  double q = 0.0;
  for (int i = 0; i < inst.m(); ++i) {
    const auto& el = inst.elements[std::size_t(i)];
    detail::gather(el, v, xl.data());
    q += detail::element_quad(el, E.blocks[std::size_t(i)], xl.data());
  }
  return q;
}

void fused_pass(const ProblemInstance& inst, const MaterialState& E, const DualState& x, FusedPass& out) {
  const int m = inst.m(), L = x.L();
  std::vector<double> xl(std::size_t(detail::max_support(inst))), local(xl.size());
  out.quad.assign(std::size_t(L), 0.0);
  out.Ax.assign(std::size_t(L), Vector::Zero(inst.N));
  out.outer.assign(std::size_t(m) * std::size_t(L), SymBlock(inst.k));
  for (int i = 0; i < m; ++i) {
    const auto& el = inst.elements[std::size_t(i)];
    for (int j = 0; j < L; ++j) {
      detail::gather(el, x.vectors[std::size_t(j)], xl.data());
      out.quad[std::size_t(j)] += detail::element_fused(el, E.blocks[std::size_t(i)], xl.data(), local.data(),
                                                         out.outer[std::size_t(i) * std::size_t(L) + std::size_t(j)]);
      Vector& ax = out.Ax[std::size_t(j)];
      for (int c = 0; c < el.support(); ++c) ax[el.cols[std::size_t(c)]] += local[std::size_t(c)];
    }
  }
}

void update_blocks(const ProblemInstance& inst, const MaterialState& s, double beta_tau, MaterialState& E) {
  E.blocks.resize(s.blocks.size());
  for (int i = 0; i < inst.m(); ++i) {
    E.blocks[std::size_t(i)] = e_update_block(s.blocks[std::size_t(i)], beta_tau, inst.rho_l[std::size_t(i)],
                                              inst.rho_u[std::size_t(i)], inst.r);
  }
}

}  // namespace fmo::serial
