#include "fmo/kernels.hpp"

#include "element_ops.hpp"
#include "fmo/proj.hpp"

#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fmo::kernels {

namespace {

// Rethrows the first exception raised inside a parallel region.
class ErrorSlot {
 public:
  void capture() noexcept {
#ifdef _OPENMP
#pragma omp critical(fmo_error_slot)
#endif
    if (!error_) error_ = std::current_exception();
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

}  // namespace

long long apply_flops(const ProblemInstance& inst, int element) {
  const long long k = inst.k, n = inst.elements[std::size_t(element)].support();
  return inst.nig() * (4 * k * n + 2 * k * k);
}

long long fused_flops(const ProblemInstance& inst, int element) {
  const long long k = inst.k, n = inst.elements[std::size_t(element)].support();
  return inst.nig() * (4 * k * n + 3 * k * k + 3 * k);
}

void apply_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, Vector& out,
             const ExecPolicy& policy, FlopCounter* flops) {
  const int m = inst.m();
  const int smax = detail::max_support(inst);
  out = Vector::Zero(inst.N);

  if (policy.reduction == Reduction::ordered) {
    const auto off = detail::support_offsets(inst);
    std::vector<double> buf(off.back());
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        detail::gather(el, v, xl.data());
        detail::element_apply(el, E.blocks[std::size_t(i)], xl.data(), buf.data() + off[std::size_t(i)]);
      }
    }
    for (int i = 0; i < m; ++i) {
      const auto& el = inst.elements[std::size_t(i)];
      const double* local = buf.data() + off[std::size_t(i)];
      for (int c = 0; c < el.support(); ++c) out[el.cols[std::size_t(c)]] += local[c];
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax)), local(static_cast<std::size_t>(smax));
      Vector part = Vector::Zero(inst.N);
#ifdef _OPENMP
#pragma omp for schedule(static) nowait
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        detail::gather(el, v, xl.data());
        detail::element_apply(el, E.blocks[std::size_t(i)], xl.data(), local.data());
        for (int c = 0; c < el.support(); ++c) part[el.cols[std::size_t(c)]] += local[std::size_t(c)];
      }
#ifdef _OPENMP
#pragma omp critical(fmo_apply_reduce)
#endif
      out += part;
    }
  }
  if (flops) {
    for (int i = 0; i < m; ++i) flops->apply += apply_flops(inst, i);
  }
}

double quad_A(const ProblemInstance& inst, const MaterialState& E, const Vector& v, const ExecPolicy& policy,
              FlopCounter* flops) {
  const int m = inst.m();
  const int smax = detail::max_support(inst);
  double q = 0.0;
  if (policy.reduction == Reduction::ordered) {
    std::vector<double> part(std::size_t(m), 0.0);
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        detail::gather(el, v, xl.data());
        part[std::size_t(i)] = detail::element_quad(el, E.blocks[std::size_t(i)], xl.data());
      }
    }
    for (double p : part) q += p;
  } else {
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel) reduction(+ : q)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        detail::gather(el, v, xl.data());
        q += detail::element_quad(el, E.blocks[std::size_t(i)], xl.data());
      }
    }
  }
  if (flops) {
    // strain and block product as in apply_A, plus the k-term inner product
    for (int i = 0; i < m; ++i) {
      const long long k = inst.k, n = inst.elements[std::size_t(i)].support();
      flops->apply += inst.nig() * (2 * k * n + 2 * k * k + 2 * k);
    }
  }
  return q;
}

void fused_pass(const ProblemInstance& inst, const MaterialState& E, const DualState& x, FusedPass& out,
                const ExecPolicy& policy, FlopCounter* flops) {
  const int m = inst.m(), L = x.L();
  const int smax = detail::max_support(inst);
  const std::size_t Ls = std::size_t(L);
  out.quad.assign(Ls, 0.0);
  out.Ax.assign(Ls, Vector::Zero(inst.N));
  out.outer.assign(std::size_t(m) * Ls, SymBlock(inst.k));

  if (policy.reduction == Reduction::ordered) {
    const auto off = detail::support_offsets(inst);
    std::vector<double> buf(off.back() * Ls);
    std::vector<double> part(std::size_t(m) * Ls, 0.0);
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        for (int j = 0; j < L; ++j) {
          const std::size_t ij = std::size_t(i) * Ls + std::size_t(j);
          detail::gather(el, x.vectors[std::size_t(j)], xl.data());
          part[ij] = detail::element_fused(el, E.blocks[std::size_t(i)], xl.data(),
                                           buf.data() + off[std::size_t(i)] * Ls + std::size_t(j) * std::size_t(el.support()),
                                           out.outer[ij]);
        }
      }
    }
    for (int i = 0; i < m; ++i) {
      const auto& el = inst.elements[std::size_t(i)];
      for (int j = 0; j < L; ++j) {
        out.quad[std::size_t(j)] += part[std::size_t(i) * Ls + std::size_t(j)];
        const double* local = buf.data() + off[std::size_t(i)] * Ls + std::size_t(j) * std::size_t(el.support());
        Vector& ax = out.Ax[std::size_t(j)];
        for (int c = 0; c < el.support(); ++c) ax[el.cols[std::size_t(c)]] += local[c];
      }
    }
  } else {
#ifdef _OPENMP
#pragma omp parallel if (policy.parallel)
#endif
    {
      std::vector<double> xl(static_cast<std::size_t>(smax)), local(static_cast<std::size_t>(smax));
      std::vector<Vector> ax(Ls, Vector::Zero(inst.N));
      std::vector<double> q(Ls, 0.0);
#ifdef _OPENMP
#pragma omp for schedule(static) nowait
#endif
      for (int i = 0; i < m; ++i) {
        const auto& el = inst.elements[std::size_t(i)];
        for (int j = 0; j < L; ++j) {
          detail::gather(el, x.vectors[std::size_t(j)], xl.data());
          q[std::size_t(j)] += detail::element_fused(el, E.blocks[std::size_t(i)], xl.data(), local.data(),
                                                     out.outer[std::size_t(i) * Ls + std::size_t(j)]);
          for (int c = 0; c < el.support(); ++c) ax[std::size_t(j)][el.cols[std::size_t(c)]] += local[std::size_t(c)];
        }
      }
#ifdef _OPENMP
#pragma omp critical(fmo_fused_reduce)
#endif
      for (std::size_t j = 0; j < Ls; ++j) {
        out.quad[j] += q[j];
        out.Ax[j] += ax[j];
      }
    }
  }
  if (flops) {
    for (int i = 0; i < m; ++i) flops->fused += L * fused_flops(inst, i);
  }
}

void update_blocks(const ProblemInstance& inst, const MaterialState& s, double beta_tau, MaterialState& E,
                   const ExecPolicy& policy, FlopCounter* flops) {
  const int m = inst.m();
  E.blocks.resize(s.blocks.size());
  ErrorSlot err;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (policy.parallel)
#endif
  for (int i = 0; i < m; ++i) {
    try {
      E.blocks[std::size_t(i)] = e_update_block(s.blocks[std::size_t(i)], beta_tau, inst.rho_l[std::size_t(i)],
                                                inst.rho_u[std::size_t(i)], inst.r);
    } catch (...) {
      err.capture();
    }
  }
  err.rethrow();
  if (flops) {
    // eigendecomposition, case selection and recomposition per block
    const long long k = inst.k;
    flops->update += m * (10 * k * k * k + 3 * k * k + 7 * k + 8);
  }
}

}  // namespace fmo::kernels
