// fmo: generate instances and run the dual-averaging solver.
//
//   fmo generate --nx 8 --ny 4 --load corner:br -o cantilever.inst
//   fmo run --instance cantilever.inst --iters 5000 --csv log.csv --report report.json --state final.state
//
// Exit codes: 0 success, 2 bad input, 3 numerical failure. Errors are printed
// to stderr as one JSON object.

#include "fmo/fem2d.hpp"
#include "fmo/instance_io.hpp"
#include "fmo/solver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

using json = nlohmann::json;

namespace {

struct MeshArgs {
  fmo::fem2d::MeshSpec spec;
  std::string fixed = "left";
  std::vector<std::string> loads;
  double gamma_scale = 0.0;  // > 0: gamma = scale * max compliance at the start
  std::string random;        // "m,N,L": random sparse instance instead of a mesh
};

void add_mesh_options(CLI::App* app, MeshArgs& a) {
  app->add_option("--nx", a.spec.nx, "elements along x");
  app->add_option("--ny", a.spec.ny, "elements along y");
  app->add_option("--lx", a.spec.lx, "domain width");
  app->add_option("--ly", a.spec.ly, "domain height");
  app->add_option("--fixed", a.fixed, "clamped edge: left|right|bottom|top");
  app->add_option("--load", a.loads, "load selector[@fx,fy], repeatable (default corner:br@0,-1)");
  app->add_option("--rho-l", a.spec.rho_l, "lower trace bound per element (default k*r)");
  app->add_option("--rho-u", a.spec.rho_u, "upper trace bound per element");
  app->add_option("--r", a.spec.r, "lower eigenvalue bound");
  app->add_option("--gamma", a.spec.gamma, "compliance bound");
  app->add_option("--gamma-scale", a.gamma_scale, "gamma = scale * largest compliance of the starting design");
  app->add_option("--random", a.random, "random sparse instance m,N,L (uses --seed)");
}

fmo::ProblemInstance random_instance(const std::string& shape, std::uint64_t seed, const MeshArgs& a) {
  int m = 0, N = 0, L = 0;
  char c1 = 0, c2 = 0;
  std::istringstream is(shape);
  if (!(is >> m >> c1 >> N >> c2 >> L) || c1 != ',' || c2 != ',' || m < 1 || N < 1 || L < 1)
    throw fmo::Error(fmo::ErrorKind::invalid_input, "--random expects m,N,L with positive entries");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  fmo::ProblemInstance inst;
  inst.k = 3;
  inst.N = N;
  inst.r = a.spec.r;
  inst.gamma = a.spec.gamma;
  const int support = std::min(N, 8);
  for (int i = 0; i < m; ++i) {
    fmo::ElementOperator el;
    std::vector<int> pool(static_cast<std::size_t>(N));
    for (int a2 = 0; a2 < N; ++a2) pool[std::size_t(a2)] = a2;
    std::shuffle(pool.begin(), pool.end(), rng);
    el.cols.assign(pool.begin(), pool.begin() + support);
    if (std::find(el.cols.begin(), el.cols.end(), i % N) == el.cols.end()) el.cols[0] = i % N;
    std::sort(el.cols.begin(), el.cols.end());
    for (int l = 0; l < 4; ++l) {
      Eigen::MatrixXd B(3, support);
      for (int p = 0; p < B.size(); ++p) B.data()[p] = u(rng);
      el.B.push_back(B);
    }
    inst.elements.push_back(std::move(el));
  }
  for (int j = 0; j < L; ++j) {
    fmo::Vector f(N);
    for (int p = 0; p < N; ++p) f[p] = u(rng);
    inst.loads.push_back(f);
  }
  const double rho_l = a.spec.rho_l < 0.0 ? inst.k * inst.r : a.spec.rho_l;
  inst.rho_l.assign(std::size_t(m), rho_l);
  inst.rho_u.assign(std::size_t(m), a.spec.rho_u);
  inst.validate();
  return inst;
}

fmo::ProblemInstance build(MeshArgs& a, std::uint64_t seed) {
  fmo::ProblemInstance inst;
  if (!a.random.empty()) {
    inst = random_instance(a.random, seed, a);
  } else {
    a.spec.fixed = fmo::fem2d::parse_edge(a.fixed);
    if (!a.loads.empty()) {
      a.spec.loads.clear();
      for (const auto& l : a.loads) a.spec.loads.push_back(fmo::fem2d::parse_load(l));
    }
    inst = fmo::fem2d::build_instance(a.spec);
  }
  if (a.gamma_scale > 0.0) inst.gamma = fmo::fem2d::calibrated_gamma(inst, a.gamma_scale);
  return inst;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw fmo::Error(fmo::ErrorKind::invalid_input, "cannot write '" + path + "'");
  return os;
}

json constants_json(const fmo::BoundConstants& c) {
  json j{{"B_norm", c.B_norm},   {"power_iterations", c.power_iterations},
         {"L_E", c.L_E},         {"L_x", c.L_x},
         {"D_E", c.D_E},         {"D_x", c.D_x},
         {"f_norm", c.f_norm},   {"rank_deficient", c.rank_deficient}};
  j["lambda_min_BtB"] = c.lambda_min_BtB ? json(*c.lambda_min_BtB) : json(nullptr);
  return j;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int exit_code(fmo::ErrorKind k) { return k == fmo::ErrorKind::numerical ? 3 : 2; }

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free material optimization by dual averaging"};
  app.require_subcommand(1);

  MeshArgs gen_mesh;
  std::string gen_out;
  std::uint64_t gen_seed = 1;
  double gen_eta = 1.0, gen_nu = 0.0;
  auto* gen = app.add_subcommand("generate", "write a structured 2D instance (or a random one)");
  add_mesh_options(gen, gen_mesh);
  gen->add_option("--eta", gen_eta, "dual radius");
  gen->add_option("--nu", gen_nu, "penalty weight");
  gen->add_option("--seed", gen_seed, "seed for --random");
  gen->add_option("-o,--output", gen_out, "instance file")->required();

  MeshArgs run_mesh;
  std::string instance_path, csv_path, report_path, state_path, mode = "plain", scheme = "weighted", tau;
  fmo::SolverConfig cfg;
  std::optional<double> eta, nu, sigma0;
  std::uint64_t seed = 1;
  int threads = 0;
  bool unordered = false, serial = false;
  auto* run = app.add_subcommand("run", "solve an instance file or a generated mesh");
  run->add_option("--instance", instance_path, "instance file (fmo-inst/1); otherwise the mesh options are used");
  add_mesh_options(run, run_mesh);
  run->add_option("--mode", mode, "plain | penalty");
  run->add_option("--scheme", scheme, "simple | weighted");
  run->add_option("--iters", cfg.iterations, "number of steps");
  run->add_option("--tau", tau, "primal weight in (0,1), or 'optimal' (default 0.5)");
  run->add_option("--sigma0", sigma0, "initial sigma (default: value minimizing the a-priori bound)");
  run->add_option("--autotune-window", cfg.autotune_window, "sigma search window in steps, 0 = off (min 10)");
  run->add_option("--eta", eta, "override the dual radius");
  run->add_option("--nu", nu, "override the penalty weight");
  run->add_option("--seed", seed, "seed for --random instances");
  run->add_option("--stride", cfg.stride, "log every stride-th step");
  run->add_flag("--deterministic", cfg.deterministic, "ordered reductions, wall_ns written as 0");
  run->add_option("--dense-threshold", cfg.dense_threshold, "largest N for dense compliance work");
  run->add_option("--threads", threads, "OpenMP threads (0 = runtime default)");
  run->add_flag("--unordered", unordered, "thread-local reductions (not bit-reproducible)");
  run->add_flag("--serial", serial, "single-threaded kernels");
  run->add_option("--csv", csv_path, "iteration log");
  run->add_option("--report", report_path, "final JSON report (default stdout)");
  run->add_option("--state", state_path, "final material and dual state (fmo-state/1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("invalid_input", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) {
      gen_mesh.spec.eta = gen_eta;
      gen_mesh.spec.nu = gen_nu;
      auto inst = build(gen_mesh, gen_seed);
      inst.eta = gen_eta;
      inst.nu = gen_nu;
      fmo::io::save_instance(gen_out, inst);
      std::cout << json{{"m", inst.m()}, {"N", inst.N}, {"L", inst.L()}, {"nig", inst.nig()}, {"gamma", inst.gamma},
                        {"output", gen_out}}
                       .dump()
                << '\n';
      return 0;
    }

    fmo::ProblemInstance inst =
        instance_path.empty() ? build(run_mesh, seed) : fmo::io::load_instance(instance_path);
    if (eta) inst.eta = *eta;
    if (nu) inst.nu = *nu;
    inst.validate();

    cfg.mode = fmo::parse_mode(mode);
    cfg.scheme = fmo::parse_scheme(scheme);
    cfg.sigma0 = sigma0;
    cfg.constants.dense_threshold = cfg.dense_threshold;
    if (unordered) cfg.policy.reduction = fmo::Reduction::unordered;
    if (serial) cfg.policy.parallel = false;
    if (cfg.deterministic) cfg.policy.reduction = fmo::Reduction::ordered;
    if (tau == "optimal") {
      cfg.tau = fmo::compute_constants(inst, cfg.constants).optimal_tau();
    } else if (!tau.empty()) {
      try {
        cfg.tau = std::stod(tau);
      } catch (const std::exception&) {
        throw fmo::Error(fmo::ErrorKind::invalid_input, "--tau expects a number or 'optimal'");
      }
    }
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    std::ofstream csv;
    if (!csv_path.empty()) {
      csv = open_out(csv_path);
      csv << fmo::csv_header() << '\n';
    }
    fmo::RowSink sink;
    if (csv.is_open()) sink = [&](const fmo::IterationRow& r) { csv << fmo::csv_row(r) << '\n'; };
    const auto res = fmo::solve(inst, cfg, sink);
    if (csv.is_open() && !csv.flush()) throw fmo::Error(fmo::ErrorKind::invalid_input, "write failed: " + csv_path);
    if (!state_path.empty()) fmo::io::save_state(state_path, res.E, res.x);

    json rep;
    rep["m"] = inst.m();
    rep["N"] = inst.N;
    rep["L"] = inst.L();
    rep["nig"] = inst.nig();
    rep["obj0"] = res.obj0;
    rep["cpu"] = cfg.deterministic ? 0.0 : res.cpu_seconds;
    rep["obj"] = res.obj;
    rep["const"] = res.compliance_feasible ? json(*res.compliance_feasible ? "f" : "i") : json(nullptr);
    rep["mode"] = fmo::to_string(cfg.mode);
    rep["scheme"] = fmo::to_string(cfg.scheme);
    rep["iterations"] = res.iterations;
    rep["seed"] = seed;
    rep["tau"] = res.tau;
    rep["sigma_final"] = res.sigma_final;
    rep["autotune"] = {{"window", cfg.autotune_window},
                       {"windows", res.autotune_windows},
                       {"cap_hit", res.autotune_cap_hit}};
    rep["obj_avg"] = res.obj_avg;
    rep["gap_estimate"] = {{"kappa", res.gap.kappa}, {"upsilon", res.gap.upsilon}, {"total", res.gap.total()}};
    rep["theoretical_bound"] = res.theoretical_bound;
    if (!res.compliances.empty()) {
      rep["compliances"] = res.compliances;
      rep["violation"] = {{"literal", res.violation.literal}, {"positive", res.violation.positive}};
    }
    rep["constants"] = constants_json(res.constants);
    const auto& f = res.flop_summary;
    rep["flops"] = {{"total", res.flops.total()},
                    {"per_iteration", f.per_iteration},
                    {"per_iteration_dense", f.per_iteration_dense},
                    {"model_sparse", f.model_sparse},
                    {"model_dense_B", f.model_dense_B},
                    {"model_factorization", f.model_factorization}};
    rep["best_feasible_objective"] = opt_json(res.best_feasible_objective);
    if (res.best_feasible_objective && inst.N <= cfg.dense_threshold) {
      const auto cert = fmo::approximation_certificate(inst, res.E, res.x, *res.best_feasible_objective,
                                                       res.constants, cfg.dense_threshold);
      rep["certificate"] = {{"F_star_estimate", cert.F_star_upper},
                            {"interior", cert.interior},
                            {"violation_sum", cert.lhs},
                            {"bound_literal", opt_json(cert.rhs_literal)},
                            {"bound_corrected", opt_json(cert.rhs_corrected)},
                            {"penalized_bound_literal", opt_json(cert.rhs_penalty_literal)},
                            {"penalized_bound_corrected", opt_json(cert.rhs_penalty_corrected)}};
    }

    if (report_path.empty()) {
      std::cout << rep.dump(2) << '\n';
    } else {
      auto os = open_out(report_path);
      os << rep.dump(2) << '\n';
    }
    return 0;
  } catch (const fmo::Error& e) {
    print_error(fmo::to_string(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    print_error("invalid_input", e.what());
    return 2;
  }
}
