#include "fmo/instance_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fmo::io {

namespace {

constexpr const char* kInstMagic = "fmo-inst/1";
constexpr const char* kStateMagic = "fmo-state/1";

// Whitespace tokenizer that remembers line numbers for error messages.
class Tokens {
 public:
  explicit Tokens(std::istream& is) {
    std::string line;
    int no = 0;
    while (std::getline(is, line)) {
      ++no;
      std::istringstream ls(line);
      std::string t;
      while (ls >> t) toks_.push_back({std::move(t), no});
    }
  }

  bool done() const noexcept { return pos_ >= toks_.size(); }

  const std::string& next(const char* what) {
    if (done()) fail(std::string("unexpected end of file, expected ") + what);
    return toks_[pos_++].text;
  }

  void expect(const std::string& word) {
    const std::string& t = next(word.c_str());
    if (t != word) fail("expected '" + word + "', found '" + t + "'", -1);
  }

  long long integer(const char* what) {
    const std::string& t = next(what);
    long long v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) fail(std::string("bad integer for ") + what + ": '" + t + "'", -1);
    return v;
  }

  double real(const char* what) {
    const std::string& t = next(what);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size() || !std::isfinite(v))
      fail(std::string("bad number for ") + what + ": '" + t + "'", -1);
    return v;
  }

  [[noreturn]] void fail(const std::string& msg, int back = 0) const {
    std::size_t at = pos_;
    if (back < 0 && at > 0) --at;
    const int line = toks_.empty() ? 0 : toks_[std::min(at, toks_.size() - 1)].line;
    throw Error(ErrorKind::invalid_input, "line " + std::to_string(line) + ": " + msg);
  }

 private:
  struct Tok {
    std::string text;
    int line;
  };
  std::vector<Tok> toks_;
  std::size_t pos_ = 0;
};

long long keyed(Tokens& t, const char* key) {
  t.expect(key);
  return t.integer(key);
}

double keyed_real(Tokens& t, const char* key) {
  t.expect(key);
  return t.real(key);
}

int checked_int(Tokens& t, long long v, long long lo, long long hi, const char* what) {
  if (v < lo || v > hi)
    t.fail(std::string(what) + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
               std::to_string(hi) + "]",
           -1);
  return int(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::invalid_input, "cannot write '" + path + "'");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::invalid_input, "cannot read '" + path + "'");
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_instance(std::ostream& os, const ProblemInstance& inst) {
  os << kInstMagic << '\n';
  os << "k " << inst.k << "\nN " << inst.N << "\nm " << inst.m() << "\nL " << inst.L() << "\nnig " << inst.nig()
     << '\n';
  os << "r " << format_double(inst.r) << "\ngamma " << format_double(inst.gamma) << "\neta "
     << format_double(inst.eta) << "\nnu " << format_double(inst.nu) << '\n';
  for (int i = 0; i < inst.m(); ++i) {
    const auto& el = inst.elements[std::size_t(i)];
    os << "element " << i << " rho " << format_double(inst.rho_l[std::size_t(i)]) << ' '
       << format_double(inst.rho_u[std::size_t(i)]) << " support " << el.support();
    for (int c : el.cols) os << ' ' << c;
    os << '\n';
    for (int l = 0; l < el.nig(); ++l) {
      const auto& B = el.B[std::size_t(l)];
      int nnz = 0;
      for (Eigen::Index c = 0; c < B.cols(); ++c)
        for (Eigen::Index a = 0; a < B.rows(); ++a) nnz += B(a, c) != 0.0;
      os << "B " << i << ' ' << l << ' ' << nnz << '\n';
      for (Eigen::Index c = 0; c < B.cols(); ++c)
        for (Eigen::Index a = 0; a < B.rows(); ++a)
          if (B(a, c) != 0.0) os << a << ' ' << el.cols[std::size_t(c)] << ' ' << format_double(B(a, c)) << '\n';
    }
  }
  for (int j = 0; j < inst.L(); ++j) {
    os << "load " << j << '\n';
    const auto& f = inst.loads[std::size_t(j)];
    for (Eigen::Index a = 0; a < f.size(); ++a) os << (a ? " " : "") << format_double(f[a]);
    os << '\n';
  }
  os << "end\n";
}

ProblemInstance read_instance(std::istream& is) {
  Tokens t(is);
  if (t.done() || t.next("header") != kInstMagic) t.fail(std::string("missing header '") + kInstMagic + "'", -1);
  ProblemInstance inst;
  constexpr long long kBig = 1LL << 30;
  inst.k = checked_int(t, keyed(t, "k"), 1, kMaxBlockOrder, "k");
  inst.N = checked_int(t, keyed(t, "N"), 1, kBig, "N");
  const int m = checked_int(t, keyed(t, "m"), 1, kBig, "m");
  const int L = checked_int(t, keyed(t, "L"), 1, kBig, "L");
  const int nig = checked_int(t, keyed(t, "nig"), 1, kBig, "nig");
  inst.r = keyed_real(t, "r");
  inst.gamma = keyed_real(t, "gamma");
  inst.eta = keyed_real(t, "eta");
  inst.nu = keyed_real(t, "nu");

  inst.elements.resize(std::size_t(m));
  inst.rho_l.resize(std::size_t(m));
  inst.rho_u.resize(std::size_t(m));
  for (int i = 0; i < m; ++i) {
    checked_int(t, keyed(t, "element"), i, i, "element index");
    t.expect("rho");
    inst.rho_l[std::size_t(i)] = t.real("rho_l");
    inst.rho_u[std::size_t(i)] = t.real("rho_u");
    auto& el = inst.elements[std::size_t(i)];
    const int n = checked_int(t, keyed(t, "support"), 1, inst.N, "support size");
    for (int c = 0; c < n; ++c) {
      const int col = checked_int(t, t.integer("column"), 0, inst.N - 1, "column");
      if (c > 0 && col <= el.cols.back()) t.fail("support columns must be strictly increasing", -1);
      el.cols.push_back(col);
    }
    for (int l = 0; l < nig; ++l) {
      t.expect("B");
      checked_int(t, t.integer("element index"), i, i, "B element index");
      checked_int(t, t.integer("Gauss index"), l, l, "B Gauss index");
      const long long nnz = checked_int(t, t.integer("nnz"), 0, (long long)inst.k * n, "nnz");
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(inst.k, n);
      for (long long e = 0; e < nnz; ++e) {
        const int row = checked_int(t, t.integer("row"), 0, inst.k - 1, "row");
        const int col = checked_int(t, t.integer("column"), 0, inst.N - 1, "column");
        const auto it = std::lower_bound(el.cols.begin(), el.cols.end(), col);
        if (it == el.cols.end() || *it != col)
          t.fail("column " + std::to_string(col) + " is not in the support of element " + std::to_string(i), -1);
        B(row, it - el.cols.begin()) = t.real("B value");
      }
      el.B.push_back(std::move(B));
    }
  }
  inst.loads.resize(std::size_t(L));
  for (int j = 0; j < L; ++j) {
    checked_int(t, keyed(t, "load"), j, j, "load index");
    Vector f(inst.N);
    for (int a = 0; a < inst.N; ++a) f[a] = t.real("load value");
    inst.loads[std::size_t(j)] = std::move(f);
  }
  t.expect("end");
  inst.validate();
  return inst;
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
  auto os = open_out(path);
  write_instance(os, inst);
  if (!os) throw Error(ErrorKind::invalid_input, "write to '" + path + "' failed");
}

ProblemInstance load_instance(const std::string& path) {
  auto is = open_in(path);
  try {
    return read_instance(is);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

void write_state(std::ostream& os, const MaterialState& E, const DualState& x) {
  const int k = E.blocks.empty() ? 0 : E.blocks.front().order();
  const long long N = x.vectors.empty() ? 0 : x.vectors.front().size();
  os << kStateMagic << "\nk " << k << "\nm " << E.m() << "\nL " << x.L() << "\nN " << N << '\n';
  for (int i = 0; i < E.m(); ++i) {
    os << "E " << i;
    for (double v : E.blocks[std::size_t(i)].packed()) os << ' ' << format_double(v);
    os << '\n';
  }
  for (int j = 0; j < x.L(); ++j) {
    os << "x " << j;
    for (double v : x.vectors[std::size_t(j)]) os << ' ' << format_double(v);
    os << '\n';
  }
  os << "end\n";
}

void read_state(std::istream& is, MaterialState& E, DualState& x) {
  Tokens t(is);
  if (t.done() || t.next("header") != kStateMagic) t.fail(std::string("missing header '") + kStateMagic + "'", -1);
  constexpr long long kBig = 1LL << 30;
  const int k = checked_int(t, keyed(t, "k"), 0, kMaxBlockOrder, "k");
  const int m = checked_int(t, keyed(t, "m"), 0, kBig, "m");
  const int L = checked_int(t, keyed(t, "L"), 0, kBig, "L");
  const int N = checked_int(t, keyed(t, "N"), 0, kBig, "N");
  E.blocks.assign(std::size_t(m), SymBlock(k));
  for (int i = 0; i < m; ++i) {
    checked_int(t, keyed(t, "E"), i, i, "block index");
    for (double& v : E.blocks[std::size_t(i)].packed()) v = t.real("block entry");
  }
  x.vectors.assign(std::size_t(L), Vector(N));
  for (int j = 0; j < L; ++j) {
    checked_int(t, keyed(t, "x"), j, j, "vector index");
    for (int a = 0; a < N; ++a) x.vectors[std::size_t(j)][a] = t.real("vector entry");
  }
  t.expect("end");
}

void save_state(const std::string& path, const MaterialState& E, const DualState& x) {
  auto os = open_out(path);
  write_state(os, E, x);
  if (!os) throw Error(ErrorKind::invalid_input, "write to '" + path + "' failed");
}

void load_state(const std::string& path, MaterialState& E, DualState& x) {
  auto is = open_in(path);
  try {
    read_state(is, E, x);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace fmo::io
