// symtb: partitions, bounds, simulations and grid selection from the shell.
// Exit codes: 0 ok, 1 engine or validation failure, 2 usage error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "report.hpp"
#include "symtri/prng.hpp"

using namespace symtri;
using symtb::ordered_json;

namespace {

constexpr int kUsage = 2;
constexpr int kFailure = 1;
constexpr double kTolerance = 1e-10;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out << text;
}

// Operand dump: 8-byte magic, kernel, n1, n2 as int32, then the used matrices
// (A, B, symmetric, C) as native doubles in storage order.
constexpr char kMagic[8] = {'S', 'Y', 'M', 'T', 'B', '0', '0', '1'};

void dump_instance(const std::string& path, const KernelInstance& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  const std::int32_t head[3] = {static_cast<std::int32_t>(x.kernel), x.n1, x.n2};
  out.write(reinterpret_cast<const char*>(head), sizeof head);
  for (const auto* v : {&x.A.data(), &x.B.data(), &x.sym.data(), &x.C.data()})
    out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
}

KernelInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  char magic[8];
  std::int32_t head[3];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error(ErrorKind::ParseError, path + ": not an operand dump");
  if (!in.read(reinterpret_cast<char*>(head), sizeof head) || head[0] < 0 || head[0] > 2 || head[1] < 1 || head[2] < 0)
    throw Error(ErrorKind::ParseError, path + ": bad header");
  auto x = random_instance(static_cast<Kernel>(head[0]), head[1], head[2], 0);
  for (auto* v : {&x.A.data(), &x.B.data(), &x.sym.data(), &x.C.data()})
    if (!in.read(reinterpret_cast<char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double))))
      throw Error(ErrorKind::ParseError, path + ": truncated");
  return x;
}

void append_csv(const std::string& path, const symtb::CsvRow& row) {
  bool fresh = true;
  {
    std::ifstream probe(path, std::ios::binary | std::ios::ate);
    fresh = !probe || probe.tellg() == 0;
  }
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  if (fresh) out << symtb::CsvRow::header() << "\n";
  out << row.str() << "\n";
}

struct SimArgs {
  std::string kernel = "syrk";
  std::vector<int> n1, n2, P, p1, p2, b;
  std::vector<long> M;
  std::vector<double> x;
  std::vector<unsigned long> seed{1};
  std::string algo;
  double alpha = 1, beta = 1, gamma = 1;
  std::string csv, dump, load;
  bool sweep = false;
};

template <class T>
std::optional<T> opt(const std::vector<T>& v) {
  if (v.empty()) return std::nullopt;
  return v.front();
}

ordered_json simulate_seq(const SimArgs& a, int n1, int n2, long M, unsigned long seed, bool& ok) {
  const Kernel k = parse_kernel(a.kernel);
  auto x = a.load.empty() ? random_instance(k, n1, n2, seed) : load_instance(a.load);
  if (!a.dump.empty()) dump_instance(a.dump, x);
  auto ref = x;
  reference_kernel(ref);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = seqsim::run_seq(x, M);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto s = bounds::shape(x.kernel, x.n1, x.n2);
  const double lb = bounds::seq_read_lb(s, M);
  const double err = max_rel_err(res.out.output(), ref.output());
  ok = err <= kTolerance;

  ordered_json j;
  j["engine"] = "seq";
  j["params"] = {{"kernel", to_string(x.kernel)}, {"n1", x.n1}, {"n2", x.n2}, {"M", M}, {"seed", seed}};
  if (!a.load.empty()) j["params"]["load"] = a.load;
  j["plan"] = {{"mode", seqsim::to_string(res.plan.mode)},
               {"r", res.plan.r},
               {"c", res.plan.c},
               {"g", res.plan.g},
               {"n_hat", res.plan.n_hat},
               {"replication", res.plan.replication()}};
  j["ledger"] = {{"reads", res.ledger.reads}, {"writes", res.ledger.writes}, {"peak", res.ledger.peak}};
  j["bound"] = {{"seq_read_lb", lb}};
  j["ratio"] = lb > 0 ? ordered_json(res.ledger.reads / lb) : ordered_json(nullptr);
  j["correct"] = ok;
  j["max_rel_err"] = err;
  j["timing"] = {{"simulate_seconds", secs}};

  if (!a.csv.empty()) {
    symtb::CsvRow row;
    row.engine = "seq";
    row.kernel = to_string(x.kernel);
    row.algo = seqsim::to_string(res.plan.mode);
    row.m = x.m();
    row.n1 = x.n1;
    row.n2 = x.n2;
    row.M = M;
    row.P = 1;
    row.c = res.plan.c;
    row.seed = seed;
    row.reads = res.ledger.reads;
    row.writes = res.ledger.writes;
    row.max_peak_memory = res.ledger.peak;
    row.bound = lb;
    row.ratio = lb > 0 ? res.ledger.reads / lb : 0;
    row.correct = ok;
    row.max_rel_err = err;
    append_csv(a.csv, row);
  }
  return j;
}

struct ParPoint {
  int n1 = 0, n2 = 0;
  std::optional<int> P, p1, p2, b;
  std::optional<long> M;
  std::optional<double> x;
  unsigned long seed = 1;
};

ordered_json simulate_par(const SimArgs& a, const ParPoint& pt, bool& ok) {
  const Kernel k = parse_kernel(a.kernel);
  auto x = a.load.empty() ? random_instance(k, pt.n1, pt.n2, pt.seed) : load_instance(a.load);
  if (!a.dump.empty()) dump_instance(a.dump, x);
  const auto s = bounds::shape(x.kernel, x.n1, x.n2);

  parsim::MachineSpec spec;
  spec.alpha = a.alpha;
  spec.beta = a.beta;
  spec.gamma = a.gamma;
  spec.M = pt.M;
  int b = pt.b.value_or(0);
  std::optional<parsim::Algo> algo;
  if (!a.algo.empty()) algo = parsim::parse_algo(a.algo);

  if (pt.p1 || pt.p2) {
    spec.p1 = pt.p1.value_or(1);
    spec.p2 = pt.p2.value_or(1);
    if (!algo) throw UsageError("--p1/--p2 need --algo");
    if (*algo == parsim::Algo::OneD) {
      spec.p2 = spec.p1 * spec.p2;
      spec.p1 = 1;
    }
  } else {
    if (!pt.P) throw UsageError("simulate par needs --P or --p1/--p2");
    const int P = *pt.P;
    if (!algo) {
      const auto g = gridopt::select_grid(s, P);
      algo = g.algo;
      spec.p1 = g.p1;
      spec.p2 = g.p2;
    } else if (*algo == parsim::Algo::OneD) {
      spec.p2 = P;
    } else if (*algo == parsim::Algo::TwoD) {
      spec.p1 = gridopt::choice_2d(s, P).p1;
    } else if (*algo == parsim::Algo::ThreeD) {
      const auto g = gridopt::choice_3d(s, P);
      spec.p1 = g.p1;
      spec.p2 = g.p2;
    } else {
      if (!pt.x) throw UsageError("--algo 3d-lim with --P needs --x (or give --p1/--p2)");
      const auto lp = gridopt::limited_params(P, *pt.x, x.n1);
      spec.p1 = lp.p1;
      spec.p2 = lp.p2;
      if (!pt.b) b = lp.b;
    }
  }
  if (*algo == parsim::Algo::ThreeDLimited && b < 1) b = 1;

  auto ref = x;
  reference_kernel(ref);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = parsim::run(x, spec, *algo, b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double err = max_rel_err(res.out.output(), ref.output());
  ok = err <= kTolerance && res.one_copy_start && res.one_copy_end;

  const int P = spec.P();
  const auto& L = res.ledger;
  const double words = L.max_words_received().to_double();
  const auto mi = bounds::memindep_lb(s, P);
  const double md = bounds::par_memdep_lb(s, P, static_cast<double>(L.max_peak_memory()));
  const double lb = std::max(mi.lb, md);

  ordered_json j;
  j["engine"] = "par";
  j["params"] = {{"kernel", to_string(x.kernel)}, {"n1", x.n1},  {"n2", x.n2},  {"P", P},
                 {"algo", parsim::to_string(*algo)}, {"p1", spec.p1}, {"p2", spec.p2}, {"c", res.dist.c},
                 {"b", res.dist.b}, {"seed", pt.seed}, {"alpha", spec.alpha}, {"beta", spec.beta},
                 {"gamma", spec.gamma}};
  if (pt.M) j["params"]["M"] = *pt.M;
  if (pt.x) j["params"]["x"] = *pt.x;
  if (!a.load.empty()) j["params"]["load"] = a.load;
  j["ledger"] = symtb::ledger_json(L);
  j["bound"] = {{"memindep_case", mi.case_id}, {"memindep_lb", mi.lb}, {"memdep_lb_at_peak", md}, {"lb", lb}};
  j["ratio"] = lb > 0 ? ordered_json(words / lb) : ordered_json(nullptr);
  if (*algo == parsim::Algo::ThreeDLimited) {
    long owned = 0;
    for (const auto& r : L.ranks) owned = std::max(owned, r.owned_words);
    const double xm = pt.x.value_or(spec.p2);
    const double claim = xm * x.n1 * x.n1 / (2.0 * P) + owned;
    j["memory_claim"] = {{"x", xm}, {"limit", claim}, {"peak", L.max_peak_memory()}, {"holds", L.max_peak_memory() <= claim}};
  }
  j["one_copy"] = res.one_copy_start && res.one_copy_end;
  j["correct"] = ok;
  j["max_rel_err"] = err;
  j["timing"] = {{"simulate_seconds", secs}};

  if (!a.csv.empty()) {
    symtb::CsvRow row;
    row.engine = "par";
    row.kernel = to_string(x.kernel);
    row.algo = parsim::to_string(*algo);
    row.m = x.m();
    row.n1 = x.n1;
    row.n2 = x.n2;
    row.M = pt.M.value_or(0);
    row.P = P;
    row.p1 = spec.p1;
    row.p2 = spec.p2;
    row.c = res.dist.c;
    row.b = res.dist.b;
    row.seed = pt.seed;
    row.max_words_received = words;
    row.max_messages = L.max_messages();
    row.max_flops = L.max_flops().to_double();
    row.max_peak_memory = L.max_peak_memory();
    row.bound = lb;
    row.ratio = lb > 0 ? words / lb : 0;
    row.correct = ok;
    row.max_rel_err = err;
    append_csv(a.csv, row);
  }
  return j;
}

template <class T>
std::vector<std::optional<T>> axis(const std::vector<T>& v) {
  if (v.empty()) return {std::nullopt};
  return {v.begin(), v.end()};
}

int run_simulate(const std::string& engine, const SimArgs& a) {
  auto multi = [](const auto& v) { return v.size() > 1; };
  if (!a.sweep && (multi(a.n1) || multi(a.n2) || multi(a.M) || multi(a.P) || multi(a.p1) || multi(a.p2) ||
                   multi(a.b) || multi(a.x) || multi(a.seed)))
    throw UsageError("comma lists need --sweep");
  if (a.load.empty() && (a.n1.empty() || a.n2.empty())) throw UsageError("--n1 and --n2 are required");
  std::vector<int> n1s = a.n1.empty() ? std::vector<int>{0} : a.n1;
  std::vector<int> n2s = a.n2.empty() ? std::vector<int>{0} : a.n2;

  ordered_json out = ordered_json::array();
  bool all_ok = true;
  for (int n1 : n1s)
    for (int n2 : n2s)
      for (auto seed : a.seed) {
        if (engine == "seq") {
          if (a.M.empty()) throw UsageError("simulate seq needs --M");
          for (long M : a.M) {
            bool ok = false;
            out.push_back(simulate_seq(a, n1, n2, M, seed, ok));
            all_ok = all_ok && ok;
          }
          continue;
        }
        for (auto P : axis(a.P))
          for (auto p1 : axis(a.p1))
            for (auto p2 : axis(a.p2))
              for (auto b : axis(a.b))
                for (auto xm : axis(a.x))
                  for (auto M : axis(a.M)) {
                    ParPoint pt{n1, n2, P, p1, p2, b, M, xm, seed};
                    bool ok = false;
                    out.push_back(simulate_par(a, pt, ok));
                    all_ok = all_ok && ok;
                  }
      }
  std::cout << (a.sweep ? out.dump(2) : out.front().dump(2)) << "\n";
  return all_ok ? 0 : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symtb: triangle block partitions, communication bounds and cost simulations for SYRK/SYR2K/SYMM"};
  app.require_subcommand(1);
  const std::vector<std::string> kernels{"syrk", "syr2k", "symm"};

  // partition
  auto* part = app.add_subcommand("partition", "generate or check a triangle block partition");
  part->require_subcommand(1);
  auto* gen = part->add_subcommand("gen", "build an affine or projective partition");
  std::string kind = "affine", out_path, format = "text";
  int c = 0;
  bool diagonals = false;
  gen->add_option("--kind", kind, "affine or projective")->check(CLI::IsMember({"affine", "projective"}));
  gen->add_option("--c", c, "prime power field order")->required();
  gen->add_flag("--diagonals", diagonals, "assign diagonal indices by matching");
  gen->add_option("--out", out_path, "write to a file instead of stdout");
  gen->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  auto* check = part->add_subcommand("check", "validate a partition file");
  std::string check_path;
  check->add_option("--file", check_path, "partition file")->required();

  // bounds
  auto* bnd = app.add_subcommand("bounds", "evaluate the lower bounds");
  std::string b_kernel;
  double b_n1 = 0, b_n2 = 0;
  std::optional<double> b_M, b_P;
  bnd->add_option("--kernel", b_kernel)->required()->check(CLI::IsMember(kernels));
  bnd->add_option("--n1", b_n1)->required()->check(CLI::PositiveNumber);
  bnd->add_option("--n2", b_n2)->required()->check(CLI::PositiveNumber);
  bnd->add_option("--M", b_M, "fast/local memory in words")->check(CLI::PositiveNumber);
  bnd->add_option("--P", b_P, "processors")->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run the sequential or parallel simulator");
  sim->require_subcommand(1);
  SimArgs sa;
  auto add_sim = [&](CLI::App* s, bool par) {
    s->add_option("--kernel", sa.kernel)->check(CLI::IsMember(kernels));
    s->add_option("--n1", sa.n1)->delimiter(',');
    s->add_option("--n2", sa.n2)->delimiter(',');
    s->add_option("--M", sa.M, par ? "local memory cap" : "fast memory")->delimiter(',');
    s->add_option("--seed", sa.seed)->delimiter(',');
    s->add_option("--csv", sa.csv, "append one row per run");
    s->add_option("--dump", sa.dump, "write the operands to a binary file");
    s->add_option("--load", sa.load, "read operands from a binary file");
    s->add_flag("--sweep", sa.sweep, "take the cartesian product of comma lists");
    if (!par) return;
    s->add_option("--P", sa.P)->delimiter(',');
    s->add_option("--algo", sa.algo)->check(CLI::IsMember({"1d", "2d", "3d", "3d-lim"}));
    s->add_option("--p1", sa.p1)->delimiter(',');
    s->add_option("--p2", sa.p2)->delimiter(',');
    s->add_option("--b", sa.b)->delimiter(',');
    s->add_option("--x", sa.x, "memory multiplier for 3d-lim")->delimiter(',');
    s->add_option("--alpha", sa.alpha);
    s->add_option("--beta", sa.beta);
    s->add_option("--gamma", sa.gamma);
  };
  auto* sim_seq = sim->add_subcommand("seq", "two-level memory simulation");
  add_sim(sim_seq, false);
  auto* sim_par = sim->add_subcommand("par", "distributed-memory simulation");
  add_sim(sim_par, true);

  // grid
  auto* grid = app.add_subcommand("grid", "choose algorithm family and processor grid");
  std::string g_kernel;
  double g_n1 = 0, g_n2 = 0;
  int g_P = 0;
  std::optional<double> g_x;
  grid->add_option("--kernel", g_kernel)->required()->check(CLI::IsMember(kernels));
  grid->add_option("--n1", g_n1)->required()->check(CLI::PositiveNumber);
  grid->add_option("--n2", g_n2)->required()->check(CLI::PositiveNumber);
  grid->add_option("--P", g_P)->required()->check(CLI::PositiveNumber);
  grid->add_option("--x", g_x, "memory multiplier for limited-memory parameters")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*gen) {
      auto p = kind == "affine" ? tbp::affine_partition(c) : tbp::projective_partition(c);
      if (diagonals) p = tbp::assign_diagonals(std::move(p));
      const std::string text = format == "json" ? symtb::to_json(p).dump(2) + "\n" : tbp::serialize(p);
      if (out_path.empty()) std::cout << text;
      else write_file(out_path, text);
      return 0;
    }
    if (*check) {
      try {
        const auto p = tbp::load_steiner(read_file(check_path), check_path);
        std::cout << "ok: n=" << p.n << " r=" << p.r << " K=" << p.K << (p.has_diagonals() ? " with diagonals" : "")
                  << "\n";
        return 0;
      } catch (const SteinerError& e) {
        std::cout << "invalid: " << e.what() << "\n";
        return kFailure;
      }
    }
    if (*bnd) {
      const auto s = bounds::shape(parse_kernel(b_kernel), b_n1, b_n2);
      ordered_json j;
      j["params"] = {{"kernel", b_kernel}, {"n1", b_n1}, {"n2", b_n2}};
      if (b_M) j["params"]["M"] = *b_M;
      if (b_P) j["params"]["P"] = *b_P;
      if (b_M) j["seq_lb"] = bounds::seq_read_lb(s, *b_M);
      if (b_M && b_P) j["par_memdep_lb"] = bounds::par_memdep_lb(s, *b_P, *b_M);
      j["memindep"] = symtb::memindep_json(s, b_P.value_or(1));
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*sim_seq) return run_simulate("seq", sa);
    if (*sim_par) return run_simulate("par", sa);
    if (*grid) {
      const auto s = bounds::shape(parse_kernel(g_kernel), g_n1, g_n2);
      auto j = symtb::to_json(gridopt::select_grid(s, g_P));
      if (g_x) {
        const auto lp = gridopt::limited_params(g_P, *g_x, static_cast<int>(g_n1));
        j["limited"] = {{"p1", lp.p1}, {"p2", lp.p2}, {"c", lp.c}, {"b", lp.b}};
      }
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
