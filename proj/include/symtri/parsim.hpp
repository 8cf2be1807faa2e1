#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gf.hpp"
#include "matrix.hpp"
#include "rational.hpp"
#include "tbp.hpp"

namespace symtri::parsim {

enum class Algo { OneD, TwoD, ThreeD, ThreeDLimited };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::OneD: return "1d";
    case Algo::TwoD: return "2d";
    case Algo::ThreeD: return "3d";
    case Algo::ThreeDLimited: return "3d-lim";
  }
  return "?";
}

inline Algo parse_algo(const std::string& s) {
  if (s == "1d") return Algo::OneD;
  if (s == "2d") return Algo::TwoD;
  if (s == "3d") return Algo::ThreeD;
  if (s == "3d-lim" || s == "3d-limited") return Algo::ThreeDLimited;
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + s + "'");
}

struct MachineSpec {
  int p1 = 1;
  int p2 = 1;
  std::optional<long> M;  // local memory cap in words
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;

  int P() const { return p1 * p2; }
};

// c with c(c+1) = p1 for a prime power c, or 0.
inline int grid_c(int p1) {
  for (int c = 2; c * (c + 1) <= p1; ++c)
    if (c * (c + 1) == p1 && gf::is_prime_power(c)) return c;
  return 0;
}

struct RankCost {
  Rational words_sent;
  Rational words_received;
  Rational flops;
  long messages = 0;
  long peak_memory = 0;
  long owned_words = 0;
};

struct PhaseRecord {
  std::string name;
  double time = 0;  // max over ranks of alpha*msg + beta*words + gamma*flops
};

class CostLedger {
 public:
  CostLedger() = default;
  CostLedger(int P, double alpha, double beta, double gamma)
      : ranks(P), alpha_(alpha), beta_(beta), gamma_(gamma), delta_(P) {}

  std::vector<RankCost> ranks;
  std::vector<PhaseRecord> phases;
  double time = 0;

  void charge_messages(int r, long n) {
    ranks[r].messages += n;
    delta_[r].messages += n;
  }
  void charge_words(int r, const Rational& sent, const Rational& received) {
    ranks[r].words_sent += sent;
    ranks[r].words_received += received;
    delta_[r].words_received += received;
  }
  void charge_flops(int r, const Rational& f) {
    ranks[r].flops += f;
    delta_[r].flops += f;
  }

  // Closes the current superstep: its cost is the slowest rank's.
  void end_phase(const std::string& name) {
    double worst = 0;
    for (auto& d : delta_) {
      worst = std::max(worst, alpha_ * d.messages + beta_ * d.words_received.to_double() + gamma_ * d.flops.to_double());
      d = RankCost{};
    }
    phases.push_back({name, worst});
    time += worst;
  }

  Rational max_words_received() const { return reduce([](const RankCost& r) { return r.words_received; }); }
  Rational max_words_sent() const { return reduce([](const RankCost& r) { return r.words_sent; }); }
  Rational max_flops() const { return reduce([](const RankCost& r) { return r.flops; }); }
  long max_messages() const {
    long m = 0;
    for (const auto& r : ranks) m = std::max(m, r.messages);
    return m;
  }
  long max_peak_memory() const {
    long m = 0;
    for (const auto& r : ranks) m = std::max(m, r.peak_memory);
    return m;
  }
  Rational total_sent() const {
    Rational s;
    for (const auto& r : ranks) s += r.words_sent;
    return s;
  }
  Rational total_received() const {
    Rational s;
    for (const auto& r : ranks) s += r.words_received;
    return s;
  }

 private:
  template <class F>
  Rational reduce(F f) const {
    Rational m;
    for (const auto& r : ranks) m = max(m, f(r));
    return m;
  }
  double alpha_ = 1, beta_ = 1, gamma_ = 1;
  std::vector<RankCost> delta_;
};

enum class CollectiveKind { AllToAll, ReduceScatter, AllGather };

// Pairwise-exchange cost: G-1 messages and (1-1/G) n words each way per
// member; a reduce-scatter also performs (1-1/G) n additions.
inline void collective(CostLedger& ledger, CollectiveKind kind, const std::vector<int>& group, long n) {
  if (group.empty()) throw Error(ErrorKind::GroupEmpty, "collective over an empty group");
  const long G = static_cast<long>(group.size());
  const Rational words(n * (G - 1), G);
  for (int r : group) {
    ledger.charge_messages(r, G - 1);
    ledger.charge_words(r, words, words);
    if (kind == CollectiveKind::ReduceScatter) ledger.charge_flops(r, words);
  }
}

// Which rank holds each element of one matrix, and where in its local store.
struct Ownership {
  std::vector<int> owner;
  std::vector<int> slot;
  std::vector<std::vector<std::size_t>> elems;  // per rank, in slot order
  long duplicates = 0;

  void init(std::size_t n, int P) {
    owner.assign(n, -1);
    slot.assign(n, -1);
    elems.assign(P, {});
    duplicates = 0;
  }
  void give(int rank, std::size_t g) {
    if (owner[g] >= 0) {
      ++duplicates;
      return;
    }
    owner[g] = rank;
    slot[g] = static_cast<int>(elems[rank].size());
    elems[rank].push_back(g);
  }
  bool covers_all() const {
    return duplicates == 0 && std::all_of(owner.begin(), owner.end(), [](int o) { return o >= 0; });
  }
};

struct Entry {
  int r, s;    // global row/column, r >= s
  int pr, ps;  // positions of rows r and s in the owning rank's row-block buffer
};

struct Distribution {
  Algo algo = Algo::OneD;
  int P = 1, p1 = 1, p2 = 1;
  int c = 0, h = 0;   // 2D/3D: field order and rows per row block
  int w = 0;          // columns per slice (1D: per rank)
  int b = 0;          // columns per step
  int steps = 1;
  tbp::TrianglePartition partition;
  tbp::QMap Q;
  std::vector<std::vector<Entry>> T;  // per k, canonical packed order
  Ownership A, B, sym, C;             // unused matrices stay empty

  int rank(int k, int l) const { return k + l * p1; }

  // Every real element of every operand is held by exactly one rank.
  bool one_copy(const KernelInstance& x) const {
    auto ok = [](const Ownership& o, std::size_t n) { return o.owner.size() == n && o.covers_all(); };
    if (!ok(sym, x.sym.size())) return false;
    if (x.kernel != Kernel::SYMM && !ok(A, x.A.size())) return false;
    if (x.kernel != Kernel::SYRK && !ok(B, x.B.size())) return false;
    if (x.kernel == Kernel::SYMM && !ok(C, x.C.size())) return false;
    return true;
  }
};

namespace detail {

inline int ceil_div(int a, int b) { return (a + b - 1) / b; }

// Sizes of n items split into parts contiguous pieces, earlier ones larger.
inline std::vector<int> split_sizes(long n, int parts) {
  std::vector<int> s(parts, static_cast<int>(n / parts));
  for (int q = 0; q < n % parts; ++q) ++s[q];
  return s;
}

// Fixed recursive-halving order over ranks.
inline double tree_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return v[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return tree_sum(v, lo, mid) + tree_sum(v, mid, hi);
}

struct StepCols {
  int j0, j1;
  int n() const { return j1 - j0; }
};

inline StepCols step_cols(const Distribution& d, int n2, int l, int t) {
  const int s0 = l * d.w, s1 = std::min(n2, (l + 1) * d.w);
  const int j0 = std::min(s1, s0 + t * d.b), j1 = std::min(s1, s0 + (t + 1) * d.b);
  return {std::max(j0, 0), std::max(j1, j0)};
}

inline int block_rows(const Distribution& d, int n1, int i) {
  return std::max(0, std::min(n1, (i + 1) * d.h) - i * d.h);
}

// Visits the row-block chunk (i, cols) flattened column-major, split over Q_i.
template <class F>
void for_chunk_parts(const Distribution& d, int n1, int n2, int i, StepCols sc, F f) {
  const int rows = block_rows(d, n1, i);
  const long S = static_cast<long>(rows) * sc.n();
  const auto sizes = split_sizes(S, d.c + 1);
  long e = 0;
  for (int q = 0; q <= d.c; ++q)
    for (int t = 0; t < sizes[q]; ++t, ++e) {
      const int j = sc.j0 + static_cast<int>(e / rows);
      const int r = i * d.h + static_cast<int>(e % rows);
      f(q, r, j, static_cast<std::size_t>(r) * n2 + j);
    }
}

inline long max_part(const Distribution& d, int n1, StepCols sc) {
  long m = 0;
  for (int i = 0; i < d.c * d.c; ++i) m = std::max(m, static_cast<long>(ceil_div(block_rows(d, n1, i) * sc.n(), d.c + 1)));
  return m;
}

}  // namespace detail

// Builds the initial placement. For 2D/3D spec.p1 must be c(c+1); b is
// the column step (0 means a whole slice per step).
inline Distribution distribute(const KernelInstance& x, const MachineSpec& spec, Algo algo, int b = 0) {
  x.check();
  Distribution d;
  d.algo = algo;
  const int n1 = x.n1, n2 = x.n2;
  if (spec.p1 < 1 || spec.p2 < 1) throw Error(ErrorKind::InfeasibleGrid, "grid dimensions must be positive");

  if (algo == Algo::OneD) {
    d.P = d.p2 = spec.P();
    d.p1 = 1;
    d.w = std::max(1, detail::ceil_div(n2, d.P));
    d.b = d.w;
    d.sym.init(x.sym.size(), d.P);
    const auto parts = detail::split_sizes(static_cast<long>(x.sym.size()), d.P);
    std::size_t g = 0;
    for (int r = 0; r < d.P; ++r)
      for (int t = 0; t < parts[r]; ++t) d.sym.give(r, g++);
    auto columns = [&](Ownership& o) {
      o.init(static_cast<std::size_t>(n1) * n2, d.P);
      for (int r = 0; r < d.P; ++r)
        for (int i = 0; i < n1; ++i)
          for (int j = r * d.w; j < std::min(n2, (r + 1) * d.w); ++j) o.give(r, static_cast<std::size_t>(i) * n2 + j);
    };
    if (x.kernel != Kernel::SYMM) columns(d.A);
    if (x.kernel != Kernel::SYRK) columns(d.B);
    if (x.kernel == Kernel::SYMM) columns(d.C);
    return d;
  }

  d.c = grid_c(spec.p1);
  if (d.c == 0) throw Error(ErrorKind::InfeasibleGrid, "p1=" + std::to_string(spec.p1) + " is not c(c+1) for a prime power c");
  if (algo == Algo::TwoD && spec.p2 != 1) throw Error(ErrorKind::InfeasibleGrid, "2D algorithms need p2 = 1");
  d.p1 = spec.p1;
  d.p2 = spec.p2;
  d.P = d.p1 * d.p2;
  const int c = d.c, c2 = c * c;
  d.h = detail::ceil_div(n1, c2);
  d.w = std::max(1, detail::ceil_div(n2, d.p2));
  d.b = (algo == Algo::ThreeDLimited && b > 0) ? std::min(b, d.w) : d.w;
  d.steps = detail::ceil_div(d.w, d.b);
  d.partition = tbp::assign_diagonals(tbp::affine_partition(c));
  d.Q = tbp::q_sets(d.partition);

  // Extended triangle block of each k, in packed order.
  d.T.assign(d.p1, {});
  for (int k = 0; k < d.p1; ++k) {
    const auto& R = d.partition.R[k];
    auto& Tk = d.T[k];
    for (int a = 0; a < c; ++a)
      for (int bb = 0; bb <= a; ++bb) {
        const int ia = R[a], ib = R[bb];
        const bool diag = a == bb;
        if (diag && (d.partition.D[k].empty() || d.partition.D[k].front() != ia)) continue;
        for (int rr = 0; rr < detail::block_rows(d, n1, ia); ++rr)
          for (int ss = 0; ss < detail::block_rows(d, n1, ib); ++ss) {
            if (diag && ss > rr) continue;
            Tk.push_back({ia * d.h + rr, ib * d.h + ss, a * d.h + rr, bb * d.h + ss});
          }
      }
    std::sort(Tk.begin(), Tk.end(), [](const Entry& u, const Entry& v) {
      return SymMatrix::index(u.r, u.s) < SymMatrix::index(v.r, v.s);
    });
  }

  d.sym.init(x.sym.size(), d.P);
  for (int k = 0; k < d.p1; ++k) {
    const auto parts = detail::split_sizes(static_cast<long>(d.T[k].size()), d.p2);
    std::size_t e = 0;
    for (int l = 0; l < d.p2; ++l)
      for (int t = 0; t < parts[l]; ++t, ++e) d.sym.give(d.rank(k, l), SymMatrix::index(d.T[k][e].r, d.T[k][e].s));
  }
  auto rows = [&](Ownership& o) {
    o.init(static_cast<std::size_t>(n1) * n2, d.P);
    for (int l = 0; l < d.p2; ++l)
      for (int t = 0; t < d.steps; ++t) {
        const auto sc = detail::step_cols(d, n2, l, t);
        for (int i = 0; i < c2; ++i)
          detail::for_chunk_parts(d, n1, n2, i, sc, [&](int q, int, int, std::size_t g) { o.give(d.rank(d.Q[i][q], l), g); });
      }
  };
  if (x.kernel != Kernel::SYMM) rows(d.A);
  if (x.kernel != Kernel::SYRK) rows(d.B);
  if (x.kernel == Kernel::SYMM) rows(d.C);
  return d;
}

struct ParResult {
  KernelInstance out;
  CostLedger ledger;
  Distribution dist;
  bool one_copy_start = false;
  bool one_copy_end = false;
};

namespace detail {

// Per-rank local stores for one matrix, filled from the global operand.
struct Stores {
  const Ownership* own = nullptr;
  std::vector<std::vector<double>> v;

  void scatter(const Ownership& o, const std::vector<double>& global) {
    own = &o;
    v.assign(o.elems.size(), {});
    for (std::size_t r = 0; r < o.elems.size(); ++r) {
      v[r].reserve(o.elems[r].size());
      for (auto g : o.elems[r]) v[r].push_back(global[g]);
    }
  }
  // Reading another rank's element is only legal inside a collective.
  double& at(int rank, std::size_t g) {
    if (own->owner[g] != rank) throw Error(ErrorKind::InvalidArgument, "rank reads an element it does not own");
    return v[rank][own->slot[g]];
  }
  void gather(std::vector<double>& global) const {
    for (std::size_t r = 0; r < v.size(); ++r)
      for (std::size_t t = 0; t < v[r].size(); ++t) global[own->elems[r][t]] = v[r][t];
  }
  long count(int rank) const { return static_cast<long>(v[rank].size()); }
};

inline void finish(ParResult& res, const MachineSpec& spec, const std::vector<long>& temp_peak,
                   const std::vector<long>& owned) {
  for (std::size_t r = 0; r < owned.size(); ++r) {
    res.ledger.ranks[r].owned_words = owned[r];
    res.ledger.ranks[r].peak_memory = owned[r] + temp_peak[r];
    if (spec.M && res.ledger.ranks[r].peak_memory > *spec.M)
      throw Error(ErrorKind::MemoryOverflow, "rank " + std::to_string(r) + " needs " +
                                                 std::to_string(res.ledger.ranks[r].peak_memory) + " words, cap is " +
                                                 std::to_string(*spec.M));
  }
}

}  // namespace detail

inline ParResult run_1d(KernelInstance x, const MachineSpec& spec) {
  ParResult res;
  res.dist = distribute(x, spec, Algo::OneD);
  const auto& d = res.dist;
  const int P = d.P, n1 = x.n1, n2 = x.n2;
  res.ledger = CostLedger(P, spec.alpha, spec.beta, spec.gamma);
  res.one_copy_start = d.one_copy(x);
  const long T = static_cast<long>(x.sym.size());
  std::vector<int> all(P);
  for (int r = 0; r < P; ++r) all[r] = r;

  detail::Stores A, B, S, C;
  S.scatter(d.sym, x.sym.data());
  if (x.kernel != Kernel::SYMM) A.scatter(d.A, x.A.data());
  if (x.kernel != Kernel::SYRK) B.scatter(d.B, x.B.data());
  if (x.kernel == Kernel::SYMM) C.scatter(d.C, x.C.data());
  std::vector<long> owned(P, 0), temp(P, T);
  for (int r = 0; r < P; ++r)
    owned[r] = S.count(r) + (A.own ? A.count(r) : 0) + (B.own ? B.count(r) : 0) + (C.own ? C.count(r) : 0);
  auto cols = [&](int r) { return std::make_pair(std::min(n2, r * d.w), std::min(n2, (r + 1) * d.w)); };
  auto gidx = [&](int i, int j) { return static_cast<std::size_t>(i) * n2 + j; };

  if (x.kernel != Kernel::SYMM) {
    const bool two = x.kernel == Kernel::SYR2K;
    std::vector<std::vector<double>> cbar(P, std::vector<double>(T, 0.0));
    for (int r = 0; r < P; ++r) {
      const auto [j0, j1] = cols(r);
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j <= i; ++j) {
          double v = 0;
          for (int k = j0; k < j1; ++k) {
            if (two)
              v += A.at(r, gidx(i, k)) * B.at(r, gidx(j, k)) + B.at(r, gidx(i, k)) * A.at(r, gidx(j, k));
            else
              v += A.at(r, gidx(i, k)) * A.at(r, gidx(j, k));
          }
          cbar[r][SymMatrix::index(i, j)] = v;
        }
      res.ledger.charge_flops(r, Rational(static_cast<long>(two ? 4 : 2) * T * (j1 - j0)));
    }
    res.ledger.end_phase("local update");
    collective(res.ledger, CollectiveKind::ReduceScatter, all, T);
    std::vector<double> vals(P);
    for (int r = 0; r < P; ++r)
      for (auto g : d.sym.elems[r]) {
        for (int q = 0; q < P; ++q) vals[q] = cbar[q][g];
        S.at(r, g) += detail::tree_sum(vals, 0, P);
      }
    res.ledger.end_phase("reduce-scatter");
  } else {
    collective(res.ledger, CollectiveKind::AllGather, all, T);
    res.ledger.end_phase("all-gather");
    std::vector<double> Afull(T);
    S.gather(Afull);  // every rank now holds this copy
    for (int r = 0; r < P; ++r) {
      const auto [j0, j1] = cols(r);
      auto a = [&](int i, int j) { return Afull[SymMatrix::index(i, j)]; };
      for (int i = 0; i < n1; ++i)
        for (int j = 0; j < i; ++j)
          for (int k = j0; k < j1; ++k) {
            C.at(r, gidx(i, k)) += a(i, j) * B.at(r, gidx(j, k));
            C.at(r, gidx(j, k)) += a(i, j) * B.at(r, gidx(i, k));
          }
      for (int i = 0; i < n1; ++i)
        for (int k = j0; k < j1; ++k) C.at(r, gidx(i, k)) += a(i, i) * B.at(r, gidx(i, k));
      res.ledger.charge_flops(r, Rational(2L * n1 * n1 * (j1 - j0)));
    }
    res.ledger.end_phase("local update");
  }

  if (x.kernel == Kernel::SYMM) C.gather(x.C.data());
  else S.gather(x.sym.data());
  detail::finish(res, spec, temp, owned);
  res.one_copy_end = d.one_copy(x);
  res.out = std::move(x);
  return res;
}

namespace detail {

inline ParResult run_grid(KernelInstance x, const MachineSpec& spec, Algo algo, int b) {
  ParResult res;
  res.dist = distribute(x, spec, algo, b);
  const auto& d = res.dist;
  const int n1 = x.n1, n2 = x.n2, c = d.c, p1 = d.p1, p2 = d.p2, P = d.P;
  res.ledger = CostLedger(P, spec.alpha, spec.beta, spec.gamma);
  auto& L = res.ledger;
  res.one_copy_start = d.one_copy(x);

  Stores A, B, S, C;
  S.scatter(d.sym, x.sym.data());
  if (x.kernel != Kernel::SYMM) A.scatter(d.A, x.A.data());
  if (x.kernel != Kernel::SYRK) B.scatter(d.B, x.B.data());
  if (x.kernel == Kernel::SYMM) C.scatter(d.C, x.C.data());
  std::vector<long> owned(P, 0), temp(P, 0);
  for (int r = 0; r < P; ++r)
    owned[r] = S.count(r) + (A.own ? A.count(r) : 0) + (B.own ? B.count(r) : 0) + (C.own ? C.count(r) : 0);

  auto slice_group = [&](int l) {
    std::vector<int> g(p1);
    for (int k = 0; k < p1; ++k) g[k] = d.rank(k, l);
    return g;
  };
  auto fiber_group = [&](int k) {
    std::vector<int> g(p2);
    for (int l = 0; l < p2; ++l) g[l] = d.rank(k, l);
    return g;
  };
  auto pos_of = [&](int k, int i) {
    const auto& R = d.partition.R[k];
    return static_cast<int>(std::lower_bound(R.begin(), R.end(), i) - R.begin());
  };
  const int buf_rows = c * d.h;

  // Assembles the row blocks R_k x step columns of one operand for rank (k, l).
  auto assemble = [&](Stores& M, int k, int l, StepCols sc, std::vector<double>& buf) {
    buf.assign(static_cast<std::size_t>(buf_rows) * sc.n(), 0.0);
    for (int a = 0; a < c; ++a) {
      const int i = d.partition.R[k][a];
      for_chunk_parts(d, n1, n2, i, sc, [&](int q, int r, int j, std::size_t g) {
        buf[static_cast<std::size_t>(a * d.h + r - i * d.h) * sc.n() + (j - sc.j0)] = M.at(d.rank(d.Q[i][q], l), g);
      });
    }
  };

  // Ranks hold whole extended triangle blocks during the slice loop: gathered
  // A for SYMM, the partial C for SYRK/SYR2K.
  std::vector<std::vector<double>> Tfull(P);
  auto tk_part = [&](int k) { return split_sizes(static_cast<long>(d.T[k].size()), p2); };

  if (x.kernel == Kernel::SYMM) {
    for (int k = 0; k < p1; ++k) collective(L, CollectiveKind::AllGather, fiber_group(k), static_cast<long>(d.T[k].size()));
    for (int k = 0; k < p1; ++k) {
      std::vector<double> full;
      full.reserve(d.T[k].size());
      const auto parts = tk_part(k);
      std::size_t e = 0;
      for (int l = 0; l < p2; ++l)
        for (int t = 0; t < parts[l]; ++t, ++e)
          full.push_back(S.at(d.rank(k, l), SymMatrix::index(d.T[k][e].r, d.T[k][e].s)));
      for (int l = 0; l < p2; ++l) Tfull[d.rank(k, l)] = full;
    }
    if (p2 > 1) L.end_phase("all-gather");
  } else {
    for (int k = 0; k < p1; ++k)
      for (int l = 0; l < p2; ++l) {
        auto& tf = Tfull[d.rank(k, l)];
        if (p2 == 1) {
          for (const auto& e : d.T[k]) tf.push_back(S.at(d.rank(k, 0), SymMatrix::index(e.r, e.s)));
        } else {
          tf.assign(d.T[k].size(), 0.0);
        }
      }
  }
  if (p2 > 1)
    for (int k = 0; k < p1; ++k)
      for (int l = 0; l < p2; ++l) temp[d.rank(k, l)] = static_cast<long>(d.T[k].size());

  const int m = x.m();
  const bool two = x.kernel == Kernel::SYR2K;
  std::vector<std::vector<double>> bufA(P), bufB(P), work(P);
  for (int t = 0; t < d.steps; ++t) {
    for (int l = 0; l < p2; ++l) {
      const auto sc = step_cols(d, n2, l, t);
      const auto group = slice_group(l);
      const long n = static_cast<long>(p1) * max_part(d, n1, sc);
      for (int rep = 0; rep < (x.kernel == Kernel::SYRK ? 1 : 2) - (x.kernel == Kernel::SYMM ? 1 : 0); ++rep)
        collective(L, CollectiveKind::AllToAll, group, n);
      for (int k = 0; k < p1; ++k) {
        const int r = d.rank(k, l);
        if (x.kernel == Kernel::SYMM) {
          assemble(B, k, l, sc, bufB[r]);
        } else {
          assemble(A, k, l, sc, bufA[r]);
          if (two) assemble(B, k, l, sc, bufB[r]);
        }
      }
    }
    L.end_phase("all-to-all");

    for (int l = 0; l < p2; ++l) {
      const auto sc = step_cols(d, n2, l, t);
      const int nb = sc.n();
      for (int k = 0; k < p1; ++k) {
        const int r = d.rank(k, l);
        auto& tf = Tfull[r];
        long fl = 0;
        if (x.kernel == Kernel::SYMM) {
          auto& Cw = work[r];
          Cw.assign(static_cast<std::size_t>(buf_rows) * nb, 0.0);
          const auto& Bb = bufB[r];
          for (std::size_t e = 0; e < d.T[k].size(); ++e) {
            const auto& en = d.T[k][e];
            const double a = tf[e];
            double* cr = &Cw[static_cast<std::size_t>(en.pr) * nb];
            const double* bs = &Bb[static_cast<std::size_t>(en.ps) * nb];
            for (int j = 0; j < nb; ++j) cr[j] += a * bs[j];
            if (en.r != en.s) {
              double* cs = &Cw[static_cast<std::size_t>(en.ps) * nb];
              const double* br = &Bb[static_cast<std::size_t>(en.pr) * nb];
              for (int j = 0; j < nb; ++j) cs[j] += a * br[j];
              fl += 4L * nb;
            } else {
              fl += 2L * nb;
            }
          }
          long own_c = 0;
          for (int a = 0; a < c; ++a) {
            const int i = d.partition.R[k][a];
            for_chunk_parts(d, n1, n2, i, sc, [&](int q, int, int, std::size_t) { own_c += d.Q[i][q] == k; });
          }
          temp[r] = std::max(temp[r], (p2 > 1 ? static_cast<long>(d.T[k].size()) : 0L) +
                                          2L * static_cast<long>(Cw.size()) + own_c);
        } else {
          const auto& Ab = bufA[r];
          const auto& Bb = bufB[r];
          for (std::size_t e = 0; e < d.T[k].size(); ++e) {
            const auto& en = d.T[k][e];
            const double* ar = &Ab[static_cast<std::size_t>(en.pr) * nb];
            const double* as = &Ab[static_cast<std::size_t>(en.ps) * nb];
            double v = tf[e];
            if (two) {
              const double* br = &Bb[static_cast<std::size_t>(en.pr) * nb];
              const double* bs = &Bb[static_cast<std::size_t>(en.ps) * nb];
              for (int j = 0; j < nb; ++j) v += ar[j] * bs[j] + br[j] * as[j];
            } else {
              for (int j = 0; j < nb; ++j) v += ar[j] * as[j];
            }
            tf[e] = v;
          }
          fl = (two ? 4L : 2L) * nb * static_cast<long>(d.T[k].size());
          temp[r] = std::max(temp[r], (p2 > 1 ? static_cast<long>(d.T[k].size()) : 0L) +
                                          static_cast<long>(m) * buf_rows * nb);
        }
        L.charge_flops(r, Rational(fl));
      }
    }
    L.end_phase("local update");

    if (x.kernel == Kernel::SYMM) {
      for (int l = 0; l < p2; ++l) {
        const auto sc = step_cols(d, n2, l, t);
        collective(L, CollectiveKind::AllToAll, slice_group(l), static_cast<long>(p1) * max_part(d, n1, sc));
        const int nb = sc.n();
        for (int i = 0; i < c * c; ++i) {
          const auto& Qi = d.Q[i];
          for_chunk_parts(d, n1, n2, i, sc, [&](int q, int rr, int j, std::size_t g) {
            const int target = d.rank(Qi[q], l);
            auto from = [&](int k) {
              const std::size_t row = static_cast<std::size_t>(pos_of(k, i) * d.h + rr - i * d.h);
              return work[d.rank(k, l)][row * nb + (j - sc.j0)];
            };
            double v = from(Qi[q]);
            double& own = C.at(target, g);
            v += own;
            for (int qq = 0; qq <= c; ++qq)
              if (qq != q) v += from(Qi[qq]);
            own = v;
            L.charge_flops(target, Rational(c + 1));
          });
        }
      }
      L.end_phase("all-to-all");
    }
  }

  if (x.kernel != Kernel::SYMM) {
    if (p2 > 1) {
      for (int k = 0; k < p1; ++k) {
        collective(L, CollectiveKind::ReduceScatter, fiber_group(k), static_cast<long>(d.T[k].size()));
        const auto parts = tk_part(k);
        std::size_t e = 0;
        std::vector<double> vals(p2);
        for (int l = 0; l < p2; ++l)
          for (int q = 0; q < parts[l]; ++q, ++e) {
            for (int ll = 0; ll < p2; ++ll) vals[ll] = Tfull[d.rank(k, ll)][e];
            S.at(d.rank(k, l), SymMatrix::index(d.T[k][e].r, d.T[k][e].s)) += tree_sum(vals, 0, p2);
          }
      }
      L.end_phase("reduce-scatter");
    } else {
      for (int k = 0; k < p1; ++k)
        for (std::size_t e = 0; e < d.T[k].size(); ++e)
          S.at(d.rank(k, 0), SymMatrix::index(d.T[k][e].r, d.T[k][e].s)) = Tfull[d.rank(k, 0)][e];
    }
    S.gather(x.sym.data());
  } else {
    C.gather(x.C.data());
  }
  finish(res, spec, temp, owned);
  res.one_copy_end = d.one_copy(x);
  res.out = std::move(x);
  return res;
}

}  // namespace detail

inline ParResult run_2d(KernelInstance x, const MachineSpec& spec) {
  return detail::run_grid(std::move(x), spec, Algo::TwoD, 0);
}

inline ParResult run_3d(KernelInstance x, const MachineSpec& spec) {
  return detail::run_grid(std::move(x), spec, Algo::ThreeD, 0);
}

// Processes b columns of each slice per step; b >= n2/p2 is the plain 3D run.
inline ParResult run_3d_limited(KernelInstance x, const MachineSpec& spec, int b) {
  if (b < 1) throw Error(ErrorKind::InvalidArgument, "b must be at least 1");
  return detail::run_grid(std::move(x), spec, Algo::ThreeDLimited, b);
}

inline ParResult run(KernelInstance x, const MachineSpec& spec, Algo algo, int b = 0) {
  switch (algo) {
    case Algo::OneD: return run_1d(std::move(x), spec);
    case Algo::TwoD: return run_2d(std::move(x), spec);
    case Algo::ThreeD: return run_3d(std::move(x), spec);
    case Algo::ThreeDLimited: return run_3d_limited(std::move(x), spec, b);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm");
}

}  // namespace symtri::parsim
