#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gf.hpp"
#include "matrix.hpp"
#include "tbp.hpp"

namespace symtri::seqsim {

enum class Mode { Elementwise, Chunked, Streaming };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Elementwise: return "elementwise";
    case Mode::Chunked: return "chunked";
    case Mode::Streaming: return "streaming";
  }
  return "?";
}

struct BlockingPlan {
  Mode mode = Mode::Elementwise;
  int r = 0;      // elementwise block size
  int c = 0;      // field order behind the partition (0 for loaded / streaming)
  int g = 1;      // rows per chunk (chunked)
  int n_hat = 0;  // padded symmetric dimension
  tbp::TrianglePartition partition;  // with diagonals; unused in streaming mode

  // Rows of one non-symmetric column loaded per real row, i.e. |Q_i|.
  double replication() const {
    switch (mode) {
      case Mode::Elementwise: return static_cast<double>(n_hat - 1) / (r - 1);
      case Mode::Chunked: return c + 1;
      case Mode::Streaming: return 1;
    }
    return 0;
  }
};

inline int select_r(long M, int m) {
  return static_cast<int>(std::floor(std::sqrt(2.0 * M + static_cast<double>(m) * m) - m + 1e-12));
}

// Footprint of one elementwise block including its diagonal.
inline long elementwise_footprint(int r, int m) { return static_cast<long>(r) * (r - 1) / 2 + 1 + static_cast<long>(m) * r; }

inline long chunked_footprint(int c, int g, int m) {
  return static_cast<long>(g) * g * c * (c - 1) / 2 + static_cast<long>(g) * (g + 1) / 2 + static_cast<long>(m) * c * g;
}

inline long streaming_footprint(int n1, int m) { return static_cast<long>(n1) * (n1 + 1) / 2 + static_cast<long>(m) * n1; }

inline BlockingPlan elementwise_plan(tbp::TrianglePartition p) {
  if (!p.has_diagonals()) p = tbp::assign_diagonals(std::move(p));
  BlockingPlan plan;
  plan.mode = Mode::Elementwise;
  plan.r = p.r;
  plan.c = p.origin.c;
  plan.n_hat = p.n;
  plan.partition = std::move(p);
  return plan;
}

inline BlockingPlan chunked_plan(int c, int n1) {
  BlockingPlan plan;
  plan.mode = Mode::Chunked;
  plan.c = c;
  plan.r = c;
  plan.g = (n1 + c * c - 1) / (c * c);
  plan.n_hat = c * c * plan.g;
  plan.partition = tbp::assign_diagonals(tbp::affine_partition(c));
  return plan;
}

inline BlockingPlan streaming_plan(int n1) {
  BlockingPlan plan;
  plan.mode = Mode::Streaming;
  plan.r = n1;
  plan.n_hat = n1;
  return plan;
}

// Streaming when the whole triangle fits with one column of each operand.
// Otherwise an unpadded plane partition with r <= select_r, then the cheapest
// padded plane or chunked plan (fewest rows loaded per column; ties prefer
// elementwise, then smaller n_hat, then smaller c).
inline BlockingPlan select_blocking(int n1, long M, int m) {
  if (n1 < 1 || m < 1) throw Error(ErrorKind::InvalidArgument, "n1 and m must be positive");
  if (M >= streaming_footprint(n1, m)) return streaming_plan(n1);
  const int rmax = M >= m + 1 ? select_r(M, m) : 0;

  struct Candidate {
    Mode mode;
    bool projective;
    int c;
    int n_hat;
    double replication;
  };
  std::vector<Candidate> exact, padded;
  for (int c = 2; c <= gf::Field::kMaxOrder; ++c) {
    if (!gf::is_prime_power(c)) continue;
    const int na = c * c, np = c * c + c + 1;
    if (c <= rmax && rmax >= 2) {
      if (na == n1) exact.push_back({Mode::Elementwise, false, c, na, static_cast<double>(c + 1)});
      else if (na > n1 && na < n1 + c * c) padded.push_back({Mode::Elementwise, false, c, na, static_cast<double>(c + 1)});
    }
    if (c + 1 <= rmax) {
      const int r = c + 1;
      if (np == n1) exact.push_back({Mode::Elementwise, true, c, np, static_cast<double>(np - 1) / (r - 1)});
      else if (np > n1 && np < n1 + r * r) padded.push_back({Mode::Elementwise, true, c, np, static_cast<double>(np - 1) / (r - 1)});
    }
    const int g = (n1 + c * c - 1) / (c * c);
    if (chunked_footprint(c, g, m) <= M) padded.push_back({Mode::Chunked, false, c, c * c * g, static_cast<double>(c + 1)});
  }
  auto better = [](const Candidate& a, const Candidate& b) {
    if (a.replication != b.replication) return a.replication < b.replication;
    if (a.mode != b.mode) return a.mode == Mode::Elementwise;
    if (a.n_hat != b.n_hat) return a.n_hat < b.n_hat;
    return a.c < b.c;
  };
  const auto& pool = exact.empty() ? padded : exact;
  if (pool.empty())
    throw Error(ErrorKind::InfeasibleMemory, "no blocking of n1=" + std::to_string(n1) + " fits in M=" +
                                                 std::to_string(M) + " words (m=" + std::to_string(m) + ")");
  Candidate best = pool.front();
  for (const auto& cand : pool)
    if (better(cand, best)) best = cand;
  if (best.mode == Mode::Chunked) return chunked_plan(best.c, n1);
  return elementwise_plan(best.projective ? tbp::projective_partition(best.c) : tbp::affine_partition(best.c));
}

// One unit of work: the real rows it touches (ascending) and which entries of
// its triangle it owns. owned[a * rows.size() + b] for a >= b refers to the
// entry (rows[a], rows[b]); a == b is a diagonal.
struct Block {
  std::vector<int> rows;
  std::vector<char> owned;

  bool owns(std::size_t a, std::size_t b) const { return owned[a * rows.size() + b] != 0; }
  long owned_count() const {
    long n = 0;
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b <= a; ++b) n += owns(a, b);
    return n;
  }
};

// Expands a plan into blocks over the real rows [0, n1). Padding rows vanish.
inline std::vector<Block> expand_blocks(const BlockingPlan& plan, int n1) {
  std::vector<Block> out;
  if (plan.mode == Mode::Streaming) {
    Block b;
    for (int i = 0; i < n1; ++i) b.rows.push_back(i);
    b.owned.assign(static_cast<std::size_t>(n1) * n1, 1);
    out.push_back(std::move(b));
    return out;
  }
  const auto& p = plan.partition;
  const int g = plan.mode == Mode::Chunked ? plan.g : 1;
  if (static_cast<long>(p.n) * g < n1) throw Error(ErrorKind::DimensionMismatch, "partition covers fewer rows than n1");
  for (int k = 0; k < p.K; ++k) {
    Block b;
    std::vector<int> unit;  // partition index of each row
    for (int idx : p.R[k])
      for (int t = 0; t < g; ++t) {
        const int row = idx * g + t;
        if (row < n1) {
          b.rows.push_back(row);
          unit.push_back(idx);
        }
      }
    const std::size_t s = b.rows.size();
    b.owned.assign(s * s, 0);
    const int diag = p.D[k].empty() ? -1 : p.D[k].front();
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t c = 0; c <= a; ++c)
        b.owned[a * s + c] = unit[a] != unit[c] || unit[a] == diag;
    if (s > 0) out.push_back(std::move(b));
  }
  return out;
}

enum class Mat { A = 0, B = 1, Sym = 2, C = 3 };

// Two-level memory model: words move slow -> fast on load (a read) and fast ->
// slow on store (a write). Computing with a word that is not resident, or
// exceeding the capacity, is an error.
class FastMemoryTracker {
 public:
  FastMemoryTracker(long capacity, const std::array<std::size_t, 4>& sizes) : capacity_(capacity) {
    for (int i = 0; i < 4; ++i) {
      resident_[i].assign(sizes[i], 0);
      loads_[i].assign(sizes[i], 0);
    }
  }

  void load(Mat m, std::size_t idx) {
    auto& slot = resident_[static_cast<int>(m)][idx];
    if (slot) return;
    if (size_ + 1 > capacity_)
      throw Error(ErrorKind::MemoryOverflow, "fast memory of " + std::to_string(capacity_) + " words exceeded");
    slot = 1;
    ++size_;
    ++reads_;
    ++loads_[static_cast<int>(m)][idx];
    if (size_ > peak_) peak_ = size_;
  }
  void evict(Mat m, std::size_t idx) {
    auto& slot = resident_[static_cast<int>(m)][idx];
    if (!slot) return;
    slot = 0;
    --size_;
  }
  void store(Mat m, std::size_t idx) {
    require(m, idx);
    ++writes_;
    evict(m, idx);
  }
  void require(Mat m, std::size_t idx) const {
    if (!resident_[static_cast<int>(m)][idx])
      throw Error(ErrorKind::InvalidArgument, "computed with a word that is not in fast memory");
  }

  long capacity() const { return capacity_; }
  long resident() const { return size_; }
  long peak() const { return peak_; }
  long reads() const { return reads_; }
  long writes() const { return writes_; }
  const std::vector<int>& load_counts(Mat m) const { return loads_[static_cast<int>(m)]; }

 private:
  long capacity_;
  long size_ = 0, peak_ = 0, reads_ = 0, writes_ = 0;
  std::array<std::vector<char>, 4> resident_;
  std::array<std::vector<int>, 4> loads_;
};

struct SeqLedger {
  long reads = 0;
  long writes = 0;
  long peak = 0;
  long capacity = 0;
  std::vector<int> sym_loads;  // per packed entry of the symmetric matrix
};

struct SeqResult {
  KernelInstance out;
  SeqLedger ledger;
  BlockingPlan plan;
};

inline SeqResult run_seq(KernelInstance x, long M, std::optional<BlockingPlan> plan_in = std::nullopt) {
  x.check();
  const int m = x.m(), n2 = x.n2;
  BlockingPlan plan = plan_in ? std::move(*plan_in) : select_blocking(x.n1, M, m);
  const auto blocks = expand_blocks(plan, x.n1);
  FastMemoryTracker mem(M, {x.A.size(), x.B.size(), x.sym.size(), x.C.size()});
  auto sidx = [](int i, int j) { return SymMatrix::index(i, j); };

  for (const auto& blk : blocks) {
    const auto& rows = blk.rows;
    const std::size_t s = rows.size();
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        if (blk.owns(a, b)) mem.load(Mat::Sym, sidx(rows[a], rows[b]));

    if (x.kernel == Kernel::SYMM) {
      for (int j = 0; j < n2; ++j) {
        for (int i : rows) {
          mem.load(Mat::B, x.B.index(i, j));
          mem.load(Mat::C, x.C.index(i, j));
        }
        for (std::size_t a = 0; a < s; ++a) {
          const int i1 = rows[a];
          double acc = 0;
          bool any = false;
          for (std::size_t b = 0; b < s; ++b) {
            const bool own = b <= a ? blk.owns(a, b) : blk.owns(b, a);
            if (!own) continue;
            const int i2 = rows[b];
            mem.require(Mat::Sym, sidx(i1, i2));
            mem.require(Mat::B, x.B.index(i2, j));
            acc += x.sym(i1, i2) * x.B(i2, j);
            any = true;
          }
          mem.require(Mat::C, x.C.index(i1, j));
          if (any) x.C(i1, j) += acc;
        }
        for (int i : rows) {
          mem.store(Mat::C, x.C.index(i, j));
          mem.evict(Mat::B, x.B.index(i, j));
        }
      }
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b <= a; ++b)
          if (blk.owns(a, b)) mem.evict(Mat::Sym, sidx(rows[a], rows[b]));
      continue;
    }

    const bool two = x.kernel == Kernel::SYR2K;
    for (int j = 0; j < n2; ++j) {
      for (int i : rows) {
        mem.load(Mat::A, x.A.index(i, j));
        if (two) mem.load(Mat::B, x.B.index(i, j));
      }
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          if (!blk.owns(a, b)) continue;
          const int i1 = rows[a], i2 = rows[b];
          mem.require(Mat::Sym, sidx(i1, i2));
          mem.require(Mat::A, x.A.index(i1, j));
          mem.require(Mat::A, x.A.index(i2, j));
          if (two) {
            mem.require(Mat::B, x.B.index(i1, j));
            mem.require(Mat::B, x.B.index(i2, j));
            x.sym(i1, i2) += x.A(i1, j) * x.B(i2, j) + x.A(i2, j) * x.B(i1, j);
          } else {
            x.sym(i1, i2) += x.A(i1, j) * x.A(i2, j);
          }
        }
      for (int i : rows) {
        mem.evict(Mat::A, x.A.index(i, j));
        if (two) mem.evict(Mat::B, x.B.index(i, j));
      }
    }
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = 0; b <= a; ++b)
        if (blk.owns(a, b)) mem.store(Mat::Sym, sidx(rows[a], rows[b]));
  }

  SeqResult res;
  res.ledger.reads = mem.reads();
  res.ledger.writes = mem.writes();
  res.ledger.peak = mem.peak();
  res.ledger.capacity = M;
  res.ledger.sym_loads = mem.load_counts(Mat::Sym);
  res.out = std::move(x);
  res.plan = std::move(plan);
  return res;
}

}  // namespace symtri::seqsim
