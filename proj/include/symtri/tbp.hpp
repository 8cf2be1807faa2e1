#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "gf.hpp"

namespace symtri::tbp {

enum class OriginKind { Affine, Projective, SteinerFile };

struct Origin {
  OriginKind kind = OriginKind::SteinerFile;
  int c = 0;         // affine / projective
  std::string path;  // steiner file
};

struct TrianglePartition {
  int n = 0;
  int r = 0;
  int K = 0;
  std::vector<std::vector<int>> R;  // each sorted ascending
  std::vector<std::vector<int>> D;  // each of size 0 or 1
  Origin origin;

  bool has_diagonals() const {
    return std::any_of(D.begin(), D.end(), [](const auto& d) { return !d.empty(); });
  }
};

using QMap = std::vector<std::vector<int>>;

struct Violation {
  std::string invariant;
  std::string witness;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const {
    if (ok()) return "ok\n";
    std::ostringstream os;
    for (const auto& v : violations) os << v.invariant << ": " << v.witness << "\n";
    return os.str();
  }
};

namespace detail {

inline TrianglePartition make_empty(int n, int r, OriginKind kind, int c) {
  TrianglePartition p;
  p.n = n;
  p.r = r;
  p.origin.kind = kind;
  p.origin.c = c;
  return p;
}

inline void push_block(TrianglePartition& p, std::vector<int> block) {
  std::sort(block.begin(), block.end());
  p.R.push_back(std::move(block));
  p.D.emplace_back();
  p.K = static_cast<int>(p.R.size());
}

inline std::string pair_str(int i, int j) {
  return "{" + std::to_string(std::min(i, j)) + "," + std::to_string(std::max(i, j)) + "}";
}

}  // namespace detail

// Lines of the affine plane over GF(c). Point (a1, a2) has index a1*c + a2.
// Non-vertical lines a2 = b0 + a1*(b1 - b0) come first, ordered by (b0, b1), i.e.
// by their values at a1 = 0 and a1 = 1; the c vertical lines a1 = const follow.
inline TrianglePartition affine_partition(int c) {
  const gf::Field F(c);
  auto p = detail::make_empty(c * c, c, OriginKind::Affine, c);
  for (int b0 = 0; b0 < c; ++b0)
    for (int b1 = 0; b1 < c; ++b1) {
      const int slope = F.sub(b1, b0);
      std::vector<int> line;
      for (int a = 0; a < c; ++a) line.push_back(a * c + F.add(b0, F.mul(a, slope)));
      detail::push_block(p, std::move(line));
    }
  for (int a = 0; a < c; ++a) {
    std::vector<int> line;
    for (int b = 0; b < c; ++b) line.push_back(a * c + b);
    detail::push_block(p, std::move(line));
  }
  return p;
}

// Projective closure of the affine plane. Homogeneous triples are written
// (a2 : a1 : z); the c^2 affine points (z = 1) come first, then (s : 1 : 0) at
// index c^2 + s for the direction of slope s, then (1 : 0 : 0) for the vertical
// direction. Blocks keep the affine order, then the line at infinity.
inline TrianglePartition projective_partition(int c) {
  const gf::Field F(c);
  const int c2 = c * c;
  auto p = detail::make_empty(c2 + c + 1, c + 1, OriginKind::Projective, c);
  for (int b0 = 0; b0 < c; ++b0)
    for (int b1 = 0; b1 < c; ++b1) {
      const int slope = F.sub(b1, b0);
      std::vector<int> line;
      for (int a = 0; a < c; ++a) line.push_back(a * c + F.add(b0, F.mul(a, slope)));
      line.push_back(c2 + slope);
      detail::push_block(p, std::move(line));
    }
  for (int a = 0; a < c; ++a) {
    std::vector<int> line;
    for (int b = 0; b < c; ++b) line.push_back(a * c + b);
    line.push_back(c2 + c);
    detail::push_block(p, std::move(line));
  }
  std::vector<int> infinity;
  for (int s = 0; s <= c; ++s) infinity.push_back(c2 + s);
  detail::push_block(p, std::move(infinity));
  return p;
}

inline QMap q_sets(const TrianglePartition& p) {
  QMap Q(p.n);
  for (int k = 0; k < p.K; ++k)
    for (int i : p.R[k])
      if (i >= 0 && i < p.n) Q[i].push_back(k);
  return Q;
}

inline ValidationReport validate(const TrianglePartition& p) {
  ValidationReport rep;
  auto add = [&](std::string inv, std::string w) { rep.violations.push_back({std::move(inv), std::move(w)}); };
  const int n = p.n, r = p.r;
  if (n < 2 || r < 2) add("shape", "n=" + std::to_string(n) + " r=" + std::to_string(r));
  if (static_cast<int>(p.R.size()) != p.K || static_cast<int>(p.D.size()) != p.K)
    add("block_count", "K=" + std::to_string(p.K) + " but " + std::to_string(p.R.size()) + " R sets and " +
                           std::to_string(p.D.size()) + " D sets");
  const long expect_num = static_cast<long>(n) * (n - 1);
  const long expect_den = static_cast<long>(r) * (r - 1);
  if (expect_den > 0 && (expect_num % expect_den != 0 || expect_num / expect_den != p.K))
    add("block_count", "K=" + std::to_string(p.K) + " but n(n-1)/(r(r-1)) = " + std::to_string(expect_num) + "/" +
                           std::to_string(expect_den));

  bool indices_ok = true;
  for (std::size_t k = 0; k < p.R.size(); ++k) {
    const auto& b = p.R[k];
    if (static_cast<int>(b.size()) != r)
      add("block_size", "k=" + std::to_string(k) + " has " + std::to_string(b.size()) + " indices, expected " +
                            std::to_string(r));
    for (std::size_t t = 0; t < b.size(); ++t) {
      if (b[t] < 0 || b[t] >= n) {
        add("index_range", "k=" + std::to_string(k) + " index " + std::to_string(b[t]));
        indices_ok = false;
      }
      if (t > 0 && b[t] <= b[t - 1]) add("sorted_distinct", "k=" + std::to_string(k));
    }
  }
  if (!indices_ok || n < 2) return rep;

  std::vector<int> owner(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t k = 0; k < p.R.size(); ++k) {
    const auto& b = p.R[k];
    for (std::size_t x = 0; x < b.size(); ++x)
      for (std::size_t y = x + 1; y < b.size(); ++y) {
        const int i = std::max(b[x], b[y]), j = std::min(b[x], b[y]);
        if (i == j) continue;
        int& o = owner[static_cast<std::size_t>(i) * n + j];
        if (o >= 0)
          add("pair_duplicated", detail::pair_str(i, j) + " in blocks " + std::to_string(o) + " and " +
                                     std::to_string(k));
        else
          o = static_cast<int>(k);
      }
  }
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j)
      if (owner[static_cast<std::size_t>(i) * n + j] < 0) add("pair_missing", detail::pair_str(i, j));

  if (r > 1 && (n - 1) % (r - 1) == 0) {
    const auto Q = q_sets(p);
    const int rep_expected = (n - 1) / (r - 1);
    for (int i = 0; i < n; ++i)
      if (static_cast<int>(Q[i].size()) != rep_expected)
        add("replication", "index " + std::to_string(i) + " lies in " + std::to_string(Q[i].size()) +
                               " blocks, expected " + std::to_string(rep_expected));
  } else {
    add("replication", "(n-1)/(r-1) is not an integer");
  }

  if (p.has_diagonals()) {
    std::vector<int> diag_owner(n, -1);
    for (std::size_t k = 0; k < p.D.size(); ++k) {
      const auto& d = p.D[k];
      if (d.size() > 1) add("diag_size", "k=" + std::to_string(k) + " has " + std::to_string(d.size()) + " diagonals");
      for (int i : d) {
        if (i < 0 || i >= n) {
          add("diag_range", "k=" + std::to_string(k) + " diagonal " + std::to_string(i));
          continue;
        }
        if (k < p.R.size() && !std::binary_search(p.R[k].begin(), p.R[k].end(), i))
          add("diag_subset", "k=" + std::to_string(k) + " diagonal " + std::to_string(i) + " not in R");
        if (diag_owner[i] >= 0)
          add("diag_disjoint", "diagonal " + std::to_string(i) + " in D" + std::to_string(diag_owner[i]) + " and D" +
                                   std::to_string(k));
        else
          diag_owner[i] = static_cast<int>(k);
      }
    }
    for (int i = 0; i < n; ++i)
      if (diag_owner[i] < 0) add("diag_cover", "diagonal " + std::to_string(i) + " unassigned");
  }
  return rep;
}

// Maximum bipartite matching indices -> blocks (Hopcroft-Karp). Free indices are
// processed in ascending order and blocks are tried in ascending id, so the
// result is a pure function of the input ordering.
inline TrianglePartition assign_diagonals(TrianglePartition p) {
  const auto rep = validate(TrianglePartition{p.n, p.r, p.K, p.R, std::vector<std::vector<int>>(p.K), p.origin});
  if (!rep.ok())
    throw Error(ErrorKind::NoPerfectMatching, "partition is not a valid pair design: " + rep.violations.front().invariant +
                                                  " " + rep.violations.front().witness);
  const int n = p.n, K = p.K;
  const auto adj = q_sets(p);
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> match_x(n, -1), match_y(K, -1), dist(n);

  auto bfs = [&]() {
    std::queue<int> q;
    bool found = false;
    for (int x = 0; x < n; ++x) {
      if (match_x[x] < 0) {
        dist[x] = 0;
        q.push(x);
      } else {
        dist[x] = kInf;
      }
    }
    while (!q.empty()) {
      const int x = q.front();
      q.pop();
      for (int y : adj[x]) {
        const int x2 = match_y[y];
        if (x2 < 0) {
          found = true;
        } else if (dist[x2] == kInf) {
          dist[x2] = dist[x] + 1;
          q.push(x2);
        }
      }
    }
    return found;
  };
  std::function<bool(int)> dfs = [&](int x) {
    for (int y : adj[x]) {
      const int x2 = match_y[y];
      if (x2 < 0 || (dist[x2] == dist[x] + 1 && dfs(x2))) {
        match_x[x] = y;
        match_y[y] = x;
        return true;
      }
    }
    dist[x] = kInf;
    return false;
  };
  while (bfs())
    for (int x = 0; x < n; ++x)
      if (match_x[x] < 0) dfs(x);

  for (int x = 0; x < n; ++x)
    if (match_x[x] < 0)
      throw Error(ErrorKind::NoPerfectMatching, "index " + std::to_string(x) + " cannot be matched to a block");
  p.D.assign(K, {});
  for (int x = 0; x < n; ++x) p.D[match_x[x]].push_back(x);
  return p;
}

// Partition file: "steiner n r", then one line of r indices per block, then
// optional "diag k i" lines. Blank lines and '#' comments are ignored.
inline TrianglePartition load_steiner(const std::string& text, const std::string& path = "") {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorKind::ParseError, (path.empty() ? std::string("<input>") : path) + ":" + std::to_string(lineno) +
                                           ": " + msg);
  };
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++lineno;
      const auto hash = out.find('#');
      if (hash != std::string::npos) out.erase(hash);
      if (out.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  TrianglePartition p;
  p.origin.kind = OriginKind::SteinerFile;
  p.origin.path = path;
  if (!next_line(line)) fail("empty partition file");
  {
    std::istringstream hs(line);
    std::string tag, extra;
    if (!(hs >> tag >> p.n >> p.r) || tag != "steiner" || (hs >> extra)) fail("expected header 'steiner n r'");
    if (p.n < 2 || p.r < 2 || p.r > p.n) fail("header needs 2 <= r <= n");
  }
  std::vector<std::pair<int, int>> diags;
  while (next_line(line)) {
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (first == "diag") {
      int k, i;
      std::string extra;
      if (!(ls >> k >> i) || (ls >> extra)) fail("expected 'diag k i'");
      diags.emplace_back(k, i);
      continue;
    }
    if (!diags.empty()) fail("block line after diag lines");
    std::istringstream bs(line);
    std::vector<int> block;
    std::string tok;
    while (bs >> tok) {
      std::size_t pos = 0;
      int v = 0;
      try {
        v = std::stoi(tok, &pos);
      } catch (const std::exception&) {
        fail("not an integer: '" + tok + "'");
      }
      if (pos != tok.size()) fail("not an integer: '" + tok + "'");
      block.push_back(v);
    }
    if (static_cast<int>(block.size()) != p.r)
      fail("block has " + std::to_string(block.size()) + " indices, expected " + std::to_string(p.r));
    std::sort(block.begin(), block.end());
    p.R.push_back(std::move(block));
  }
  p.K = static_cast<int>(p.R.size());
  p.D.assign(p.K, {});
  for (auto [k, i] : diags) {
    if (k < 0 || k >= p.K) fail("diag refers to block " + std::to_string(k) + " out of range");
    p.D[k].push_back(i);
  }

  const auto rep = validate(p);
  if (!rep.ok()) {
    for (const auto& want : {"pair_duplicated", "pair_missing"}) {
      for (const auto& v : rep.violations) {
        if (v.invariant != want) continue;
        const auto open = v.witness.find('{'), comma = v.witness.find(','), close = v.witness.find('}');
        const int i = std::stoi(v.witness.substr(open + 1, comma - open - 1));
        const int j = std::stoi(v.witness.substr(comma + 1, close - comma - 1));
        const auto reason = std::string(want) == "pair_missing" ? SteinerError::Reason::Missing
                                                                : SteinerError::Reason::Duplicated;
        throw SteinerError(reason, i, j,
                           std::string(reason == SteinerError::Reason::Missing ? "missing" : "duplicated") + " pair " +
                               detail::pair_str(i, j));
      }
    }
    const auto& v = rep.violations.front();
    throw SteinerError(SteinerError::Reason::Other, -1, -1, v.invariant + ": " + v.witness);
  }
  return p;
}

inline std::string serialize(const TrianglePartition& p) {
  std::ostringstream os;
  os << "steiner " << p.n << " " << p.r << "\n";
  for (const auto& b : p.R) {
    for (std::size_t t = 0; t < b.size(); ++t) os << (t ? " " : "") << b[t];
    os << "\n";
  }
  for (int k = 0; k < p.K; ++k)
    for (int i : p.D[k]) os << "diag " << k << " " << i << "\n";
  return os.str();
}

// Set-of-sets equality after canonical sorting.
inline std::vector<std::vector<int>> canonical(std::vector<std::vector<int>> sets) {
  for (auto& s : sets) std::sort(s.begin(), s.end());
  std::sort(sets.begin(), sets.end());
  return sets;
}

// True when some bijection of [0,n) maps the blocks of a onto the blocks of b.
// Backtracking over point images, pruned by requiring that every partially
// mapped block of a lands inside a single block of b. Both inputs must be pair
// designs (each pair in at most one block).
inline bool isomorphic(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b, int n) {
  if (a.size() != b.size()) return false;
  if (canonical(a) == canonical(b)) return true;
  std::vector<int> pair_b(static_cast<std::size_t>(n) * n, -1);
  std::vector<std::size_t> size_b(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    size_b[k] = b[k].size();
    for (int x : b[k])
      for (int y : b[k])
        if (x != y) pair_b[static_cast<std::size_t>(x) * n + y] = static_cast<int>(k);
  }
  std::vector<std::vector<int>> blocks_of(n);
  for (std::size_t k = 0; k < a.size(); ++k)
    for (int x : a[k]) blocks_of[x].push_back(static_cast<int>(k));
  std::vector<int> image(n, -1);
  std::vector<char> used(n, 0);

  std::function<bool(int)> place = [&](int x) -> bool {
    if (x == n) return true;
    for (int y = 0; y < n; ++y) {
      if (used[y]) continue;
      bool ok = true;
      for (int blk : blocks_of[x]) {
        int target = -1;
        for (int t : a[blk]) {
          if (t == x || image[t] < 0) continue;
          const int bb = pair_b[static_cast<std::size_t>(image[t]) * n + y];
          if (bb < 0 || (target >= 0 && bb != target) || size_b[bb] != a[blk].size()) {
            ok = false;
            break;
          }
          target = bb;
        }
        if (!ok) break;
      }
      if (!ok) continue;
      image[x] = y;
      used[y] = 1;
      if (place(x + 1)) return true;
      image[x] = -1;
      used[y] = 0;
    }
    return false;
  };
  return place(0);
}

}  // namespace symtri::tbp
