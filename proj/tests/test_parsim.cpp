#include <catch2/catch_amalgamated.hpp>

#include "symtri/bounds.hpp"
#include "symtri/parsim.hpp"
#include "symtri/prng.hpp"

using namespace symtri;
using namespace symtri::parsim;

namespace {

MachineSpec grid(int p1, int p2) {
  MachineSpec s;
  s.p1 = p1;
  s.p2 = p2;
  return s;
}

ParResult run_checked(Kernel k, int n1, int n2, const MachineSpec& spec, Algo algo, int b = 0, std::uint64_t seed = 1) {
  auto x = random_instance(k, n1, n2, seed);
  auto ref = x;
  reference_kernel(ref);
  auto res = run(x, spec, algo, b);
  INFO(to_string(k) << " " << to_string(algo) << " n1=" << n1 << " n2=" << n2 << " p1=" << spec.p1 << " p2=" << spec.p2
                    << " b=" << b);
  CHECK(max_rel_err(res.out.output(), ref.output()) <= 1e-10);
  CHECK(res.one_copy_start);
  CHECK(res.one_copy_end);
  CHECK(res.ledger.total_sent() == res.ledger.total_received());
  return res;
}

// Per-rank words of a 3D run with divisible dimensions.
Rational words_3d(int m, int n1, int n2, int c, int p2) {
  const long p1 = static_cast<long>(c) * (c + 1), h = n1 / (c * c);
  const Rational t1 = Rational(static_cast<long>(m) * n1 * n2, static_cast<long>(c) * p2) * Rational(p1 - 1, p1);
  const long tk = static_cast<long>(c) * (c - 1) / 2 * h * h + h * (h + 1) / 2;
  return t1 + Rational(tk) * Rational(p2 - 1, p2);
}

}  // namespace

TEST_CASE("collective cost", "[parsim]") {
  CostLedger L(4, 1, 1, 1);
  collective(L, CollectiveKind::ReduceScatter, {0, 1, 2, 3}, 8);
  for (const auto& r : L.ranks) {
    CHECK(r.messages == 3);
    CHECK(r.words_sent == Rational(6));
    CHECK(r.words_received == Rational(6));
    CHECK(r.flops == Rational(6));
  }
  collective(L, CollectiveKind::AllGather, {2}, 100);
  CHECK(L.ranks[2].messages == 3);
  collective(L, CollectiveKind::AllToAll, {0, 1, 2}, 10);
  CHECK(L.ranks[0].words_received == Rational(6) + Rational(20, 3));
  CHECK(L.ranks[0].flops == Rational(6));
  try {
    collective(L, CollectiveKind::AllToAll, {}, 1);
    FAIL("empty group accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GroupEmpty);
  }
}

TEST_CASE("feasible grids", "[parsim]") {
  CHECK(grid_c(6) == 2);
  CHECK(grid_c(12) == 3);
  CHECK(grid_c(20) == 4);
  CHECK(grid_c(42) == 0);  // 6 is not a prime power
  CHECK(grid_c(56) == 7);
  CHECK(grid_c(10) == 0);
  auto x = random_instance(Kernel::SYRK, 8, 4, 1);
  for (auto [p1, p2, algo] : {std::tuple{10, 1, Algo::TwoD}, std::tuple{12, 2, Algo::TwoD}, std::tuple{7, 2, Algo::ThreeD}}) {
    try {
      run(x, grid(p1, p2), algo);
      FAIL("infeasible grid accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InfeasibleGrid);
    }
  }
}

TEST_CASE("1D words are exact", "[parsim]") {
  for (auto k : {Kernel::SYRK, Kernel::SYR2K, Kernel::SYMM})
    for (int P : {1, 2, 3, 5, 8})
      for (auto [n1, n2] : {std::pair{6, 10}, std::pair{11, 7}, std::pair{4, 3}}) {
        const auto res = run_checked(k, n1, n2, grid(1, P), Algo::OneD);
        const long T = static_cast<long>(n1) * (n1 + 1) / 2;
        for (const auto& r : res.ledger.ranks) CHECK(r.words_received == Rational(T * (P - 1), P));
        CHECK(res.ledger.max_messages() == P - 1);
      }
}

TEST_CASE("2D words are exact when dimensions divide", "[parsim]") {
  struct Cfg {
    int c, h, n2;
  };
  for (auto k : {Kernel::SYRK, Kernel::SYR2K, Kernel::SYMM})
    for (auto cfg : {Cfg{2, 1, 3}, Cfg{2, 3, 6}, Cfg{3, 1, 4}, Cfg{3, 2, 8}, Cfg{4, 1, 5}}) {
      const int n1 = cfg.c * cfg.c * cfg.h, P = cfg.c * (cfg.c + 1), m = kernel_m(k);
      const auto res = run_checked(k, n1, cfg.n2, grid(P, 1), Algo::TwoD);
      const Rational expect = Rational(static_cast<long>(m) * n1 * cfg.n2, cfg.c) * Rational(P - 1, P);
      for (const auto& r : res.ledger.ranks) CHECK(r.words_received == expect);
      CHECK(res.ledger.max_messages() == static_cast<long>(m) * (P - 1));
    }
}

TEST_CASE("2D SYMM ownership follows the rows of the plane", "[parsim]") {
  auto x = random_instance(Kernel::SYMM, 9, 4, 3);
  const auto d = distribute(x, grid(12, 1), Algo::TwoD);
  // rank 5 holds row block set {1,5,6}: blocks (5,1), (6,1), (6,5) plus one diagonal
  CHECK(d.partition.R[5] == std::vector<int>{1, 5, 6});
  std::vector<std::pair<int, int>> got;
  for (const auto& e : d.T[5]) got.emplace_back(e.r, e.s);
  CHECK(got.size() == 4);
  CHECK(std::count(got.begin(), got.end(), std::pair{5, 1}) == 1);
  CHECK(std::count(got.begin(), got.end(), std::pair{6, 1}) == 1);
  CHECK(std::count(got.begin(), got.end(), std::pair{6, 5}) == 1);
  const int diag = d.partition.D[5].front();
  CHECK(std::count(got.begin(), got.end(), std::pair{diag, diag}) == 1);
}

TEST_CASE("3D words match the closed form", "[parsim]") {
  struct Cfg {
    int c, h, n2, p2;
  };
  for (auto k : {Kernel::SYRK, Kernel::SYR2K, Kernel::SYMM})
    for (auto cfg : {Cfg{2, 2, 6, 2}, Cfg{2, 1, 12, 4}, Cfg{3, 1, 8, 2}, Cfg{3, 2, 12, 3}}) {
      const int n1 = cfg.c * cfg.c * cfg.h, p1 = cfg.c * (cfg.c + 1);
      const auto res = run_checked(k, n1, cfg.n2, grid(p1, cfg.p2), Algo::ThreeD);
      // every extended block has the same size when no row block is empty,
      // except that the diagonal block sizes are uniform too
      CHECK(res.ledger.max_words_received() == words_3d(kernel_m(k), n1, cfg.n2, cfg.c, cfg.p2));
    }
}

TEST_CASE("grid engine degenerates consistently", "[parsim]") {
  for (auto k : {Kernel::SYRK, Kernel::SYMM}) {
    const auto two = run_checked(k, 18, 8, grid(12, 1), Algo::TwoD);
    const auto three = run_checked(k, 18, 8, grid(12, 1), Algo::ThreeD);
    CHECK(two.ledger.max_words_received() == three.ledger.max_words_received());
    CHECK(two.ledger.max_messages() == three.ledger.max_messages());
    const auto full = run_checked(k, 18, 8, grid(6, 2), Algo::ThreeD);
    const auto lim = run_checked(k, 18, 8, grid(6, 2), Algo::ThreeDLimited, 4);
    CHECK(full.ledger.max_words_received() == lim.ledger.max_words_received());
    CHECK(full.ledger.max_peak_memory() == lim.ledger.max_peak_memory());
    CHECK(full.out.output() == lim.out.output());
  }
}

TEST_CASE("limited memory trades messages for memory", "[parsim]") {
  long prev_peak = 1L << 40, prev_msgs = 0;
  for (int b : {8, 4, 2, 1}) {
    const auto res = run_checked(Kernel::SYR2K, 36, 16, grid(12, 2), Algo::ThreeDLimited, b);
    CHECK(res.ledger.max_peak_memory() <= prev_peak);
    CHECK(res.ledger.max_messages() > prev_msgs);
    prev_peak = res.ledger.max_peak_memory();
    prev_msgs = res.ledger.max_messages();
    // one all-to-all pair per step plus the final reduce-scatter
    const int steps = (8 + b - 1) / b;
    CHECK(res.ledger.max_messages() == 2L * 11 * steps + 1);
  }
}

TEST_CASE("random configurations are correct", "[parsim]") {
  Xoshiro256 rng(2024);
  const int p1s[] = {6, 12, 20};
  for (int t = 0; t < 60; ++t) {
    const Kernel k = static_cast<Kernel>(t % 3);
    const int n1 = 1 + static_cast<int>(rng.below(30)), n2 = 1 + static_cast<int>(rng.below(12));
    const Algo algo = static_cast<Algo>(rng.below(4));
    MachineSpec spec = algo == Algo::OneD ? grid(1, 1 + static_cast<int>(rng.below(9))) : grid(p1s[rng.below(3)], 1);
    if (algo == Algo::ThreeD || algo == Algo::ThreeDLimited) spec.p2 = 1 + static_cast<int>(rng.below(4));
    const int b = 1 + static_cast<int>(rng.below(5));
    run_checked(k, n1, n2, spec, algo, b, t);
  }
}

TEST_CASE("ledger is data oblivious", "[parsim]") {
  for (auto algo : {Algo::OneD, Algo::TwoD, Algo::ThreeD}) {
    const auto spec = algo == Algo::OneD ? grid(1, 6) : grid(6, algo == Algo::TwoD ? 1 : 2);
    auto a = run(random_instance(Kernel::SYMM, 13, 7, 1), spec, algo);
    auto b = run(random_instance(Kernel::SYMM, 13, 7, 2), spec, algo);
    REQUIRE(a.ledger.ranks.size() == b.ledger.ranks.size());
    for (std::size_t r = 0; r < a.ledger.ranks.size(); ++r) {
      CHECK(a.ledger.ranks[r].words_received == b.ledger.ranks[r].words_received);
      CHECK(a.ledger.ranks[r].flops == b.ledger.ranks[r].flops);
      CHECK(a.ledger.ranks[r].peak_memory == b.ledger.ranks[r].peak_memory);
    }
    CHECK(a.ledger.time == b.ledger.time);
  }
}

TEST_CASE("flops per rank follow the leading term", "[parsim]") {
  // 2D: m n1^2 n2 / P up to the diagonal imbalance
  const int c = 3, h = 4, n1 = c * c * h, n2 = 12, P = c * (c + 1);
  for (auto k : {Kernel::SYRK, Kernel::SYR2K, Kernel::SYMM}) {
    const auto res = run_checked(k, n1, n2, grid(P, 1), Algo::TwoD);
    const double lead = static_cast<double>(kernel_m(k)) * n1 * n1 * n2 / P;
    const double f = res.ledger.max_flops().to_double();
    CHECK(f >= 0.9 * lead);
    CHECK(f <= 1.25 * lead);
  }
}

TEST_CASE("memory cap is enforced", "[parsim]") {
  auto x = random_instance(Kernel::SYRK, 18, 8, 1);
  MachineSpec spec = grid(6, 2);
  const auto free_run = run(x, spec, Algo::ThreeD);
  spec.M = free_run.ledger.max_peak_memory();
  CHECK_NOTHROW(run(x, spec, Algo::ThreeD));
  spec.M = free_run.ledger.max_peak_memory() - 1;
  try {
    run(x, spec, Algo::ThreeD);
    FAIL("cap ignored");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MemoryOverflow);
  }
}

TEST_CASE("modeled time sums phase maxima", "[parsim]") {
  auto x = random_instance(Kernel::SYRK, 8, 6, 1);
  MachineSpec spec = grid(1, 3);
  spec.alpha = 10;
  spec.beta = 2;
  spec.gamma = 0;
  const auto res = run(x, spec, Algo::OneD);
  // one reduce-scatter of 36 words over 3 ranks: 2 messages, 24 words
  CHECK(res.ledger.time == Catch::Approx(10 * 2 + 2 * 24.0));
}
