// Runs the 1D, 2D and 3D simulators on one SYRK shape and compares the
// per-processor words received with the lower bound and the grid selector.

#include <cstdio>
#include <cstdlib>

#include "symtri/gridopt.hpp"
#include "symtri/prng.hpp"

using namespace symtri;

int main(int argc, char** argv) {
  const int n1 = argc > 1 ? std::atoi(argv[1]) : 72;
  const int n2 = argc > 2 ? std::atoi(argv[2]) : 72;
  const int P = argc > 3 ? std::atoi(argv[3]) : 24;
  const auto s = bounds::shape(Kernel::SYRK, n1, n2);
  const auto pick = gridopt::select_grid(s, P);
  std::printf("SYRK n1=%d n2=%d P=%d  lower bound %.1f words, selector picks %s (p1=%d p2=%d)\n", n1, n2, P,
              bounds::memindep_lb(s, P).lb, parsim::to_string(pick.algo), pick.p1, pick.p2);

  const auto x = random_instance(Kernel::SYRK, n1, n2, 42);
  auto ref = x;
  reference_kernel(ref);
  for (const auto& g : {gridopt::choice_1d(s, P), gridopt::choice_2d(s, P), gridopt::choice_3d(s, P)}) {
    parsim::MachineSpec spec;
    spec.p1 = g.p1;
    spec.p2 = g.p2;
    const auto res = parsim::run(x, spec, g.algo);
    std::printf("  %-3s p1=%-3d p2=%-3d words %10.1f (predicted %10.1f)  messages %4ld  peak %7ld  err %.1e\n",
                parsim::to_string(g.algo), g.p1, g.p2, res.ledger.max_words_received().to_double(),
                g.predicted_bandwidth, res.ledger.max_messages(), res.ledger.max_peak_memory(),
                max_rel_err(res.out.output(), ref.output()));
  }
  return 0;
}
