// Builds the affine and projective partitions for a few field orders, assigns
// diagonals and prints the block layout of the smallest ones.

#include <cstdio>

#include "symtri/tbp.hpp"

using namespace symtri::tbp;

static void show(const char* name, const TrianglePartition& p) {
  std::printf("%s: n=%d r=%d K=%d %s\n", name, p.n, p.r, p.K, validate(p).ok() ? "valid" : "INVALID");
  if (p.n > 16) return;
  for (int k = 0; k < p.K; ++k) {
    std::printf("  R%-2d = {", k);
    for (std::size_t t = 0; t < p.R[k].size(); ++t) std::printf("%s%d", t ? "," : "", p.R[k][t]);
    std::printf("}");
    if (!p.D[k].empty()) std::printf("  diag %d", p.D[k].front());
    std::printf("\n");
  }
}

int main() {
  show("affine c=3", assign_diagonals(affine_partition(3)));
  show("projective c=2", assign_diagonals(projective_partition(2)));
  for (int c : {4, 5, 7, 8, 9}) {
    char name[64];
    std::snprintf(name, sizeof name, "affine c=%d", c);
    show(name, assign_diagonals(affine_partition(c)));
    std::snprintf(name, sizeof name, "projective c=%d", c);
    show(name, assign_diagonals(projective_partition(c)));
  }
  return 0;
}
