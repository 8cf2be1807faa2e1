#pragma once

#include <cstdint>

#include "matrix.hpp"

namespace symtri {

// xoshiro256** seeded through splitmix64. Not in the standard library, and the
// std engines' distributions are not portable across implementations.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    for (auto& w : s_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [-1, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-52 - 1.0; }

  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Operands for a kernel filled from one stream: A, B, the symmetric matrix,
// then C, each in storage order. Members the kernel does not use stay empty.
inline KernelInstance random_instance(Kernel kernel, int n1, int n2, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  KernelInstance x;
  x.kernel = kernel;
  x.n1 = n1;
  x.n2 = n2;
  auto fill = [&](std::vector<double>& v) {
    for (auto& e : v) e = rng.uniform();
  };
  if (kernel != Kernel::SYMM) {
    x.A = Matrix(n1, n2);
    fill(x.A.data());
  }
  if (kernel != Kernel::SYRK) {
    x.B = Matrix(n1, n2);
    fill(x.B.data());
  }
  x.sym = SymMatrix(n1);
  fill(x.sym.data());
  if (kernel == Kernel::SYMM) {
    x.C = Matrix(n1, n2);
    fill(x.C.data());
  }
  return x;
}

}  // namespace symtri
