#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace symtri::gf {

// Coefficients are degree-ascending; coeffs[0] is the constant term.
struct FieldElement {
  std::vector<int> coeffs;
  friend bool operator==(const FieldElement&, const FieldElement&) = default;
};

enum class Op { Add, Sub, Mul, Neg, Inv };

namespace detail {

inline bool is_prime(int v) {
  if (v < 2) return false;
  for (int d = 2; d * d <= v; ++d)
    if (v % d == 0) return false;
  return true;
}

// Polynomials over GF(p) as degree-ascending vectors, trimmed of leading zeros.
using Poly = std::vector<int>;

inline void trim(Poly& a) {
  while (!a.empty() && a.back() == 0) a.pop_back();
}

// Remainder of a modulo a monic b.
inline Poly poly_mod(Poly a, const Poly& b, int p) {
  trim(a);
  const std::size_t db = b.size() - 1;
  while (a.size() > db) {
    const int lead = a.back();
    const std::size_t shift = a.size() - 1 - db;
    for (std::size_t i = 0; i < b.size(); ++i)
      a[shift + i] = ((a[shift + i] - lead * b[i]) % p + p) % p;
    trim(a);
  }
  return a;
}

// Monic polynomial of degree d whose lower coefficients encode t in base p.
inline Poly monic_from_index(int d, long t, int p) {
  Poly f(d + 1, 0);
  for (int i = 0; i < d; ++i) {
    f[i] = static_cast<int>(t % p);
    t /= p;
  }
  f[d] = 1;
  return f;
}

inline long ipow(long b, int e) {
  long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Trial division by every monic polynomial of degree 1..k/2.
inline bool irreducible(const Poly& f, int p) {
  const int k = static_cast<int>(f.size()) - 1;
  for (int d = 1; 2 * d <= k; ++d) {
    const long count = ipow(p, d);
    for (long t = 0; t < count; ++t)
      if (poly_mod(f, monic_from_index(d, t, p), p).empty()) return false;
  }
  return true;
}

}  // namespace detail

class Field {
 public:
  static constexpr int kMaxOrder = 64;

  explicit Field(int q) : q_(q) {
    if (q < 2) throw Error(ErrorKind::NotPrimePower, "field order must be at least 2, got " + std::to_string(q));
    if (q > kMaxOrder)
      throw Error(ErrorKind::FieldTooLarge, "field order " + std::to_string(q) + " exceeds 64");
    int p = 2;
    while (q % p != 0) ++p;
    int rest = q, k = 0;
    while (rest % p == 0) {
      rest /= p;
      ++k;
    }
    if (rest != 1 || !detail::is_prime(p))
      throw Error(ErrorKind::NotPrimePower, std::to_string(q) + " is not a prime power");
    p_ = p;
    k_ = k;
    if (k > 1) {
      const long count = detail::ipow(p, k);
      for (long t = 0; t < count; ++t) {
        auto f = detail::monic_from_index(k, t, p);
        if (detail::irreducible(f, p)) {
          modulus_ = f;
          break;
        }
      }
    }
    elements_.reserve(q);
    for (int i = 0; i < q; ++i) elements_.push_back(from_index(i));
    // Cache index-level results of the polynomial arithmetic for the plane builders.
    add_table_.resize(q * q);
    mul_table_.resize(q * q);
    for (int a = 0; a < q; ++a)
      for (int b = 0; b < q; ++b) {
        add_table_[a * q + b] = index_of(add(elements_[a], elements_[b]));
        mul_table_[a * q + b] = index_of(mul(elements_[a], elements_[b]));
      }
  }

  int q() const { return q_; }
  int p() const { return p_; }
  int k() const { return k_; }
  // Monic, degree-ascending, length k+1. Empty for prime fields.
  const std::vector<int>& modulus() const { return modulus_; }

  // Elements in lexicographic order reading coefficients from the highest degree
  // down, i.e. the order of the base-p integer sum(coeffs[i] * p^i).
  const std::vector<FieldElement>& elements() const { return elements_; }

  FieldElement from_index(int idx) const {
    FieldElement e{std::vector<int>(k_, 0)};
    for (int i = 0; i < k_; ++i) {
      e.coeffs[i] = idx % p_;
      idx /= p_;
    }
    return e;
  }

  int index_of(const FieldElement& e) const {
    check(e);
    int idx = 0;
    for (int i = k_ - 1; i >= 0; --i) idx = idx * p_ + e.coeffs[i];
    return idx;
  }

  FieldElement zero() const { return from_index(0); }
  FieldElement one() const { return from_index(1); }

  FieldElement add(const FieldElement& a, const FieldElement& b) const {
    check(a);
    check(b);
    FieldElement r{std::vector<int>(k_)};
    for (int i = 0; i < k_; ++i) r.coeffs[i] = (a.coeffs[i] + b.coeffs[i]) % p_;
    return r;
  }

  FieldElement neg(const FieldElement& a) const {
    check(a);
    FieldElement r{std::vector<int>(k_)};
    for (int i = 0; i < k_; ++i) r.coeffs[i] = (p_ - a.coeffs[i]) % p_;
    return r;
  }

  FieldElement sub(const FieldElement& a, const FieldElement& b) const { return add(a, neg(b)); }

  FieldElement mul(const FieldElement& a, const FieldElement& b) const {
    check(a);
    check(b);
    detail::Poly prod(2 * k_ - 1, 0);
    for (int i = 0; i < k_; ++i)
      for (int j = 0; j < k_; ++j) prod[i + j] = (prod[i + j] + a.coeffs[i] * b.coeffs[j]) % p_;
    if (k_ > 1) prod = detail::poly_mod(prod, modulus_, p_);
    FieldElement r{std::vector<int>(k_, 0)};
    for (std::size_t i = 0; i < prod.size() && i < static_cast<std::size_t>(k_); ++i) r.coeffs[i] = prod[i];
    return r;
  }

  // a^(q-2) is the inverse of a nonzero a.
  FieldElement inv(const FieldElement& a) const {
    check(a);
    if (index_of(a) == 0) throw Error(ErrorKind::DivisionByZero, "inverse of zero");
    FieldElement result = one(), base = a;
    int e = q_ - 2;
    while (e > 0) {
      if (e & 1) result = mul(result, base);
      base = mul(base, base);
      e >>= 1;
    }
    return result;
  }

  FieldElement apply(Op op, const FieldElement& a, const FieldElement* b = nullptr) const {
    auto need_b = [&]() -> const FieldElement& {
      if (b == nullptr) throw Error(ErrorKind::InvalidArgument, "binary field operation needs two operands");
      return *b;
    };
    switch (op) {
      case Op::Add: return add(a, need_b());
      case Op::Sub: return sub(a, need_b());
      case Op::Mul: return mul(a, need_b());
      case Op::Neg: return neg(a);
      case Op::Inv: return inv(a);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown field operation");
  }

  // Index-level conveniences used by the plane constructions.
  int add(int a, int b) const { return add_table_[a * q_ + b]; }
  int mul(int a, int b) const { return mul_table_[a * q_ + b]; }
  int sub(int a, int b) const { return index_of(sub(elements_[a], elements_[b])); }

 private:
  void check(const FieldElement& e) const {
    if (static_cast<int>(e.coeffs.size()) != k_)
      throw Error(ErrorKind::InvalidArgument, "element has wrong length for GF(" + std::to_string(q_) + ")");
    for (int c : e.coeffs)
      if (c < 0 || c >= p_) throw Error(ErrorKind::InvalidArgument, "coefficient out of range");
  }

  int q_ = 0, p_ = 0, k_ = 0;
  std::vector<int> modulus_;
  std::vector<FieldElement> elements_;
  std::vector<int> add_table_, mul_table_;
};

inline Field field_new(int q) { return Field(q); }

inline bool is_prime_power(int q) {
  if (q < 2) return false;
  int p = 2;
  while (q % p != 0) ++p;
  while (q % p == 0) q /= p;
  return q == 1;
}

}  // namespace symtri::gf
