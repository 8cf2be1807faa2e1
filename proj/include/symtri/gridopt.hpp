#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "bounds.hpp"
#include "errors.hpp"
#include "gf.hpp"
#include "parsim.hpp"

namespace symtri::gridopt {

struct GridChoice {
  parsim::Algo algo = parsim::Algo::OneD;
  int p1 = 1;
  int p2 = 1;
  int c = 0;
  double ideal_p1 = 1;
  double predicted_bandwidth = 0;
  double utilization = 1;
  int case_id = 3;  // memory-independent case of the shape at P
};

// p1 values a 2D/3D grid can use: c(c+1) for prime powers c <= 64, ascending.
inline const std::vector<int>& feasible_p1() {
  static const std::vector<int> v = [] {
    std::vector<int> out;
    for (int c = 2; c <= gf::Field::kMaxOrder; ++c)
      if (gf::is_prime_power(c)) out.push_back(c * (c + 1));
    return out;
  }();
  return v;
}

// Largest feasible p1 <= limit, or 0.
inline int round_down_p1(double limit) {
  int best = 0;
  for (int p : feasible_p1())
    if (p <= limit) best = p;
  return best;
}

inline double bandwidth_1d(const bounds::KernelShape& s, int P) { return s.n1 * (s.n1 + 1) / 2 * (1 - 1.0 / P); }

inline double bandwidth_2d(const bounds::KernelShape& s, int c) {
  const double p1 = c * (c + 1.0);
  return s.m * s.n1 * s.n2 / c * (1 - 1 / p1);
}

// Row-block all-to-alls plus the reduce-scatter / all-gather of one extended
// triangle block.
inline double bandwidth_3d_terms(const bounds::KernelShape& s, double c, double p2, double* term1, double* term2) {
  const double p1 = c * (c + 1), h = s.n1 / (c * c);
  const double t1 = s.m * s.n1 * s.n2 / (c * p2) * (1 - 1 / p1);
  const double t2 = (c * (c - 1) / 2 * h * h + h * (h + 1) / 2) * (1 - 1 / p2);
  if (term1) *term1 = t1;
  if (term2) *term2 = t2;
  return t1 + t2;
}

inline double bandwidth_3d(const bounds::KernelShape& s, int c, int p2) {
  return bandwidth_3d_terms(s, c, p2, nullptr, nullptr);
}

inline double ideal_p1(const bounds::KernelShape& s, int P) { return std::pow(s.n1 * P / (s.m * s.n2), 2.0 / 3); }

inline GridChoice choice_1d(const bounds::KernelShape& s, int P) {
  GridChoice g;
  g.algo = parsim::Algo::OneD;
  g.p2 = P;
  g.predicted_bandwidth = bandwidth_1d(s, P);
  return g;
}

inline GridChoice choice_2d(const bounds::KernelShape& s, int P) {
  GridChoice g;
  g.algo = parsim::Algo::TwoD;
  g.p1 = round_down_p1(P);
  if (g.p1 == 0) throw Error(ErrorKind::InfeasibleGrid, "2D needs P >= 6");
  g.c = parsim::grid_c(g.p1);
  g.predicted_bandwidth = bandwidth_2d(s, g.c);
  g.utilization = static_cast<double>(g.p1) / P;
  return g;
}

inline GridChoice choice_3d(const bounds::KernelShape& s, int P) {
  GridChoice g;
  g.algo = parsim::Algo::ThreeD;
  g.ideal_p1 = ideal_p1(s, P);
  g.p1 = round_down_p1(std::min<double>(g.ideal_p1, P));
  if (g.p1 == 0 && feasible_p1().front() <= P) g.p1 = feasible_p1().front();  // ideal below the smallest grid
  if (g.p1 == 0) throw Error(ErrorKind::InfeasibleGrid, "3D needs P >= 6");
  g.c = parsim::grid_c(g.p1);
  g.p2 = P / g.p1;
  g.predicted_bandwidth = bandwidth_3d(s, g.c, g.p2);
  g.utilization = static_cast<double>(g.p1 * g.p2) / P;
  return g;
}

// Cheapest of the three families by predicted bandwidth; ties go to the
// lower-dimensional one.
inline GridChoice select_grid(const bounds::KernelShape& s, int P) {
  if (P < 1) throw Error(ErrorKind::InvalidArgument, "P must be >= 1");
  const int case_id = bounds::memindep_case(s, P);
  GridChoice best = choice_1d(s, P);
  best.ideal_p1 = ideal_p1(s, P);
  if (round_down_p1(P) > 0) {
    for (const auto& g : {choice_2d(s, P), choice_3d(s, P)})
      if (g.predicted_bandwidth < best.predicted_bandwidth) best = g;
  }
  best.ideal_p1 = ideal_p1(s, P);
  best.case_id = case_id;
  return best;
}

struct LimitedParams {
  int p1 = 0;
  int p2 = 0;
  int c = 0;
  int b = 1;
};

// p2 is the divisor of P nearest to x (smaller one on ties, never 1 when P > 1),
// p1 the largest feasible c(c+1) <= P/p2. A positive c_hint fixes the c used
// for the block width.
inline LimitedParams limited_params(int P, double x, int n1, int c_hint = 0) {
  if (P < 1 || x <= 0) throw Error(ErrorKind::InvalidArgument, "need P >= 1 and x > 0");
  LimitedParams lp;
  double gap = INFINITY;
  for (int d = (P > 1 ? 2 : 1); d <= P; ++d)
    if (P % d == 0 && std::abs(d - x) < gap) {
      gap = std::abs(d - x);
      lp.p2 = d;
    }
  lp.p1 = round_down_p1(P / lp.p2);
  if (lp.p1 == 0)
    throw Error(ErrorKind::InfeasibleGrid, "P/p2 = " + std::to_string(P / lp.p2) + " leaves no feasible p1");
  lp.c = parsim::grid_c(lp.p1);
  const int cb = c_hint > 0 ? c_hint : lp.c;
  lp.b = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n1) / cb))));
  return lp;
}

}  // namespace symtri::gridopt
