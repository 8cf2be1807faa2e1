#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "matrix.hpp"

namespace symtri::bounds {

struct KernelShape {
  Kernel kernel = Kernel::SYRK;
  int m = 1;
  double n1 = 2;
  double n2 = 1;
};

inline KernelShape shape(Kernel k, double n1, double n2) { return {k, kernel_m(k), n1, n2}; }

// Reads any sequential execution with fast memory M must perform.
inline double seq_read_lb(const KernelShape& s, double M) {
  return s.m / std::sqrt(2.0) * s.n1 * (s.n1 - 1) * s.n2 / std::sqrt(M) - 2 * M;
}

// Words some processor must receive when each holds at most M words.
inline double par_memdep_lb(const KernelShape& s, double P, double M) {
  return s.m / std::sqrt(2.0) * s.n1 * (s.n1 - 1) * s.n2 / (P * std::sqrt(M)) - 2 * M;
}

struct MemIndepResult {
  int case_id = 3;
  double W = 0;
  double lb = 0;
  // P thresholds of cases 1 and 2: m*n2/sqrt(N) and N/(m*n2)^2 with N = n1(n1-1).
  double threshold1 = 0;
  double threshold2 = 0;
};

inline int memindep_case(const KernelShape& s, double P) {
  const double N = s.n1 * (s.n1 - 1);
  const double mn2 = s.m * s.n2;
  if (s.n1 <= mn2 && P <= mn2 / std::sqrt(N)) return 1;
  if (mn2 < s.n1 && P <= N / (mn2 * mn2)) return 2;
  return 3;
}

struct MemIndepPoint {
  int case_id = 3;
  double x1 = 0;
  double x2 = 0;
};

// Closed-form minimizer of m*x1 + x2 subject to x1^2 x2 >= Z^2/2 with
// Z = N n2 / P, x1 >= 0 and N/(2P) <= x2 <= N/2, evaluated for a given case.
inline MemIndepPoint memindep_point(int m, double n1, double n2, double P, int case_id) {
  const double N = n1 * (n1 - 1);
  const double Z = N * n2 / P;
  switch (case_id) {
    case 1: return {1, n2 * std::sqrt(N) / P, N / 2};
    case 2: return {2, n2 * std::sqrt(N / P), N / (2 * P)};
    default: return {3, std::pow(m, -1.0 / 3) * std::pow(Z, 2.0 / 3), std::pow(m, 2.0 / 3) / 2 * std::pow(Z, 2.0 / 3)};
  }
}

inline MemIndepPoint memindep_opt_solve(int m, double n1, double n2, double P) {
  return memindep_point(m, n1, n2, P, memindep_case({Kernel::SYRK, m, n1, n2}, P));
}

// W of one case's formula regardless of which case the predicates select.
inline double memindep_W_case(const KernelShape& s, double P, int case_id) {
  const auto pt = memindep_point(s.m, s.n1, s.n2, P, case_id);
  return s.m * pt.x1 + pt.x2;
}

inline MemIndepResult memindep_lb(const KernelShape& s, double P) {
  MemIndepResult r;
  const double N = s.n1 * (s.n1 - 1);
  r.case_id = memindep_case(s, P);
  r.W = memindep_W_case(s, P, r.case_id);
  r.lb = r.W - (N / 2 + s.m * s.n1 * s.n2) / P;
  r.threshold1 = s.m * s.n2 / std::sqrt(N);
  r.threshold2 = N / (s.m * s.n2 * s.m * s.n2);
  return r;
}

// Largest number of inner-loop iterations reachable with budget X:
// maximize (sqrt2/2) x1 sqrt(x2) subject to m x1 + x2 <= X.
struct MemDepPoint {
  double x1 = 0;
  double x2 = 0;
  double value = 0;
};

inline MemDepPoint memdep_opt_solve(int m, double X) {
  return {2 * X / (3 * m), X / 3, std::sqrt(2.0) * std::pow(X, 1.5) / (3 * std::sqrt(3.0) * m)};
}

inline double memdep_objective(double x1, double x2) { return std::sqrt(2.0) / 2 * x1 * std::sqrt(x2); }

// Dense search over the simplex m x1 + x2 <= X; both axes carry grid+1 points
// including the boundary.
inline MemDepPoint memdep_opt_oracle(int m, double X, int grid) {
  MemDepPoint best;
  best.value = -1;
  for (int i = 0; i <= grid; ++i) {
    const double x1 = i * X / (m * static_cast<double>(grid));
    const double room = std::max(0.0, X - m * x1);
    for (int j = 0; j <= grid; ++j) {
      const double x2 = j * room / grid;
      const double v = memdep_objective(x1, x2);
      if (v > best.value) best = {x1, x2, v};
    }
  }
  return best;
}

struct MemIndepOracle {
  double x1 = 0;
  double x2 = 0;
  double value = std::numeric_limits<double>::infinity();
};

// Search x2 over [N/(2P), N/2]; for each x2 the cheapest feasible x1 is
// Z / sqrt(2 x2), rejected when it exceeds m n1 n2.
inline MemIndepOracle memindep_opt_oracle(int m, double n1, double n2, double P, int grid) {
  const double N = n1 * (n1 - 1);
  const double Z = N * n2 / P;
  const double lo = N / (2 * P), hi = N / 2;
  MemIndepOracle best;
  for (int j = 0; j <= grid; ++j) {
    const double x2 = lo + (hi - lo) * j / grid;
    const double x1 = Z / std::sqrt(2 * x2);
    if (x1 > m * n1 * n2) continue;
    const double v = m * x1 + x2;
    if (v < best.value) best = {x1, x2, v};
  }
  return best;
}

// Relative KKT residual (stationarity, complementary slackness, primal and
// dual feasibility) of the closed-form point with the multipliers derived for
// its case. Constraints are written g(x) <= 0.
inline double kkt_residual(int m, double n1, double n2, double P, const MemIndepPoint& pt) {
  const double N = n1 * (n1 - 1);
  const double Z = N * n2 / P;
  const double x1 = pt.x1, x2 = pt.x2;
  const std::array<double, 4> g = {Z * Z / 2 - x1 * x1 * x2, -x1, N / (2 * P) - x2, x2 - N / 2};
  const std::array<double, 4> gscale = {Z * Z / 2, std::max(x1, 1.0), N / (2 * P), N / 2};
  const std::array<std::array<double, 2>, 4> dg = {{{-2 * x1 * x2, -x1 * x1}, {-1, 0}, {0, -1}, {0, 1}}};
  std::array<double, 4> mu{};
  const double rN = std::sqrt(N);
  switch (pt.case_id) {
    case 1: mu = {m * P / (N * rN * n2), 0, 0, m * n2 / (rN * P) - 1}; break;
    case 2: mu = {m * std::pow(P, 1.5) / (N * rN * n2), 0, 1 - m * n2 * std::sqrt(P / N), 0}; break;
    default: mu = {std::pow(m, 2.0 / 3) * std::pow(Z, -4.0 / 3), 0, 0, 0}; break;
  }
  double res = 0;
  for (int d = 0; d < 2; ++d) {
    double s = d == 0 ? m : 1.0;
    double scale = std::abs(s);
    for (int i = 0; i < 4; ++i) {
      s += mu[i] * dg[i][d];
      scale += std::abs(mu[i] * dg[i][d]);
    }
    res = std::max(res, std::abs(s) / scale);
  }
  for (int i = 0; i < 4; ++i) {
    res = std::max(res, std::max(0.0, g[i]) / gscale[i]);
    res = std::max(res, std::max(0.0, -mu[i]));
    res = std::max(res, std::abs(mu[i] * g[i]) / (std::abs(mu[i]) * gscale[i] + 1e-300));
  }
  return res;
}

}  // namespace symtri::bounds
