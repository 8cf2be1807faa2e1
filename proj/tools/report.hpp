#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "symtri/bounds.hpp"
#include "symtri/gridopt.hpp"
#include "symtri/parsim.hpp"
#include "symtri/seqsim.hpp"
#include "symtri/tbp.hpp"

namespace symtb {

using nlohmann::ordered_json;

inline ordered_json to_json(const symtri::Rational& r) {
  if (r.is_integer()) return static_cast<long>(std::llround(r.to_double()));
  return ordered_json{{"exact", r.str()}, {"value", r.to_double()}};
}

inline const char* origin_name(symtri::tbp::OriginKind k) {
  switch (k) {
    case symtri::tbp::OriginKind::Affine: return "affine";
    case symtri::tbp::OriginKind::Projective: return "projective";
    case symtri::tbp::OriginKind::SteinerFile: return "file";
  }
  return "?";
}

inline ordered_json to_json(const symtri::tbp::TrianglePartition& p) {
  ordered_json j;
  j["n"] = p.n;
  j["r"] = p.r;
  j["K"] = p.K;
  j["origin"] = {{"kind", origin_name(p.origin.kind)}, {"c", p.origin.c}};
  j["blocks"] = p.R;
  j["diagonals"] = p.D;
  return j;
}

inline ordered_json to_json(const symtri::tbp::ValidationReport& r) {
  ordered_json v = ordered_json::array();
  for (const auto& x : r.violations) v.push_back({{"invariant", x.invariant}, {"witness", x.witness}});
  return {{"ok", r.ok()}, {"violations", v}};
}

inline ordered_json to_json(const symtri::gridopt::GridChoice& g) {
  ordered_json j;
  j["algo"] = symtri::parsim::to_string(g.algo);
  j["p1"] = g.p1;
  j["p2"] = g.p2;
  if (g.c) j["c"] = g.c;
  j["ideal_p1"] = g.ideal_p1;
  j["predicted_bandwidth"] = g.predicted_bandwidth;
  j["utilization"] = g.utilization;
  j["case"] = g.case_id;
  return j;
}

inline ordered_json memindep_json(const symtri::bounds::KernelShape& s, double P) {
  const auto sel = symtri::bounds::memindep_lb(s, P);
  ordered_json cases = ordered_json::array();
  for (int c = 1; c <= 3; ++c) {
    const auto pt = symtri::bounds::memindep_point(s.m, s.n1, s.n2, P, c);
    cases.push_back({{"case", c}, {"x1", pt.x1}, {"x2", pt.x2}, {"W", symtri::bounds::memindep_W_case(s, P, c)}});
  }
  return {{"P", P},
          {"case", sel.case_id},
          {"W", sel.W},
          {"lb", sel.lb},
          {"threshold1", sel.threshold1},
          {"threshold2", sel.threshold2},
          {"cases", cases}};
}

inline ordered_json ledger_json(const symtri::parsim::CostLedger& L) {
  ordered_json ranks = ordered_json::array();
  for (const auto& r : L.ranks)
    ranks.push_back({{"words_sent", to_json(r.words_sent)},
                     {"words_received", to_json(r.words_received)},
                     {"messages", r.messages},
                     {"flops", to_json(r.flops)},
                     {"owned_words", r.owned_words},
                     {"peak_memory", r.peak_memory}});
  return {{"max_words_received", to_json(L.max_words_received())},
          {"max_words_sent", to_json(L.max_words_sent())},
          {"max_messages", L.max_messages()},
          {"max_flops", to_json(L.max_flops())},
          {"max_peak_memory", L.max_peak_memory()},
          {"modeled_time", L.time},
          {"phases", L.phases.size()},
          {"ranks", ranks}};
}

// One CSV row per simulation; the column order is part of the documented interface.
struct CsvRow {
  std::string engine, kernel, algo;
  int m = 0, n1 = 0, n2 = 0;
  long M = 0;
  int P = 0, p1 = 0, p2 = 0, c = 0, b = 0;
  unsigned long seed = 0;
  long reads = 0, writes = 0;
  double max_words_received = 0;
  long max_messages = 0;
  double max_flops = 0;
  long max_peak_memory = 0;
  double bound = 0, ratio = 0;
  bool correct = false;
  double max_rel_err = 0;

  static const char* header() {
    return "engine,kernel,m,n1,n2,M,P,algo,p1,p2,c,b,seed,reads,writes,max_words_received,max_messages,"
           "max_flops,max_peak_memory,bound,ratio,correct,max_rel_err";
  }
  std::string str() const {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%d,%ld,%d,%s,%d,%d,%d,%d,%lu,%ld,%ld,%.17g,%ld,%.17g,%ld,%.17g,%.17g,%d,%.6g",
                  engine.c_str(), kernel.c_str(), m, n1, n2, M, P, algo.c_str(), p1, p2, c, b, seed, reads, writes,
                  max_words_received, max_messages, max_flops, max_peak_memory, bound, ratio, correct ? 1 : 0,
                  max_rel_err);
    return buf;
  }
};

}  // namespace symtb
