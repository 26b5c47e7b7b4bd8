#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/semantics.hpp"

// Finite measure abstraction used by the bounded analyses: guards only observe
// the atoms that appear in the ruleset, so enumerating truth assignments over
// those atoms (with a concrete representative value per numeric region) is
// exact for rule semantics.

namespace sleec {

// One total assignment of concrete values to the guard-relevant measures,
// consistent with every fact annotation.
struct Valuation {
  std::vector<std::pair<std::string, MeasureValue>> values;  // declaration order

  MeasureState to_measure_state() const {
    MeasureState ms;
    for (const auto& [name, v] : values) ms.set(name, v);
    return ms;
  }
};

struct ValuationSpace {
  std::vector<std::string> measures;                          // declaration order
  std::vector<std::vector<MeasureValue>> candidates;          // per measure, ascending
  std::vector<Valuation> consistent;                          // fact-filtered, canonical order
  bool facts_unsatisfiable = false;
};

namespace detail {

inline void collect_ruleset_guards(const Ruleset& rs, std::vector<const Guard*>& out) {
  for (const auto& r : rs.rules) {
    if (r.trigger_guard) out.push_back(&*r.trigger_guard);
    for (const auto& d : r.defeaters) out.push_back(&d.guard);
  }
  for (const auto& a : rs.annotations) {
    if (a.kind == AnnotationKind::Fact)
      out.push_back(&a.fact);
    else if (a.trigger_guard)
      out.push_back(&*a.trigger_guard);
  }
}

inline void collect_thresholds(const Guard& g, const std::string& measure,
                               std::set<double>& out) {
  if (g.kind == Guard::Kind::Comparison && g.measure == measure) out.insert(g.threshold);
  for (const auto& c : g.children) collect_thresholds(c, measure, out);
}

// Representative values: one per region of the threshold partition, plus the
// thresholds themselves, deduplicated by the atom signature they induce.
inline std::vector<MeasureValue> numeric_candidates(
    const std::vector<const Guard*>& guards, const std::string& measure) {
  std::set<double> thresholds;
  for (const Guard* g : guards) collect_thresholds(*g, measure, thresholds);
  std::vector<double> cs(thresholds.begin(), thresholds.end());
  std::vector<double> points;
  if (cs.empty()) {
    points.push_back(0.0);
  } else {
    points.push_back(cs.front() - 1.0);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      points.push_back(cs[i]);
      if (i + 1 < cs.size()) points.push_back((cs[i] + cs[i + 1]) / 2.0);
    }
    points.push_back(cs.back() + 1.0);
  }
  // Dedupe points that satisfy exactly the same atoms.
  auto signature = [&](double v) {
    std::vector<bool> sig;
    for (double c : cs)
      for (Relop op : {Relop::Lt, Relop::Le, Relop::Eq})
        sig.push_back(compare_values(v, op, c));
    return sig;
  };
  std::vector<MeasureValue> out;
  std::vector<std::vector<bool>> seen;
  for (double v : points) {
    auto sig = signature(v);
    bool dup = false;
    for (const auto& s : seen) dup = dup || s == sig;
    if (!dup) {
      seen.push_back(sig);
      out.emplace_back(v);
    }
  }
  return out;
}

}  // namespace detail

inline std::vector<std::string> guard_relevant_measures(const Ruleset& rs) {
  std::vector<const Guard*> guards;
  detail::collect_ruleset_guards(rs, guards);
  std::set<std::string> present;
  for (const Guard* g : guards) {
    std::vector<std::string> ms;
    collect_guard_measures(*g, ms);
    present.insert(ms.begin(), ms.end());
  }
  std::vector<std::string> out;
  for (const auto& d : rs.declarations)
    if (d.kind == CapabilityKind::Measure && present.count(d.name)) out.push_back(d.name);
  return out;
}

// Enumerates fact-consistent total assignments in canonical order: measures in
// declaration order, boolean values false before true, numeric representatives
// low before high. `extra_guards` widens the atom set beyond the ruleset's own
// guards (the conformance checker passes the agent model's guards here).
inline ValuationSpace build_valuation_space(
    const Ruleset& rs, const std::vector<const Guard*>& extra_guards = {}) {
  ValuationSpace space;
  std::vector<const Guard*> guards;
  detail::collect_ruleset_guards(rs, guards);
  for (const Guard* g : extra_guards) guards.push_back(g);

  std::set<std::string> present;
  for (const Guard* g : guards) {
    std::vector<std::string> ms;
    collect_guard_measures(*g, ms);
    present.insert(ms.begin(), ms.end());
  }
  for (const auto& d : rs.declarations)
    if (d.kind == CapabilityKind::Measure && present.count(d.name))
      space.measures.push_back(d.name);

  for (const auto& name : space.measures) {
    const CapabilityDecl* decl = rs.find_declaration(name);
    if (decl && decl->measure_type == MeasureType::Numeric)
      space.candidates.push_back(detail::numeric_candidates(guards, name));
    else
      space.candidates.push_back({MeasureValue{false}, MeasureValue{true}});
  }

  std::vector<const Guard*> facts;
  for (const auto& a : rs.annotations)
    if (a.kind == AnnotationKind::Fact) facts.push_back(&a.fact);

  std::vector<std::size_t> index(space.measures.size(), 0);
  bool done = space.measures.empty() ? false : false;
  while (true) {
    Valuation v;
    for (std::size_t i = 0; i < space.measures.size(); ++i)
      v.values.emplace_back(space.measures[i], space.candidates[i][index[i]]);
    MeasureState ms = v.to_measure_state();
    bool ok = true;
    for (const Guard* f : facts) ok = ok && eval_guard(*f, ms) == Truth::True;
    if (ok) space.consistent.push_back(std::move(v));
    // Odometer increment, last measure fastest.
    std::size_t i = space.measures.size();
    while (i > 0) {
      --i;
      if (++index[i] < space.candidates[i].size()) break;
      index[i] = 0;
      if (i == 0) done = true;
    }
    if (space.measures.empty() || done) break;
  }
  if (space.measures.empty() && space.consistent.empty()) {
    // No guard-relevant measures: the single empty valuation, unless a
    // constant-false fact rules everything out.
    Valuation v;
    MeasureState ms;
    bool ok = true;
    for (const Guard* f : facts) ok = ok && eval_guard(*f, ms) == Truth::True;
    if (ok) space.consistent.push_back(std::move(v));
  }
  space.facts_unsatisfiable = space.consistent.empty();
  return space;
}

// True if some fact-consistent valuation makes the guard true.
inline bool guard_satisfiable(const Guard& g, const ValuationSpace& space) {
  for (const auto& v : space.consistent) {
    MeasureState ms = v.to_measure_state();
    if (eval_guard(g, ms) == Truth::True) return true;
  }
  return false;
}

// Projects the consistent valuations onto a subset of measures, deduplicating.
// The projection keeps exactly the assignments extendible to a fact-consistent
// total assignment.
inline std::vector<Valuation> project_valuations(const ValuationSpace& space,
                                                 const std::vector<std::string>& keep) {
  std::vector<Valuation> out;
  for (const auto& v : space.consistent) {
    Valuation p;
    for (const auto& [name, value] : v.values)
      if (std::find(keep.begin(), keep.end(), name) != keep.end())
        p.values.emplace_back(name, value);
    bool dup = false;
    for (const auto& q : out) {
      bool same = q.values.size() == p.values.size();
      for (std::size_t i = 0; same && i < q.values.size(); ++i)
        same = q.values[i].first == p.values[i].first &&
               q.values[i].second == p.values[i].second;
      dup = dup || same;
    }
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace sleec
