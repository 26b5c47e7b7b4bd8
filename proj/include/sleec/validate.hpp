#pragma once

#include <set>
#include <string>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/atoms.hpp"

// Static well-typedness of a ruleset: name resolution, id uniqueness, naming
// conventions, and guard/measure type agreement. Errors are returned as data.

namespace sleec {

namespace detail {

inline void check_guard_types(const Guard& g, const Ruleset& rs, const char* where,
                              std::vector<Diagnostic>& out) {
  switch (g.kind) {
    case Guard::Kind::MeasureAtom: {
      const CapabilityDecl* d = rs.find_declaration(g.measure);
      if (!d || d->kind != CapabilityKind::Measure)
        out.push_back({Severity::Error, "unknown-name",
                       std::string(where) + ": '" + g.measure +
                           "' is not a declared measure",
                       g.span});
      else if (d->measure_type != MeasureType::Boolean)
        out.push_back({Severity::Error, "type-mismatch",
                       std::string(where) + ": measure '" + g.measure +
                           "' is numeric and needs a comparison",
                       g.span});
      break;
    }
    case Guard::Kind::Comparison: {
      const CapabilityDecl* d = rs.find_declaration(g.measure);
      if (!d || d->kind != CapabilityKind::Measure)
        out.push_back({Severity::Error, "unknown-name",
                       std::string(where) + ": '" + g.measure +
                           "' is not a declared measure",
                       g.span});
      else if (d->measure_type != MeasureType::Numeric)
        out.push_back({Severity::Error, "type-mismatch",
                       std::string(where) + ": measure '" + g.measure +
                           "' is boolean and cannot be compared to a number",
                       g.span});
      break;
    }
    default:
      break;
  }
  for (const auto& c : g.children) check_guard_types(c, rs, where, out);
}

inline void check_event_use(const std::string& name, const SourceSpan& span,
                            const Ruleset& rs, const char* where,
                            std::vector<Diagnostic>& out) {
  const CapabilityDecl* d = rs.find_declaration(name);
  if (!d || d->kind != CapabilityKind::Event)
    out.push_back({Severity::Error, "unknown-name",
                   std::string(where) + ": '" + name + "' is not a declared event",
                   span});
}

inline void check_response(const Response& r, const Ruleset& rs, const char* where,
                           std::vector<Diagnostic>& out) {
  check_event_use(r.event, r.span, rs, where, out);
  if (r.window && r.window->magnitude < 0)
    out.push_back({Severity::Error, "bad-duration",
                   std::string(where) + ": negative duration", r.span});
}

}  // namespace detail

// Name-resolution phase: every parse result that reaches the caller has
// already passed this.
inline std::vector<Diagnostic> resolve_names(const Ruleset& rs) {
  std::vector<Diagnostic> out;

  std::set<std::string> decl_names;
  for (const auto& d : rs.declarations) {
    if (d.kind == CapabilityKind::Event && !is_event_name(d.name))
      out.push_back({Severity::Error, "bad-name",
                     "event name '" + d.name + "' must begin with an uppercase letter",
                     d.span});
    if (d.kind == CapabilityKind::Measure && !is_measure_name(d.name))
      out.push_back({Severity::Error, "bad-name",
                     "measure name '" + d.name + "' must begin with a lowercase letter",
                     d.span});
    if (d.name.find('\'') != std::string::npos)
      out.push_back({Severity::Error, "bad-name",
                     "the prime character is legal in rule ids only", d.span});
    if (!decl_names.insert(d.name).second)
      out.push_back({Severity::Error, "duplicate-declaration",
                     "duplicate declaration of '" + d.name + "'", d.span});
  }

  std::set<std::string> ids;
  for (const auto& r : rs.rules) {
    if (r.id.empty() || !(r.id[0] >= 'A' && r.id[0] <= 'Z'))
      out.push_back({Severity::Error, "bad-name",
                     "rule id '" + r.id + "' must begin with an uppercase letter", r.span});
    if (!ids.insert(r.id).second)
      out.push_back(
          {Severity::Error, "duplicate-id", "duplicate id '" + r.id + "'", r.span});
    std::string where = "rule " + r.id;
    detail::check_event_use(r.trigger_event, r.span, rs, where.c_str(), out);
    if (r.trigger_guard) detail::check_guard_types(*r.trigger_guard, rs, where.c_str(), out);
    detail::check_response(r.response, rs, where.c_str(), out);
    for (const auto& d : r.defeaters) {
      detail::check_guard_types(d.guard, rs, where.c_str(), out);
      if (d.response) detail::check_response(*d.response, rs, where.c_str(), out);
    }
  }

  for (const auto& a : rs.annotations) {
    if (!ids.insert(a.id).second)
      out.push_back(
          {Severity::Error, "duplicate-id", "duplicate id '" + a.id + "'", a.span});
    std::string where = "annotation " + a.id;
    if (a.kind == AnnotationKind::Fact) {
      detail::check_guard_types(a.fact, rs, where.c_str(), out);
    } else {
      detail::check_event_use(a.trigger_event, a.span, rs, where.c_str(), out);
      if (a.trigger_guard)
        detail::check_guard_types(*a.trigger_guard, rs, where.c_str(), out);
      detail::check_response(a.response, rs, where.c_str(), out);
    }
  }
  return out;
}

struct ValidationResult {
  std::vector<Diagnostic> errors;
  std::vector<Finding> warnings;

  bool ok() const { return errors.empty(); }
};

// Full validation: name resolution, then satisfiability warnings for trigger
// guards that no fact-consistent valuation can make true.
inline ValidationResult validate_ruleset(const Ruleset& rs) {
  ValidationResult result;
  result.errors = resolve_names(rs);
  if (!result.errors.empty()) return result;

  ValuationSpace space = build_valuation_space(rs);
  if (space.facts_unsatisfiable) {
    Finding f;
    f.kind = FindingKind::Warning;
    f.message = "the fact annotations are jointly unsatisfiable";
    result.warnings.push_back(std::move(f));
    return result;
  }
  auto warn_unsat = [&](const std::string& id, const Guard& g, const char* what) {
    if (!guard_satisfiable(g, space)) {
      Finding f;
      f.kind = FindingKind::Warning;
      f.rule_ids = {id};
      f.message = std::string(what) + " of " + id +
                  " is unsatisfiable under the declared facts";
      f.location = g.span;
      result.warnings.push_back(std::move(f));
    }
  };
  for (const auto& r : rs.rules)
    if (r.trigger_guard) warn_unsat(r.id, *r.trigger_guard, "trigger guard");
  for (const auto& a : rs.annotations) {
    if (a.kind == AnnotationKind::Fact) continue;
    if (a.trigger_guard) warn_unsat(a.id, *a.trigger_guard, "trigger guard");
  }
  return result;
}

}  // namespace sleec
