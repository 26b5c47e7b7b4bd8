#pragma once

#include <charconv>
#include <string>

#include "sleec/ast.hpp"

// Canonical text form: one declaration per line, one rule per line with
// defeaters indented on continuation lines, minimal parentheses under the
// fixed precedence (not > and > or > implies). Formatting is idempotent.

namespace sleec {

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

inline std::string format_measure_value(const MeasureValue& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
  return format_number(std::get<double>(v));
}

namespace detail {

// Binding strength; parenthesise a child whose level is below what its
// position requires. Right operands of the left-associative operators need
// strictly tighter children so that printing preserves tree shape.
inline int guard_level(const Guard& g) {
  switch (g.kind) {
    case Guard::Kind::Implies: return 1;
    case Guard::Kind::Or: return 2;
    case Guard::Kind::And: return 3;
    case Guard::Kind::Not: return 4;
    default: return 5;
  }
}

inline void format_guard_into(const Guard& g, int min_level, std::string& out) {
  int level = guard_level(g);
  bool parens = level < min_level;
  if (parens) out += "(";
  switch (g.kind) {
    case Guard::Kind::Constant:
      out += g.constant ? "true" : "false";
      break;
    case Guard::Kind::MeasureAtom:
      out += g.measure;
      break;
    case Guard::Kind::Comparison:
      out += g.measure;
      out += " ";
      out += relop_text(g.relop);
      out += " ";
      out += format_number(g.threshold);
      break;
    case Guard::Kind::Not:
      out += "not ";
      format_guard_into(g.children[0], 4, out);
      break;
    case Guard::Kind::And:
      format_guard_into(g.children[0], 3, out);
      out += " and ";
      format_guard_into(g.children[1], 4, out);
      break;
    case Guard::Kind::Or:
      format_guard_into(g.children[0], 2, out);
      out += " or ";
      format_guard_into(g.children[1], 3, out);
      break;
    case Guard::Kind::Implies:
      format_guard_into(g.children[0], 2, out);
      out += " implies ";
      format_guard_into(g.children[1], 1, out);
      break;
  }
  if (parens) out += ")";
}

}  // namespace detail

inline std::string format_guard(const Guard& g) {
  std::string out;
  detail::format_guard_into(g, 0, out);
  return out;
}

inline std::string format_duration(const Duration& d) {
  std::string unit;
  switch (d.unit) {
    case TimeUnit::Seconds: unit = "second"; break;
    case TimeUnit::Minutes: unit = "minute"; break;
    case TimeUnit::Hours: unit = "hour"; break;
  }
  if (d.magnitude != 1) unit += "s";
  return std::to_string(d.magnitude) + " " + unit;
}

inline std::string format_response(const Response& r) {
  std::string out;
  if (r.negated) out += "not ";
  out += r.event;
  if (r.window) out += " within " + format_duration(*r.window);
  return out;
}

inline std::string format_rule(const Rule& r) {
  std::string out = r.id + " when " + r.trigger_event;
  if (r.trigger_guard) out += " and " + format_guard(*r.trigger_guard);
  out += " then " + format_response(r.response) + "\n";
  for (const auto& d : r.defeaters) {
    out += "  unless " + format_guard(d.guard);
    if (d.response) out += " then " + format_response(*d.response);
    out += "\n";
  }
  return out;
}

inline std::string format_annotation(const Annotation& a) {
  switch (a.kind) {
    case AnnotationKind::Fact:
      return "fact " + a.id + " " + format_guard(a.fact) + "\n";
    case AnnotationKind::Concern:
    case AnnotationKind::Purpose: {
      std::string out = a.kind == AnnotationKind::Concern ? "concern " : "purpose ";
      out += a.id + " when " + a.trigger_event;
      if (a.trigger_guard) out += " and " + format_guard(*a.trigger_guard);
      out += " then " + format_response(a.response) + "\n";
      return out;
    }
  }
  return "";
}

inline std::string format_declaration(const CapabilityDecl& d) {
  if (d.kind == CapabilityKind::Event) return "event " + d.name + "\n";
  return "measure " + d.name + ": " +
         (d.measure_type == MeasureType::Boolean ? "boolean" : "numeric") + "\n";
}

inline std::string format_ruleset(const Ruleset& rs) {
  std::string out;
  for (const auto& d : rs.declarations) out += format_declaration(d);
  for (const auto& r : rs.rules) out += format_rule(r);
  for (const auto& a : rs.annotations) out += format_annotation(a);
  return out;
}

inline std::string format_token(const TraceToken& t) {
  switch (t.kind) {
    case TraceToken::Kind::Tock: return "tock";
    case TraceToken::Kind::Event: return t.name;
    case TraceToken::Kind::Measure: return t.name + "." + format_measure_value(t.value);
  }
  return "";
}

// Comma-space separated, the same lexical form the trace parser accepts.
inline std::string format_trace(const Trace& tr) {
  std::string out;
  for (const auto& t : tr.tokens) {
    if (!out.empty()) out += ", ";
    out += format_token(t);
  }
  return out;
}

}  // namespace sleec
