#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// Core value types for SLEEC rulesets and traces. Everything here is an
// immutable value after construction; no I/O, no global state.

namespace sleec {

// ---------------------------------------------------------------------------
// Source locations and diagnostics

struct SourceSpan {
  std::size_t begin = 0;  // byte offset, inclusive
  std::size_t end = 0;    // byte offset, exclusive
  int begin_line = 1;
  int begin_col = 1;
  int end_line = 1;
  int end_col = 1;
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;     // short stable identifier, e.g. "syntax", "unknown-name"
  std::string message;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Capabilities

enum class CapabilityKind { Event, Measure };
enum class MeasureType { Boolean, Numeric };

struct CapabilityDecl {
  CapabilityKind kind = CapabilityKind::Event;
  std::string name;
  MeasureType measure_type = MeasureType::Boolean;  // meaningful iff kind == Measure
  SourceSpan span;

  friend bool operator==(const CapabilityDecl& a, const CapabilityDecl& b) {
    return a.kind == b.kind && a.name == b.name &&
           (a.kind != CapabilityKind::Measure || a.measure_type == b.measure_type);
  }
};

// Events are capitalised, measures start lowercase.
inline bool is_event_name(const std::string& s) {
  return !s.empty() && s[0] >= 'A' && s[0] <= 'Z';
}
inline bool is_measure_name(const std::string& s) {
  return !s.empty() && s[0] >= 'a' && s[0] <= 'z';
}

// ---------------------------------------------------------------------------
// Guards

enum class Relop { Lt, Le, Gt, Ge, Eq, Ne };

inline const char* relop_text(Relop op) {
  switch (op) {
    case Relop::Lt: return "<";
    case Relop::Le: return "<=";
    case Relop::Gt: return ">";
    case Relop::Ge: return ">=";
    case Relop::Eq: return "=";
    case Relop::Ne: return "!=";
  }
  return "?";
}

// Expression tree over measures. Comparison applies to numeric measures,
// MeasureAtom to boolean ones.
struct Guard {
  enum class Kind { Constant, MeasureAtom, Comparison, Not, And, Or, Implies };

  Kind kind = Kind::Constant;
  bool constant = false;            // Constant
  std::string measure;              // MeasureAtom, Comparison
  Relop relop = Relop::Lt;          // Comparison
  double threshold = 0.0;           // Comparison
  std::vector<Guard> children;      // Not (1), And/Or (2+), Implies (2)
  SourceSpan span;

  static Guard constant_guard(bool v) {
    Guard g;
    g.kind = Kind::Constant;
    g.constant = v;
    return g;
  }
  static Guard atom(std::string name) {
    Guard g;
    g.kind = Kind::MeasureAtom;
    g.measure = std::move(name);
    return g;
  }
  static Guard comparison(std::string name, Relop op, double value) {
    Guard g;
    g.kind = Kind::Comparison;
    g.measure = std::move(name);
    g.relop = op;
    g.threshold = value;
    return g;
  }
  static Guard negation(Guard inner) {
    Guard g;
    g.kind = Kind::Not;
    g.children.push_back(std::move(inner));
    return g;
  }
  static Guard binary(Kind k, Guard lhs, Guard rhs) {
    Guard g;
    g.kind = k;
    g.children.push_back(std::move(lhs));
    g.children.push_back(std::move(rhs));
    return g;
  }

  friend bool operator==(const Guard& a, const Guard& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Constant: return a.constant == b.constant;
      case Kind::MeasureAtom: return a.measure == b.measure;
      case Kind::Comparison:
        return a.measure == b.measure && a.relop == b.relop && a.threshold == b.threshold;
      default: break;
    }
    return a.children == b.children;
  }
};

// ---------------------------------------------------------------------------
// Time

enum class TimeUnit { Seconds, Minutes, Hours };

inline std::int64_t unit_seconds(TimeUnit u) {
  switch (u) {
    case TimeUnit::Seconds: return 1;
    case TimeUnit::Minutes: return 60;
    case TimeUnit::Hours: return 3600;
  }
  return 1;
}

struct Duration {
  std::int64_t magnitude = 0;  // non-negative
  TimeUnit unit = TimeUnit::Minutes;

  std::int64_t seconds() const { return magnitude * unit_seconds(unit); }

  friend bool operator==(const Duration& a, const Duration& b) {
    return a.seconds() == b.seconds();
  }
};

// ---------------------------------------------------------------------------
// Rules

struct Response {
  bool negated = false;
  std::string event;
  std::optional<Duration> window;  // absent: due/prohibited within the trigger's own unit
  SourceSpan span;

  friend bool operator==(const Response& a, const Response& b) {
    return a.negated == b.negated && a.event == b.event && a.window == b.window;
  }
};

// A defeater without a response suspends the rule entirely when its guard holds.
struct Defeater {
  Guard guard;
  std::optional<Response> response;
  SourceSpan span;

  friend bool operator==(const Defeater& a, const Defeater& b) {
    return a.guard == b.guard && a.response == b.response;
  }
};

// Defeaters are listed in nesting order: the last-listed one is outermost and
// wins when several guards hold.
struct Rule {
  std::string id;
  std::string trigger_event;
  std::optional<Guard> trigger_guard;
  Response response;
  std::vector<Defeater> defeaters;
  SourceSpan span;

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.id == b.id && a.trigger_event == b.trigger_event &&
           a.trigger_guard == b.trigger_guard && a.response == b.response &&
           a.defeaters == b.defeaters;
  }
};

// ---------------------------------------------------------------------------
// Annotations: analysis inputs that are not rules

enum class AnnotationKind { Concern, Purpose, Fact };

// Concern/Purpose carry a rule-shaped pattern; Fact carries only a guard that
// must hold of every measure valuation.
struct Annotation {
  AnnotationKind kind = AnnotationKind::Fact;
  std::string id;
  std::string trigger_event;          // Concern/Purpose
  std::optional<Guard> trigger_guard; // Concern/Purpose
  Response response;                  // Concern/Purpose
  Guard fact;                         // Fact
  SourceSpan span;

  friend bool operator==(const Annotation& a, const Annotation& b) {
    if (a.kind != b.kind || a.id != b.id) return false;
    if (a.kind == AnnotationKind::Fact) return a.fact == b.fact;
    return a.trigger_event == b.trigger_event && a.trigger_guard == b.trigger_guard &&
           a.response == b.response;
  }
};

// ---------------------------------------------------------------------------
// Ruleset

struct Ruleset {
  std::vector<CapabilityDecl> declarations;
  std::vector<Rule> rules;
  std::vector<Annotation> annotations;

  const CapabilityDecl* find_declaration(const std::string& name) const {
    for (const auto& d : declarations)
      if (d.name == name) return &d;
    return nullptr;
  }
  const Rule* find_rule(const std::string& id) const {
    for (const auto& r : rules)
      if (r.id == id) return &r;
    return nullptr;
  }
  const Annotation* find_annotation(const std::string& id) const {
    for (const auto& a : annotations)
      if (a.id == id) return &a;
    return nullptr;
  }

  friend bool operator==(const Ruleset& a, const Ruleset& b) {
    return a.declarations == b.declarations && a.rules == b.rules &&
           a.annotations == b.annotations;
  }
};

// ---------------------------------------------------------------------------
// Traces

using MeasureValue = std::variant<bool, double>;

struct TraceToken {
  enum class Kind { Event, Measure, Tock };

  Kind kind = Kind::Tock;
  std::string name;     // Event, Measure
  MeasureValue value;   // Measure

  static TraceToken event(std::string name) {
    TraceToken t;
    t.kind = Kind::Event;
    t.name = std::move(name);
    return t;
  }
  static TraceToken measure(std::string name, MeasureValue v) {
    TraceToken t;
    t.kind = Kind::Measure;
    t.name = std::move(name);
    t.value = v;
    return t;
  }
  static TraceToken tock() { return TraceToken{}; }

  friend bool operator==(const TraceToken& a, const TraceToken& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
      case Kind::Tock: return true;
      case Kind::Event: return a.name == b.name;
      case Kind::Measure: return a.name == b.name && a.value == b.value;
    }
    return false;
  }
};

struct Trace {
  std::vector<TraceToken> tokens;

  // Timestamp of tokens[i] = number of Tock tokens strictly before it.
  std::int64_t timestamp_of(std::size_t index) const {
    std::int64_t t = 0;
    for (std::size_t i = 0; i < index && i < tokens.size(); ++i)
      if (tokens[i].kind == TraceToken::Kind::Tock) ++t;
    return t;
  }
  std::int64_t total_tocks() const {
    std::int64_t t = 0;
    for (const auto& tok : tokens)
      if (tok.kind == TraceToken::Kind::Tock) ++t;
    return t;
  }

  friend bool operator==(const Trace& a, const Trace& b) { return a.tokens == b.tokens; }
};

// ---------------------------------------------------------------------------
// Requirements and findings

enum class RequirementKind { Obligation, Prohibition };

// An activated obligation or prohibition: the atom of all semantic checks.
// Window ends are inclusive tock indices; start equals the trigger timestamp.
struct Requirement {
  std::string source_rule;
  RequirementKind kind = RequirementKind::Obligation;
  std::string event;
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool covers(std::int64_t t) const { return t >= start && t <= end; }

  friend bool operator==(const Requirement& a, const Requirement& b) {
    return a.source_rule == b.source_rule && a.kind == b.kind && a.event == b.event &&
           a.start == b.start && a.end == b.end;
  }
};

enum class FindingKind {
  Conflict,
  Redundancy,
  Insufficiency,
  OverRestrictiveness,
  Violation,
  Warning
};

inline const char* finding_kind_text(FindingKind k) {
  switch (k) {
    case FindingKind::Conflict: return "conflict";
    case FindingKind::Redundancy: return "redundancy";
    case FindingKind::Insufficiency: return "insufficiency";
    case FindingKind::OverRestrictiveness: return "over-restrictiveness";
    case FindingKind::Violation: return "violation";
    case FindingKind::Warning: return "warning";
  }
  return "?";
}

struct Finding {
  FindingKind kind = FindingKind::Warning;
  std::vector<std::string> rule_ids;
  std::optional<std::string> annotation_id;
  std::optional<Trace> witness;
  std::optional<std::int64_t> horizon;  // set for bounded-search findings
  std::string message;
  std::optional<SourceSpan> location;
};

inline bool finding_is_warning(const Finding& f) { return f.kind == FindingKind::Warning; }

}  // namespace sleec
