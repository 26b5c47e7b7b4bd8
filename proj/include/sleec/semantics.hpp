#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sleec/ast.hpp"

// Discrete-time meaning of rules: guard evaluation over the last-read measure
// values, rule activation with defeater resolution, duration normalisation,
// and offline checking of a complete trace.

namespace sleec {

struct TimeConfig {
  Duration quantum{1, TimeUnit::Minutes};
};

class NonIntegralDuration : public std::runtime_error {
 public:
  explicit NonIntegralDuration(const std::string& what) : std::runtime_error(what) {}
};

// Exact normalisation: the duration must be an integer multiple of the quantum.
inline std::int64_t to_tocks(const Duration& d, const TimeConfig& cfg) {
  std::int64_t q = cfg.quantum.seconds();
  if (q <= 0) throw NonIntegralDuration("time quantum must be positive");
  std::int64_t s = d.seconds();
  if (s % q != 0)
    throw NonIntegralDuration("duration of " + std::to_string(s) +
                              "s is not a multiple of the " + std::to_string(q) +
                              "s quantum");
  return s / q;
}

// ---------------------------------------------------------------------------
// Three-valued guard evaluation

enum class Truth { False, True, Unknown };

inline Truth truth_not(Truth t) {
  if (t == Truth::Unknown) return Truth::Unknown;
  return t == Truth::True ? Truth::False : Truth::True;
}
inline Truth truth_and(Truth a, Truth b) {
  if (a == Truth::False || b == Truth::False) return Truth::False;
  if (a == Truth::Unknown || b == Truth::Unknown) return Truth::Unknown;
  return Truth::True;
}
inline Truth truth_or(Truth a, Truth b) {
  if (a == Truth::True || b == Truth::True) return Truth::True;
  if (a == Truth::Unknown || b == Truth::Unknown) return Truth::Unknown;
  return Truth::False;
}

// Last-read value per measure; a measure never read is Unknown.
struct MeasureState {
  std::map<std::string, MeasureValue> values;

  void set(const std::string& name, MeasureValue v) { values[name] = v; }
  const MeasureValue* read(const std::string& name) const {
    auto it = values.find(name);
    return it == values.end() ? nullptr : &it->second;
  }
};

inline bool compare_values(double lhs, Relop op, double rhs) {
  switch (op) {
    case Relop::Lt: return lhs < rhs;
    case Relop::Le: return lhs <= rhs;
    case Relop::Gt: return lhs > rhs;
    case Relop::Ge: return lhs >= rhs;
    case Relop::Eq: return lhs == rhs;
    case Relop::Ne: return lhs != rhs;
  }
  return false;
}

// Strong Kleene logic; Unknown arises only from measures never read.
inline Truth eval_guard(const Guard& g, const MeasureState& m) {
  switch (g.kind) {
    case Guard::Kind::Constant:
      return g.constant ? Truth::True : Truth::False;
    case Guard::Kind::MeasureAtom: {
      const MeasureValue* v = m.read(g.measure);
      if (!v || !std::holds_alternative<bool>(*v)) return Truth::Unknown;
      return std::get<bool>(*v) ? Truth::True : Truth::False;
    }
    case Guard::Kind::Comparison: {
      const MeasureValue* v = m.read(g.measure);
      if (!v || !std::holds_alternative<double>(*v)) return Truth::Unknown;
      return compare_values(std::get<double>(*v), g.relop, g.threshold) ? Truth::True
                                                                        : Truth::False;
    }
    case Guard::Kind::Not:
      return truth_not(eval_guard(g.children[0], m));
    case Guard::Kind::And:
      return truth_and(eval_guard(g.children[0], m), eval_guard(g.children[1], m));
    case Guard::Kind::Or:
      return truth_or(eval_guard(g.children[0], m), eval_guard(g.children[1], m));
    case Guard::Kind::Implies:
      return truth_or(truth_not(eval_guard(g.children[0], m)),
                      eval_guard(g.children[1], m));
  }
  return Truth::Unknown;
}

inline void collect_guard_measures(const Guard& g, std::vector<std::string>& out) {
  switch (g.kind) {
    case Guard::Kind::MeasureAtom:
    case Guard::Kind::Comparison:
      out.push_back(g.measure);
      break;
    default:
      break;
  }
  for (const auto& c : g.children) collect_guard_measures(c, out);
}

inline std::vector<std::string> unknown_measures(const Guard& g, const MeasureState& m) {
  std::vector<std::string> all;
  collect_guard_measures(g, all);
  std::vector<std::string> unknown;
  for (auto& name : all) {
    if (!m.read(name)) {
      bool seen = false;
      for (const auto& u : unknown) seen = seen || u == name;
      if (!seen) unknown.push_back(name);
    }
  }
  return unknown;
}

// ---------------------------------------------------------------------------
// Rule activation

struct Activation {
  enum class Kind { Inactive, Base, DefeaterResponse, DefeatedNoResponse, Unresolved };

  Kind kind = Kind::Inactive;
  std::optional<Requirement> requirement;   // Base, DefeaterResponse
  int defeater_index = -1;                  // DefeaterResponse, DefeatedNoResponse
  std::vector<std::string> unknown;         // Unresolved: measures blocking the trigger guard
  std::vector<int> skipped_defeaters;       // defeaters skipped because their guard was Unknown

  bool produces_requirement() const { return requirement.has_value(); }
};

inline Requirement make_requirement(const std::string& rule_id, const Response& resp,
                                    std::int64_t t, const TimeConfig& cfg) {
  Requirement r;
  r.source_rule = rule_id;
  r.kind = resp.negated ? RequirementKind::Prohibition : RequirementKind::Obligation;
  r.event = resp.event;
  r.start = t;
  r.end = resp.window ? t + to_tocks(*resp.window, cfg) : t;
  return r;
}

// Defeater precedence: the last-listed defeater is outermost and is consulted
// first; guards that evaluate Unknown are skipped, so the base form applies
// when nothing is known to defeat it.
inline Activation activate(const Rule& rule, std::int64_t t, const MeasureState& m,
                           const TimeConfig& cfg) {
  Activation a;
  if (rule.trigger_guard) {
    Truth tg = eval_guard(*rule.trigger_guard, m);
    if (tg == Truth::False) {
      a.kind = Activation::Kind::Inactive;
      return a;
    }
    if (tg == Truth::Unknown) {
      a.kind = Activation::Kind::Unresolved;
      a.unknown = unknown_measures(*rule.trigger_guard, m);
      return a;
    }
  }
  for (int i = static_cast<int>(rule.defeaters.size()) - 1; i >= 0; --i) {
    const Defeater& d = rule.defeaters[static_cast<std::size_t>(i)];
    Truth dg = eval_guard(d.guard, m);
    if (dg == Truth::Unknown) {
      a.skipped_defeaters.push_back(i);
      continue;
    }
    if (dg == Truth::True) {
      a.defeater_index = i;
      if (d.response) {
        a.kind = Activation::Kind::DefeaterResponse;
        a.requirement = make_requirement(rule.id, *d.response, t, cfg);
      } else {
        a.kind = Activation::Kind::DefeatedNoResponse;
      }
      return a;
    }
  }
  a.kind = Activation::Kind::Base;
  a.requirement = make_requirement(rule.id, rule.response, t, cfg);
  return a;
}

// ---------------------------------------------------------------------------
// Offline trace checking

struct CheckOptions {
  bool strict = false;  // residual obligations at trace end become violations
};

struct TraceCheckResult {
  std::vector<Finding> findings;        // violations and warnings, in raise order
  std::vector<Requirement> residuals;   // obligations still open at trace end
};

inline std::string requirement_text(const Requirement& r) {
  std::string kind = r.kind == RequirementKind::Obligation ? "obligation" : "prohibition";
  return kind + " " + r.event + " within [" + std::to_string(r.start) + ", " +
         std::to_string(r.end) + "]";
}

inline Finding expiry_violation(const Requirement& r) {
  Finding f;
  f.kind = FindingKind::Violation;
  f.rule_ids = {r.source_rule};
  f.message = "rule " + r.source_rule + ": " + requirement_text(r) +
              " expired without the event occurring";
  return f;
}

inline Finding prohibited_violation(const Requirement& r, std::int64_t t) {
  Finding f;
  f.kind = FindingKind::Violation;
  f.rule_ids = {r.source_rule};
  f.message = "rule " + r.source_rule + ": " + r.event + " occurred at tock " +
              std::to_string(t) + " despite " + requirement_text(r);
  return f;
}

inline Finding residual_violation(const Requirement& r) {
  Finding f;
  f.kind = FindingKind::Violation;
  f.rule_ids = {r.source_rule};
  f.message = "rule " + r.source_rule + ": " + requirement_text(r) +
              " still pending at end of trace (strict mode)";
  return f;
}

inline Finding unresolved_warning(const std::string& rule_id,
                                  const std::vector<std::string>& unknown,
                                  std::int64_t t) {
  Finding f;
  f.kind = FindingKind::Warning;
  f.rule_ids = {rule_id};
  std::string names;
  for (const auto& n : unknown) {
    if (!names.empty()) names += ", ";
    names += n;
  }
  f.message = "rule " + rule_id + ": trigger guard unresolved at tock " +
              std::to_string(t) + " (never-read measures: " + names + ")";
  return f;
}

// Processes tokens in order. An event discharges every open obligation on its
// name whose window covers the current time, raises a violation for every
// covering prohibition, and then activates the rules it triggers; requirements
// created by a token cannot be discharged by that same token.
inline TraceCheckResult check_trace(const Ruleset& rs, const Trace& tr,
                                    const TimeConfig& cfg, CheckOptions opts = {}) {
  TraceCheckResult result;
  MeasureState ms;
  std::vector<Requirement> live;
  std::int64_t now = 0;

  auto attach_witness = [&](Finding f) {
    f.witness = tr;
    result.findings.push_back(std::move(f));
  };

  for (const auto& token : tr.tokens) {
    switch (token.kind) {
      case TraceToken::Kind::Measure:
        ms.set(token.name, token.value);
        break;
      case TraceToken::Kind::Tock: {
        ++now;
        std::vector<Requirement> kept;
        for (auto& r : live) {
          if (r.end < now) {
            if (r.kind == RequirementKind::Obligation) attach_witness(expiry_violation(r));
          } else {
            kept.push_back(std::move(r));
          }
        }
        live = std::move(kept);
        break;
      }
      case TraceToken::Kind::Event: {
        std::vector<Requirement> kept;
        for (auto& r : live) {
          if (r.event == token.name && r.covers(now)) {
            if (r.kind == RequirementKind::Obligation) continue;  // discharged
            attach_witness(prohibited_violation(r, now));
          }
          kept.push_back(std::move(r));
        }
        live = std::move(kept);
        for (const auto& rule : rs.rules) {
          if (rule.trigger_event != token.name) continue;
          Activation a = activate(rule, now, ms, cfg);
          if (a.kind == Activation::Kind::Unresolved)
            attach_witness(unresolved_warning(rule.id, a.unknown, now));
          else if (a.requirement)
            live.push_back(*a.requirement);
        }
        break;
      }
    }
  }

  for (auto& r : live) {
    if (r.kind != RequirementKind::Obligation) continue;
    if (opts.strict)
      attach_witness(residual_violation(r));
    else
      result.residuals.push_back(r);
  }
  return result;
}

}  // namespace sleec
