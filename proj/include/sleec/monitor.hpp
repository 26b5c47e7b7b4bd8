#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleec/ast.hpp"
#include "sleec/format.hpp"
#include "sleec/semantics.hpp"

// Online guardrail engine: consumes a token stream incrementally, maintains
// live obligations and prohibitions, and reports per-step deltas. The state
// evolution matches semantics::check_trace step for step; the two are written
// as separate code paths and cross-checked by the test suite.

namespace sleec {

class UnknownCapability : public std::runtime_error {
 public:
  explicit UnknownCapability(const std::string& what) : std::runtime_error(what) {}
};

class MissingCapability : public std::runtime_error {
 public:
  explicit MissingCapability(const std::string& what) : std::runtime_error(what) {}
};

struct MonitorOptions {
  bool strict = false;     // residual obligations at finish become violations
  bool fail_stop = false;  // refuse further tokens after the first violation
};

struct StepActivation {
  std::string rule;
  Activation activation;
};

struct StepReport {
  std::int64_t time = 0;
  std::vector<StepActivation> activations;
  std::vector<Requirement> discharged;
  std::vector<Finding> violations;   // raised by this step
  std::vector<Finding> warnings;     // unresolved trigger guards this step
  std::vector<std::string> blocked;  // events with a live prohibition covering now
  std::vector<Requirement> pending;  // live obligations with deadlines
};

struct BlockQuery {
  enum class Status { Allowed, Blocked, Obliged };
  Status status = Status::Allowed;
  std::vector<std::string> blocking_rules;
  std::vector<Requirement> obligations;
};

struct ReloadReport {
  std::vector<Requirement> kept;
  std::vector<Requirement> dropped;
  std::int64_t generation = 0;
};

class MonitorSession {
 public:
  MonitorSession(Ruleset rs, TimeConfig tc, MonitorOptions opts = {})
      : rs_(std::move(rs)), tc_(tc), opts_(opts) {
    // Every rule window must normalise under the configured quantum.
    for (const auto& r : rs_.rules) {
      if (r.response.window) (void)to_tocks(*r.response.window, tc_);
      for (const auto& d : r.defeaters)
        if (d.response && d.response->window) (void)to_tocks(*d.response->window, tc_);
    }
  }

  std::int64_t now() const { return now_; }
  std::int64_t generation() const { return generation_; }
  bool halted() const { return halted_; }
  const Ruleset& ruleset() const { return rs_; }
  const std::vector<Finding>& findings() const { return findings_; }

  StepReport step(const TraceToken& token) {
    if (halted_)
      throw std::logic_error("monitor session is halted (fail-stop after violation)");
    StepReport report;
    switch (token.kind) {
      case TraceToken::Kind::Measure: {
        require_measure(token.name);
        measures_.set(token.name, token.value);
        consumed_.tokens.push_back(token);
        break;
      }
      case TraceToken::Kind::Tock: {
        consumed_.tokens.push_back(token);
        ++now_;
        std::vector<Requirement> kept;
        for (auto& r : live_) {
          if (r.end < now_) {
            if (r.kind == RequirementKind::Obligation)
              raise(report, expiry_violation(r));
          } else {
            kept.push_back(std::move(r));
          }
        }
        live_ = std::move(kept);
        break;
      }
      case TraceToken::Kind::Event: {
        require_event(token.name);
        consumed_.tokens.push_back(token);
        std::vector<Requirement> kept;
        for (auto& r : live_) {
          if (r.event == token.name && r.covers(now_)) {
            if (r.kind == RequirementKind::Obligation) {
              report.discharged.push_back(r);
              continue;
            }
            raise(report, prohibited_violation(r, now_));
          }
          kept.push_back(std::move(r));
        }
        live_ = std::move(kept);
        for (const auto& rule : rs_.rules) {
          if (rule.trigger_event != token.name) continue;
          Activation a = activate(rule, now_, measures_, tc_);
          if (a.kind == Activation::Kind::Unresolved) {
            Finding w = unresolved_warning(rule.id, a.unknown, now_);
            w.witness = consumed_;
            findings_.push_back(w);
            report.warnings.push_back(w);
          }
          if (a.requirement) live_.push_back(*a.requirement);
          report.activations.push_back({rule.id, std::move(a)});
        }
        break;
      }
    }
    fill_snapshot(report);
    report.time = now_;
    if (opts_.fail_stop && !report.violations.empty()) halted_ = true;
    return report;
  }

  // Pure inspection: would emitting this event now violate or satisfy
  // anything?
  BlockQuery query_blocked(const std::string& event) const {
    require_event(event);
    BlockQuery q;
    for (const auto& r : live_) {
      if (r.event != event || !r.covers(now_)) continue;
      if (r.kind == RequirementKind::Prohibition)
        q.blocking_rules.push_back(r.source_rule);
      else
        q.obligations.push_back(r);
    }
    if (!q.blocking_rules.empty())
      q.status = BlockQuery::Status::Blocked;
    else if (!q.obligations.empty())
      q.status = BlockQuery::Status::Obliged;
    return q;
  }

  // Requirements survive a reload only when their source rule is present with
  // identical id and canonical text; everything else is dropped and reported.
  ReloadReport reload_ruleset(Ruleset next) {
    for (const auto& r : live_) {
      const CapabilityDecl* d = next.find_declaration(r.event);
      if (!d || d->kind != CapabilityKind::Event)
        throw MissingCapability("live requirement on '" + r.event +
                                "' has no event declaration in the new ruleset");
    }
    ReloadReport report;
    std::vector<Requirement> kept;
    for (auto& r : live_) {
      const Rule* old_rule = rs_.find_rule(r.source_rule);
      const Rule* new_rule = next.find_rule(r.source_rule);
      bool same = old_rule && new_rule && format_rule(*old_rule) == format_rule(*new_rule);
      if (same) {
        report.kept.push_back(r);
        kept.push_back(std::move(r));
      } else {
        report.dropped.push_back(std::move(r));
      }
    }
    live_ = std::move(kept);
    rs_ = std::move(next);
    report.generation = ++generation_;
    return report;
  }

  // End of stream: residual obligations stay pending, or become violations in
  // strict mode.
  std::vector<Requirement> finish() {
    std::vector<Requirement> residuals;
    for (auto& r : live_) {
      if (r.kind != RequirementKind::Obligation) continue;
      if (opts_.strict) {
        Finding f = residual_violation(r);
        f.witness = consumed_;
        findings_.push_back(f);
      } else {
        residuals.push_back(r);
      }
    }
    return residuals;
  }

 private:
  void raise(StepReport& report, Finding f) {
    f.witness = consumed_;
    findings_.push_back(f);
    report.violations.push_back(std::move(f));
  }

  void fill_snapshot(StepReport& report) const {
    for (const auto& d : rs_.declarations) {
      if (d.kind != CapabilityKind::Event) continue;
      for (const auto& r : live_) {
        if (r.kind == RequirementKind::Prohibition && r.event == d.name &&
            r.covers(now_)) {
          report.blocked.push_back(d.name);
          break;
        }
      }
    }
    for (const auto& r : live_)
      if (r.kind == RequirementKind::Obligation) report.pending.push_back(r);
  }

  void require_event(const std::string& name) const {
    const CapabilityDecl* d = rs_.find_declaration(name);
    if (!d || d->kind != CapabilityKind::Event)
      throw UnknownCapability("'" + name + "' is not a declared event");
  }
  void require_measure(const std::string& name) const {
    const CapabilityDecl* d = rs_.find_declaration(name);
    if (!d || d->kind != CapabilityKind::Measure)
      throw UnknownCapability("'" + name + "' is not a declared measure");
  }

  Ruleset rs_;
  TimeConfig tc_;
  MonitorOptions opts_;
  MeasureState measures_;
  std::vector<Requirement> live_;
  std::vector<Finding> findings_;
  Trace consumed_;
  std::int64_t now_ = 0;
  std::int64_t generation_ = 0;
  bool halted_ = false;
};

inline MonitorSession open_session(Ruleset rs, TimeConfig tc, MonitorOptions opts = {}) {
  return MonitorSession(std::move(rs), tc, opts);
}

// ---------------------------------------------------------------------------
// Streaming report format: one JSON object per step, stable key order.

inline const char* activation_kind_text(Activation::Kind k) {
  switch (k) {
    case Activation::Kind::Inactive: return "inactive";
    case Activation::Kind::Base: return "base";
    case Activation::Kind::DefeaterResponse: return "defeater";
    case Activation::Kind::DefeatedNoResponse: return "defeated";
    case Activation::Kind::Unresolved: return "unresolved";
  }
  return "?";
}

inline nlohmann::ordered_json requirement_json(const Requirement& r) {
  nlohmann::ordered_json j;
  j["rule"] = r.source_rule;
  j["kind"] = r.kind == RequirementKind::Obligation ? "obligation" : "prohibition";
  j["event"] = r.event;
  j["window"] = {r.start, r.end};
  return j;
}

inline nlohmann::ordered_json step_report_json(const StepReport& report) {
  nlohmann::ordered_json j;
  j["t"] = report.time;
  auto activations = nlohmann::ordered_json::array();
  for (const auto& a : report.activations) {
    nlohmann::ordered_json item;
    item["rule"] = a.rule;
    item["outcome"] = activation_kind_text(a.activation.kind);
    if (a.activation.requirement)
      item["requirement"] = requirement_json(*a.activation.requirement);
    activations.push_back(std::move(item));
  }
  j["activations"] = std::move(activations);
  auto violations = nlohmann::ordered_json::array();
  for (const auto& v : report.violations) {
    nlohmann::ordered_json item;
    item["rules"] = v.rule_ids;
    item["message"] = v.message;
    violations.push_back(std::move(item));
  }
  j["violations"] = std::move(violations);
  j["blocked"] = report.blocked;
  auto pending = nlohmann::ordered_json::array();
  for (const auto& p : report.pending) {
    nlohmann::ordered_json item;
    item["rule"] = p.source_rule;
    item["event"] = p.event;
    item["deadline"] = p.end;
    pending.push_back(std::move(item));
  }
  j["pending"] = std::move(pending);
  return j;
}

}  // namespace sleec
