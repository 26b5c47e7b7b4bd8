#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/atoms.hpp"
#include "sleec/format.hpp"
#include "sleec/semantics.hpp"

// Bounded exhaustive detection of the four well-formedness issue classes.
// A scenario fixes the environment behaviour per time unit (event occurrences
// and a measure valuation); an agent schedule fixes the agent's emissions.
// Requirements are evaluated directly at the unit level, independently of
// check_trace, which the test suite uses as a cross-check on witnesses.

namespace sleec {

enum class WfCheck { Conflict, Redundancy, Insufficiency, OverRestrictiveness };

struct SearchConfig {
  std::optional<std::int64_t> horizon;  // time units; defaulted from the ruleset
  int max_env_events_per_unit = 2;
  std::set<WfCheck> checks = {WfCheck::Conflict, WfCheck::Redundancy,
                              WfCheck::Insufficiency, WfCheck::OverRestrictiveness};
  bool whole_ruleset_conflict = false;
};

inline std::int64_t longest_window_tocks(const Ruleset& rs, const TimeConfig& tc) {
  std::int64_t longest = 0;
  auto consider = [&](const Response& r) {
    if (r.window) longest = std::max(longest, to_tocks(*r.window, tc));
  };
  for (const auto& r : rs.rules) {
    consider(r.response);
    for (const auto& d : r.defeaters)
      if (d.response) consider(*d.response);
  }
  return longest;
}

// Defaulted horizon covers the longest window with a unit to spare; an
// explicit horizon is taken as given (a warning is emitted if it is short).
inline std::int64_t effective_horizon(const Ruleset& rs, const SearchConfig& cfg,
                                      const TimeConfig& tc) {
  if (cfg.horizon) return std::max<std::int64_t>(1, *cfg.horizon);
  return std::max<std::int64_t>(8, longest_window_tocks(rs, tc) + 2);
}

// ---------------------------------------------------------------------------
// Event classification

struct ClassifiedEvents {
  std::vector<std::string> environment;  // declaration order
  std::vector<std::string> agent;        // declaration order

  bool is_agent(const std::string& name) const {
    return std::find(agent.begin(), agent.end(), name) != agent.end();
  }
};

// An event is an agent event iff it appears as a response (base or defeater)
// of any rule or annotation; everything else declared is environmental.
inline ClassifiedEvents classify_events(const Ruleset& rs) {
  std::set<std::string> responses;
  for (const auto& r : rs.rules) {
    responses.insert(r.response.event);
    for (const auto& d : r.defeaters)
      if (d.response) responses.insert(d.response->event);
  }
  for (const auto& a : rs.annotations)
    if (a.kind != AnnotationKind::Fact) responses.insert(a.response.event);
  ClassifiedEvents out;
  for (const auto& d : rs.declarations) {
    if (d.kind != CapabilityKind::Event) continue;
    if (responses.count(d.name))
      out.agent.push_back(d.name);
    else
      out.environment.push_back(d.name);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search engine internals

namespace wf_detail {

struct LiveReq {
  int rule = -1;  // index into scope rules
  RequirementKind kind = RequirementKind::Obligation;
  int event = -1;  // index into the scope event table
  std::int64_t end = 0;
  std::int64_t trigger_unit = 0;
  int trigger_pos = -1;  // -1 once the trigger's unit has ended

  friend auto operator<=>(const LiveReq&, const LiveReq&) = default;
};

struct Watch {
  int event = -1;
  std::int64_t end = 0;
  bool negated = false;
  std::int64_t trigger_unit = 0;
  int trigger_pos = -1;

  friend auto operator<=>(const Watch&, const Watch&) = default;
};

struct PatternSpec {
  std::string annotation_id;
  int trigger_event = -1;
  const Guard* trigger_guard = nullptr;
  int response_event = -1;
  bool response_negated = false;
  std::int64_t window = 0;
};

// Violation handling per scope rule: fatal violations kill the agent branch,
// flagged ones set AgentState::flagged and the branch continues.
enum class ViolationPolicy { Fatal, Flag };

struct Scope {
  const Ruleset* rs = nullptr;
  TimeConfig tc;
  std::int64_t horizon = 8;
  int max_env = 2;

  std::vector<const Rule*> rules;
  std::vector<ViolationPolicy> policy;          // parallel to rules
  std::vector<std::string> events;              // event table (declaration order)
  std::vector<int> env_events;                  // indices into events
  std::vector<int> agent_events;                // indices into events
  std::vector<Valuation> valuations;            // canonical order
  std::vector<MeasureState> valuation_states;   // parallel to valuations
  std::vector<std::vector<int>> env_choices;    // event-index lists, canonical order
  std::optional<PatternSpec> pattern;
  bool agent_can_trigger = false;               // some scope rule triggers on an agent event

  int event_index(const std::string& name) const {
    for (std::size_t i = 0; i < events.size(); ++i)
      if (events[i] == name) return static_cast<int>(i);
    return -1;
  }
};

struct AgentState {
  std::vector<LiveReq> reqs;
  std::vector<Watch> watches;
  bool exhibited = false;
  bool flagged = false;  // redundancy search: the observed rule was violated

  // Between units, trigger positions no longer matter and requirements on the
  // same event with the same policy subsume each other: one emission
  // discharges every covering obligation, so only the earliest deadline
  // constrains; dually only the latest prohibition end does.
  void canonicalize(const Scope& scope) {
    for (auto& r : reqs) r.trigger_pos = -1;
    for (auto& w : watches) w.trigger_pos = -1;
    std::vector<LiveReq> reduced;
    for (const auto& r : reqs) {
      bool absorbed = false;
      for (auto& k : reduced) {
        if (k.event != r.event || k.kind != r.kind) continue;
        if (scope.policy[static_cast<std::size_t>(k.rule)] !=
            scope.policy[static_cast<std::size_t>(r.rule)])
          continue;
        absorbed = true;
        if (r.kind == RequirementKind::Obligation) {
          if (r.end < k.end) k = r;
        } else {
          if (r.end > k.end) k = r;
        }
        break;
      }
      if (!absorbed) reduced.push_back(r);
    }
    reqs = std::move(reduced);
    std::sort(reqs.begin(), reqs.end());
    if (exhibited) watches.clear();
    std::sort(watches.begin(), watches.end());
    watches.erase(std::unique(watches.begin(), watches.end()), watches.end());
  }

  friend auto operator<=>(const AgentState&, const AgentState&) = default;
};

// Subsets in counting order over declaration-indexed bits.
inline std::vector<std::vector<int>> enumerate_env_choices(const std::vector<int>& env,
                                                           int cap, bool maximal_only) {
  int n = static_cast<int>(env.size());
  int take = std::min(n, cap);
  std::vector<std::vector<int>> out;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    int bits = __builtin_popcount(mask);
    if (bits > cap) continue;
    if (maximal_only && bits != take) continue;
    std::vector<int> subset;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) subset.push_back(env[static_cast<std::size_t>(i)]);
    out.push_back(std::move(subset));
  }
  return out;
}

// Builds the per-check scope. `rule_ids` limits the rules considered (nullopt
// means all); events and valuations are projected to what those rules and the
// optional pattern annotation can observe.
inline Scope build_scope(const Ruleset& rs, const ValuationSpace& space,
                         const ClassifiedEvents& classes,
                         const std::optional<std::vector<std::string>>& rule_ids,
                         std::int64_t horizon, int max_env, const TimeConfig& tc,
                         bool maximal_env, const Annotation* pattern_annotation) {
  Scope s;
  s.rs = &rs;
  s.tc = tc;
  s.horizon = horizon;
  s.max_env = max_env;

  if (!rule_ids) {
    for (const auto& r : rs.rules) s.rules.push_back(&r);
  } else {
    for (const auto& id : *rule_ids) {
      const Rule* r = rs.find_rule(id);
      if (r && std::find(s.rules.begin(), s.rules.end(), r) == s.rules.end())
        s.rules.push_back(r);
    }
  }
  s.policy.assign(s.rules.size(), ViolationPolicy::Fatal);

  // Relevant events: triggers and responses of scope rules plus the pattern's
  // trigger and response. Other declared events cannot affect the verdict.
  std::set<std::string> relevant;
  for (const Rule* r : s.rules) {
    relevant.insert(r->trigger_event);
    relevant.insert(r->response.event);
    for (const auto& d : r->defeaters)
      if (d.response) relevant.insert(d.response->event);
  }
  if (pattern_annotation) {
    relevant.insert(pattern_annotation->trigger_event);
    relevant.insert(pattern_annotation->response.event);
  }
  for (const auto& d : rs.declarations) {
    if (d.kind != CapabilityKind::Event || !relevant.count(d.name)) continue;
    int idx = static_cast<int>(s.events.size());
    s.events.push_back(d.name);
    if (classes.is_agent(d.name))
      s.agent_events.push_back(idx);
    else
      s.env_events.push_back(idx);
  }
  for (const Rule* r : s.rules)
    if (classes.is_agent(r->trigger_event)) s.agent_can_trigger = true;

  // Measures observed by the scope's guards (and the pattern's).
  std::vector<std::string> measures;
  auto add_measures = [&](const Guard& g) {
    std::vector<std::string> ms;
    collect_guard_measures(g, ms);
    for (auto& m : ms)
      if (std::find(measures.begin(), measures.end(), m) == measures.end())
        measures.push_back(m);
  };
  for (const Rule* r : s.rules) {
    if (r->trigger_guard) add_measures(*r->trigger_guard);
    for (const auto& d : r->defeaters) add_measures(d.guard);
  }
  if (pattern_annotation && pattern_annotation->trigger_guard)
    add_measures(*pattern_annotation->trigger_guard);
  std::vector<std::string> keep;
  for (const auto& m : space.measures)
    if (std::find(measures.begin(), measures.end(), m) != measures.end())
      keep.push_back(m);
  s.valuations = project_valuations(space, keep);
  for (const auto& v : s.valuations) s.valuation_states.push_back(v.to_measure_state());

  s.env_choices = enumerate_env_choices(s.env_events, max_env, maximal_env);

  if (pattern_annotation && pattern_annotation->kind != AnnotationKind::Fact) {
    PatternSpec p;
    p.annotation_id = pattern_annotation->id;
    p.trigger_event = s.event_index(pattern_annotation->trigger_event);
    p.trigger_guard =
        pattern_annotation->trigger_guard ? &*pattern_annotation->trigger_guard : nullptr;
    p.response_event = s.event_index(pattern_annotation->response.event);
    p.response_negated = pattern_annotation->response.negated;
    p.window = pattern_annotation->response.window
                   ? to_tocks(*pattern_annotation->response.window, tc)
                   : 0;
    s.pattern = p;
  }
  return s;
}

// One concrete unit of a scenario: a valuation index plus the environment
// events occurring in that unit (scope event-table indices).
struct ScenarioUnit {
  std::size_t valuation = 0;
  std::vector<int> env;

  friend bool operator==(const ScenarioUnit& a, const ScenarioUnit& b) {
    return a.valuation == b.valuation && a.env == b.env;
  }
};

using Scenario = std::vector<ScenarioUnit>;

// Requirements the environment side of a unit creates, independent of any
// agent behaviour.
inline std::vector<LiveReq> env_activations(const Scope& scope, std::int64_t u,
                                            const ScenarioUnit& su) {
  std::vector<LiveReq> out;
  const MeasureState& ms = scope.valuation_states[su.valuation];
  int pos = 0;
  for (int e : su.env) {
    ++pos;
    const std::string& name = scope.events[static_cast<std::size_t>(e)];
    for (std::size_t ri = 0; ri < scope.rules.size(); ++ri) {
      if (scope.rules[ri]->trigger_event != name) continue;
      Activation a = activate(*scope.rules[ri], u, ms, scope.tc);
      if (!a.requirement) continue;
      LiveReq lr;
      lr.rule = static_cast<int>(ri);
      lr.kind = a.requirement->kind;
      lr.event = scope.event_index(a.requirement->event);
      lr.end = a.requirement->end;
      lr.trigger_unit = u;
      lr.trigger_pos = pos;
      out.push_back(lr);
    }
  }
  return out;
}

// Steps one agent state through one time unit. Token order within the unit is
// the rendering order: measure readings, environment events in declaration
// order, then agent emissions in declaration order. Returns nullopt when a
// fatal violation occurs.
inline std::optional<AgentState> step_unit(const Scope& scope, const AgentState& start,
                                           std::int64_t u, const ScenarioUnit& su,
                                           const std::vector<int>& emissions) {
  AgentState st = start;
  const MeasureState& ms = scope.valuation_states[su.valuation];
  int pos = 0;
  bool dead = false;

  auto occurrence = [&](int event_idx, bool agent_side) {
    ++pos;
    const std::string& name = scope.events[static_cast<std::size_t>(event_idx)];
    if (agent_side) {
      std::vector<LiveReq> kept;
      for (auto& r : st.reqs) {
        bool covers = r.event == event_idx && r.end >= u &&
                      (r.trigger_unit < u || r.trigger_pos < pos);
        if (covers && r.kind == RequirementKind::Obligation) continue;  // discharged
        if (covers && r.kind == RequirementKind::Prohibition) {
          if (scope.policy[static_cast<std::size_t>(r.rule)] == ViolationPolicy::Flag)
            st.flagged = true;
          else
            dead = true;
        }
        kept.push_back(r);
      }
      st.reqs = std::move(kept);
      if (dead) return;
    }
    if (scope.pattern && !st.exhibited) {
      const PatternSpec& p = *scope.pattern;
      if (p.response_event == event_idx) {
        std::vector<Watch> kept;
        for (auto& w : st.watches) {
          bool covers = w.end >= u && (w.trigger_unit < u || w.trigger_pos < pos);
          if (covers) {
            if (!w.negated) st.exhibited = true;
            continue;  // positive: satisfied; negated: broken; drop either way
          }
          kept.push_back(w);
        }
        st.watches = std::move(kept);
      }
      if (p.trigger_event == event_idx &&
          (!p.trigger_guard || eval_guard(*p.trigger_guard, ms) == Truth::True)) {
        Watch w;
        w.event = p.response_event;
        w.end = u + p.window;
        w.negated = p.response_negated;
        w.trigger_unit = u;
        w.trigger_pos = pos;
        st.watches.push_back(w);
      }
    }
    for (std::size_t ri = 0; ri < scope.rules.size(); ++ri) {
      const Rule* rule = scope.rules[ri];
      if (rule->trigger_event != name) continue;
      Activation a = activate(*rule, u, ms, scope.tc);
      if (!a.requirement) continue;
      LiveReq lr;
      lr.rule = static_cast<int>(ri);
      lr.kind = a.requirement->kind;
      lr.event = scope.event_index(a.requirement->event);
      lr.end = a.requirement->end;
      lr.trigger_unit = u;
      lr.trigger_pos = pos;
      st.reqs.push_back(lr);
    }
  };

  for (int e : su.env) {
    occurrence(e, false);
    if (dead) return std::nullopt;
  }
  for (int e : emissions) {
    occurrence(e, true);
    if (dead) return std::nullopt;
  }

  // Unit end: obligations due now expire; negated watches that survived their
  // whole window mean the pattern held.
  std::vector<LiveReq> kept;
  for (auto& r : st.reqs) {
    if (r.end == u) {
      if (r.kind == RequirementKind::Obligation) {
        if (scope.policy[static_cast<std::size_t>(r.rule)] == ViolationPolicy::Flag)
          st.flagged = true;
        else
          return std::nullopt;
      }
      continue;
    }
    kept.push_back(r);
  }
  st.reqs = std::move(kept);
  std::vector<Watch> kept_watches;
  for (auto& w : st.watches) {
    if (w.end == u) {
      if (w.negated) st.exhibited = true;
      continue;
    }
    kept_watches.push_back(w);
  }
  st.watches = std::move(kept_watches);
  st.canonicalize(scope);
  return st;
}

// Emissions worth branching on, computed against the state as it will be once
// the unit's environment events have activated their rules: events of live
// obligations (they discharge), events of flag-policy prohibitions (they
// witness a violation), the pattern's events, and, when some scope rule
// triggers on an agent event, the whole agent alphabet, keeping trigger
// closures exhaustive.
inline std::vector<int> emission_candidates(const Scope& scope, const AgentState& st,
                                            const std::vector<LiveReq>& env_reqs,
                                            std::int64_t u) {
  std::set<int> cand;
  auto consider = [&](const LiveReq& r) {
    if (r.end < u) return;
    if (r.kind == RequirementKind::Obligation)
      cand.insert(r.event);
    else if (scope.policy[static_cast<std::size_t>(r.rule)] == ViolationPolicy::Flag)
      cand.insert(r.event);
  };
  for (const auto& r : st.reqs) consider(r);
  for (const auto& r : env_reqs) consider(r);
  if (scope.pattern && !st.exhibited) {
    if (scope.pattern->trigger_event >= 0) cand.insert(scope.pattern->trigger_event);
    if (!scope.pattern->response_negated && scope.pattern->response_event >= 0)
      cand.insert(scope.pattern->response_event);
  }
  if (scope.agent_can_trigger)
    for (int e : scope.agent_events) cand.insert(e);
  std::vector<int> out;
  for (int e : scope.agent_events)
    if (cand.count(e)) out.push_back(e);  // declaration order
  return out;
}

inline std::vector<std::vector<int>> emission_choices(const std::vector<int>& cand) {
  std::vector<std::vector<int>> out;
  int n = static_cast<int>(cand.size());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> pick;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) pick.push_back(cand[static_cast<std::size_t>(i)]);
    out.push_back(std::move(pick));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conflict search. A conflict is witnessed by an environment-forced
// requirement pair: an obligation whose whole window lies inside a prohibition
// on the same event, the two stemming from the required rule sources. Every
// agent schedule then violates one side. Only prohibitions need tracking
// between units, and per (rule, event) only the latest end.

struct ConflictSpan {
  bool require_distinct_rules = true;  // pairwise mode with two distinct ids
};

struct LiveProhibition {
  int rule = -1;
  int event = -1;
  std::int64_t end = 0;

  friend auto operator<=>(const LiveProhibition&, const LiveProhibition&) = default;
};

struct ConflictHit {
  Requirement obligation;
  Requirement prohibition;
};

inline std::optional<ConflictHit> unit_conflict(const Scope& scope, std::int64_t u,
                                                const ScenarioUnit& su,
                                                const std::vector<LiveProhibition>& live,
                                                const ConflictSpan& span,
                                                std::vector<LiveProhibition>& next) {
  std::vector<LiveReq> reqs = env_activations(scope, u, su);
  std::vector<LiveProhibition> fresh;
  for (const auto& r : reqs) {
    if (r.kind != RequirementKind::Prohibition) continue;
    fresh.push_back(LiveProhibition{r.rule, r.event, r.end});
  }
  auto hit = [&](const LiveReq& o, const LiveProhibition& p) -> std::optional<ConflictHit> {
    if (span.require_distinct_rules && o.rule == p.rule) return std::nullopt;
    ConflictHit h;
    h.obligation.source_rule = scope.rules[static_cast<std::size_t>(o.rule)]->id;
    h.obligation.kind = RequirementKind::Obligation;
    h.obligation.event = scope.events[static_cast<std::size_t>(o.event)];
    h.obligation.start = u;
    h.obligation.end = o.end;
    h.prohibition.source_rule = scope.rules[static_cast<std::size_t>(p.rule)]->id;
    h.prohibition.kind = RequirementKind::Prohibition;
    h.prohibition.event = scope.events[static_cast<std::size_t>(p.event)];
    h.prohibition.end = p.end;
    return h;
  };
  for (const auto& o : reqs) {
    if (o.kind != RequirementKind::Obligation || o.end > scope.horizon - 1) continue;
    for (const auto& p : live)
      if (p.event == o.event && p.end >= o.end)
        if (auto h = hit(o, p)) {
          h->prohibition.start = -1;  // started at an earlier unit; filled by caller
          return h;
        }
    for (const auto& p : fresh)
      if (p.event == o.event && p.end >= o.end)
        if (auto h = hit(o, p)) {
          h->prohibition.start = u;
          return h;
        }
  }
  next = live;
  for (const auto& p : fresh) {
    bool absorbed = false;
    for (auto& k : next) {
      if (k.rule == p.rule && k.event == p.event) {
        k.end = std::max(k.end, p.end);
        absorbed = true;
        break;
      }
    }
    if (!absorbed) next.push_back(p);
  }
  std::vector<LiveProhibition> kept;
  for (const auto& p : next)
    if (p.end > u) kept.push_back(p);
  next = std::move(kept);
  std::sort(next.begin(), next.end());
  return std::nullopt;
}

inline bool scenario_has_conflict(const Scope& scope, const Scenario& sc,
                                  const ConflictSpan& span) {
  std::vector<LiveProhibition> live;
  for (std::size_t u = 0; u < sc.size(); ++u) {
    std::vector<LiveProhibition> next;
    if (unit_conflict(scope, static_cast<std::int64_t>(u), sc[u], live, span, next))
      return true;
    live = std::move(next);
  }
  return false;
}

// Breadth-first over scenario prefixes with deduplicated prohibition states.
// Adding environment events only adds requirements, so the search fixes the
// maximal environment choice per unit and leaves trimming to minimisation.
inline std::optional<Scenario> find_conflict_scenario(const Scope& scope,
                                                      const ConflictSpan& span) {
  struct Node {
    std::vector<LiveProhibition> live;
    int parent = -1;
    ScenarioUnit unit;
  };
  std::vector<std::vector<Node>> levels(1);
  levels[0].push_back(Node{{}, -1, {}});

  for (std::int64_t u = 0; u < scope.horizon; ++u) {
    std::vector<Node> next_level;
    std::map<std::vector<LiveProhibition>, bool> seen;
    auto& frontier = levels.back();
    for (std::size_t ni = 0; ni < frontier.size(); ++ni) {
      for (std::size_t vi = 0; vi < scope.valuations.size(); ++vi) {
        for (const auto& env : scope.env_choices) {
          ScenarioUnit su{vi, env};
          std::vector<LiveProhibition> next;
          if (unit_conflict(scope, u, su, frontier[ni].live, span, next)) {
            Scenario sc;
            sc.push_back(su);
            int at = static_cast<int>(ni);
            for (std::size_t lvl = levels.size() - 1; lvl > 0; --lvl) {
              sc.push_back(levels[lvl][static_cast<std::size_t>(at)].unit);
              at = levels[lvl][static_cast<std::size_t>(at)].parent;
            }
            std::reverse(sc.begin(), sc.end());
            return sc;
          }
          if (seen.emplace(next, true).second)
            next_level.push_back(Node{std::move(next), static_cast<int>(ni), su});
        }
      }
    }
    levels.push_back(std::move(next_level));
  }
  return std::nullopt;
}

// Greedy witness minimisation: drop trailing units, then single environment
// events, re-checking the conflict after every candidate edit.
inline Scenario minimize_scenario(const Scope& scope, Scenario sc,
                                  const ConflictSpan& span) {
  while (sc.size() > 1) {
    Scenario shorter(sc.begin(), sc.end() - 1);
    if (!scenario_has_conflict(scope, shorter, span)) break;
    sc = std::move(shorter);
  }
  for (std::size_t u = 0; u < sc.size(); ++u) {
    std::vector<int> env = sc[u].env;
    for (int drop : env) {
      Scenario trial = sc;
      trial[u].env.clear();
      for (int e : sc[u].env)
        if (e != drop) trial[u].env.push_back(e);
      if (scenario_has_conflict(scope, trial, span)) sc = std::move(trial);
    }
  }
  return sc;
}

// Renders a scenario (without agent emissions) as a trace, padded with tocks
// to `pad_tocks` so that every in-horizon deadline expiry is observable.
inline Trace render_scenario(const Scope& scope, const Scenario& sc,
                             std::int64_t pad_tocks) {
  Trace out;
  for (const auto& su : sc) {
    for (const auto& [name, value] : scope.valuations[su.valuation].values)
      out.tokens.push_back(TraceToken::measure(name, value));
    for (int e : su.env)
      out.tokens.push_back(TraceToken::event(scope.events[static_cast<std::size_t>(e)]));
    out.tokens.push_back(TraceToken::tock());
  }
  for (std::int64_t t = static_cast<std::int64_t>(sc.size()); t < pad_tocks; ++t)
    out.tokens.push_back(TraceToken::tock());
  return out;
}

// Requirements a scenario generates with the agent silent; used to name the
// witnessing requirement pair in conflict messages.
inline std::vector<Requirement> scenario_requirements(const Scope& scope,
                                                      const Scenario& sc) {
  std::vector<Requirement> out;
  for (std::size_t u = 0; u < sc.size(); ++u) {
    const MeasureState& ms = scope.valuation_states[sc[u].valuation];
    for (int e : sc[u].env) {
      const std::string& name = scope.events[static_cast<std::size_t>(e)];
      for (const Rule* rule : scope.rules) {
        if (rule->trigger_event != name) continue;
        Activation a = activate(*rule, static_cast<std::int64_t>(u), ms, scope.tc);
        if (a.requirement) out.push_back(*a.requirement);
      }
    }
  }
  return out;
}

struct ReqPair {
  Requirement obligation;
  Requirement prohibition;
};

inline std::optional<ReqPair> containment_pair(const std::vector<Requirement>& reqs,
                                               std::int64_t last_unit,
                                               bool require_distinct_rules) {
  for (const auto& o : reqs) {
    if (o.kind != RequirementKind::Obligation || o.end > last_unit) continue;
    for (const auto& p : reqs) {
      if (p.kind != RequirementKind::Prohibition) continue;
      if (require_distinct_rules && p.source_rule == o.source_rule) continue;
      if (p.event == o.event && p.start <= o.start && o.end <= p.end)
        return ReqPair{o, p};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reachability searches (redundancy and pattern checks): both quantifiers are
// existential, so a breadth-first search over deduplicated agent states
// suffices; parents are kept to reconstruct witness traces.

struct ReachOptions {
  bool require_exhibited = false;  // pattern searches
  bool require_flagged = false;    // redundancy searches
  bool forbid_residuals = false;   // strict compliance at the end
};

struct ReachLabel {
  ScenarioUnit unit;
  std::vector<int> emissions;
};

struct ReachWitness {
  std::vector<ReachLabel> units;
};

inline std::optional<ReachWitness> find_reachable(const Scope& scope,
                                                  const ReachOptions& opts) {
  struct Node {
    AgentState state;
    int parent = -1;
    ReachLabel label;
  };
  std::vector<std::vector<Node>> levels(1);
  levels[0].push_back(Node{AgentState{}, -1, {}});

  for (std::int64_t u = 0; u < scope.horizon; ++u) {
    std::vector<Node> next_level;
    std::map<AgentState, bool> seen;
    auto& frontier = levels.back();
    for (std::size_t ni = 0; ni < frontier.size(); ++ni) {
      const AgentState& st = frontier[ni].state;
      for (std::size_t vi = 0; vi < scope.valuations.size(); ++vi) {
        for (const auto& env : scope.env_choices) {
          ScenarioUnit su{vi, env};
          auto env_reqs = env_activations(scope, u, su);
          auto cand = emission_candidates(scope, st, env_reqs, u);
          for (const auto& emissions : emission_choices(cand)) {
            auto succ = step_unit(scope, st, u, su, emissions);
            if (!succ) continue;
            if (!seen.emplace(*succ, true).second) continue;
            next_level.push_back(
                Node{std::move(*succ), static_cast<int>(ni), ReachLabel{su, emissions}});
          }
        }
      }
    }
    levels.push_back(std::move(next_level));
  }

  const auto& final_level = levels.back();
  for (std::size_t ni = 0; ni < final_level.size(); ++ni) {
    const AgentState& st = final_level[ni].state;
    if (opts.require_exhibited && !st.exhibited) continue;
    if (opts.require_flagged && !st.flagged) continue;
    if (opts.forbid_residuals) {
      bool has_obligation = false;
      for (const auto& r : st.reqs)
        has_obligation = has_obligation || r.kind == RequirementKind::Obligation;
      if (has_obligation) continue;
    }
    ReachWitness w;
    int at = static_cast<int>(ni);
    for (std::size_t lvl = levels.size() - 1; lvl > 0; --lvl) {
      w.units.push_back(levels[lvl][static_cast<std::size_t>(at)].label);
      at = levels[lvl][static_cast<std::size_t>(at)].parent;
    }
    std::reverse(w.units.begin(), w.units.end());
    return w;
  }
  return std::nullopt;
}

inline Trace render_reach_witness(const Scope& scope, const ReachWitness& w) {
  Trace out;
  for (std::size_t u = 0; u < w.units.size(); ++u) {
    const auto& label = w.units[u];
    for (const auto& [name, value] : scope.valuations[label.unit.valuation].values)
      out.tokens.push_back(TraceToken::measure(name, value));
    for (int e : label.unit.env)
      out.tokens.push_back(TraceToken::event(scope.events[static_cast<std::size_t>(e)]));
    for (int e : label.emissions)
      out.tokens.push_back(TraceToken::event(scope.events[static_cast<std::size_t>(e)]));
    if (u + 1 < w.units.size()) out.tokens.push_back(TraceToken::tock());
  }
  return out;
}

inline void horizon_warnings(const std::vector<const Rule*>& rules, std::int64_t horizon,
                             const TimeConfig& tc, std::vector<Finding>& out) {
  for (const Rule* r : rules) {
    std::int64_t longest = 0;
    if (r->response.window) longest = std::max(longest, to_tocks(*r->response.window, tc));
    for (const auto& d : r->defeaters)
      if (d.response && d.response->window)
        longest = std::max(longest, to_tocks(*d.response->window, tc));
    if (longest + 1 > horizon) {
      Finding f;
      f.kind = FindingKind::Warning;
      f.rule_ids = {r->id};
      f.horizon = horizon;
      f.message = "horizon " + std::to_string(horizon) + " does not cover rule " + r->id +
                  "'s window of " + std::to_string(longest) + " tocks plus one unit";
      out.push_back(std::move(f));
    }
  }
}

}  // namespace wf_detail

// ---------------------------------------------------------------------------
// Public checks

struct WfResult {
  std::optional<Finding> finding;
  std::vector<Finding> warnings;
};

inline WfResult check_conflict(const Ruleset& rs, const std::string& id_a,
                               const std::string& id_b, const SearchConfig& cfg,
                               const TimeConfig& tc) {
  WfResult result;
  std::int64_t horizon = effective_horizon(rs, cfg, tc);
  ValuationSpace space = build_valuation_space(rs);
  ClassifiedEvents classes = classify_events(rs);
  std::vector<std::string> ids = {id_a, id_b};
  wf_detail::Scope scope =
      wf_detail::build_scope(rs, space, classes, ids, horizon,
                             cfg.max_env_events_per_unit, tc, /*maximal_env=*/true,
                             nullptr);
  wf_detail::horizon_warnings(scope.rules, horizon, tc, result.warnings);

  wf_detail::ConflictSpan span;
  span.require_distinct_rules = id_a != id_b;
  auto scenario = wf_detail::find_conflict_scenario(scope, span);
  if (!scenario) return result;
  wf_detail::Scenario minimized = wf_detail::minimize_scenario(scope, *scenario, span);

  Finding f;
  f.kind = FindingKind::Conflict;
  f.rule_ids = {id_a, id_b};
  std::sort(f.rule_ids.begin(), f.rule_ids.end());
  f.rule_ids.erase(std::unique(f.rule_ids.begin(), f.rule_ids.end()), f.rule_ids.end());
  f.horizon = horizon;
  f.witness = wf_detail::render_scenario(scope, minimized, horizon);
  auto reqs = wf_detail::scenario_requirements(scope, minimized);
  auto pair = wf_detail::containment_pair(reqs, horizon - 1, span.require_distinct_rules);
  if (pair) {
    f.message = "rules " + id_a + " and " + id_b +
                " cannot both be obeyed: " + pair->obligation.source_rule + "'s " +
                requirement_text(pair->obligation) + " lies inside " +
                pair->prohibition.source_rule + "'s " + requirement_text(pair->prohibition);
  } else {
    f.message = "rules " + id_a + " and " + id_b +
                " cannot both be obeyed within the horizon";
  }
  result.finding = std::move(f);
  return result;
}

// Conflict over the whole ruleset: same engine, all rules' requirements
// conjoined, any cross-rule forced pair reported.
inline WfResult check_conflict_whole(const Ruleset& rs, const SearchConfig& cfg,
                                     const TimeConfig& tc) {
  WfResult result;
  std::int64_t horizon = effective_horizon(rs, cfg, tc);
  ValuationSpace space = build_valuation_space(rs);
  ClassifiedEvents classes = classify_events(rs);
  wf_detail::Scope scope =
      wf_detail::build_scope(rs, space, classes, std::nullopt, horizon,
                             cfg.max_env_events_per_unit, tc, /*maximal_env=*/true,
                             nullptr);
  wf_detail::horizon_warnings(scope.rules, horizon, tc, result.warnings);
  wf_detail::ConflictSpan span;
  span.require_distinct_rules = false;
  auto scenario = wf_detail::find_conflict_scenario(scope, span);
  if (!scenario) return result;
  wf_detail::Scenario minimized = wf_detail::minimize_scenario(scope, *scenario, span);

  Finding f;
  f.kind = FindingKind::Conflict;
  f.horizon = horizon;
  f.witness = wf_detail::render_scenario(scope, minimized, horizon);
  auto reqs = wf_detail::scenario_requirements(scope, minimized);
  auto pair = wf_detail::containment_pair(reqs, horizon - 1, false);
  if (pair) {
    f.rule_ids = {pair->obligation.source_rule, pair->prohibition.source_rule};
    std::sort(f.rule_ids.begin(), f.rule_ids.end());
    f.rule_ids.erase(std::unique(f.rule_ids.begin(), f.rule_ids.end()), f.rule_ids.end());
    f.message = "the ruleset cannot always be obeyed as a whole: " +
                pair->obligation.source_rule + "'s " + requirement_text(pair->obligation) +
                " lies inside " + pair->prohibition.source_rule + "'s " +
                requirement_text(pair->prohibition);
  } else {
    for (const auto* r : scope.rules) f.rule_ids.push_back(r->id);
    std::sort(f.rule_ids.begin(), f.rule_ids.end());
    f.message = "the ruleset cannot always be obeyed as a whole";
  }
  result.finding = std::move(f);
  return result;
}

// Reports A redundant given B when no bounded trace satisfies B while
// violating A.
inline WfResult check_redundancy(const Ruleset& rs, const std::string& id_a,
                                 const std::string& id_b, const SearchConfig& cfg,
                                 const TimeConfig& tc) {
  WfResult result;
  std::int64_t horizon = effective_horizon(rs, cfg, tc);

  auto make_finding = [&](const std::string& note) {
    Finding f;
    f.kind = FindingKind::Redundancy;
    f.rule_ids = {id_a, id_b};
    f.horizon = horizon;
    f.message = "rule " + id_a + " is redundant given " + id_b + ": " + note;
    return f;
  };

  if (id_a == id_b) {
    result.finding = make_finding("a rule is always obeyed when it is obeyed");
    return result;
  }

  ValuationSpace space = build_valuation_space(rs);
  ClassifiedEvents classes = classify_events(rs);
  std::vector<std::string> ids = {id_a, id_b};
  wf_detail::Scope scope =
      wf_detail::build_scope(rs, space, classes, ids, horizon,
                             cfg.max_env_events_per_unit, tc, /*maximal_env=*/false,
                             nullptr);
  wf_detail::horizon_warnings(scope.rules, horizon, tc, result.warnings);
  for (std::size_t i = 0; i < scope.rules.size(); ++i)
    if (scope.rules[i]->id == id_a) scope.policy[i] = wf_detail::ViolationPolicy::Flag;

  wf_detail::ReachOptions opts;
  opts.require_flagged = true;
  auto witness = wf_detail::find_reachable(scope, opts);
  if (witness) return result;  // some trace obeys B yet violates A
  result.finding =
      make_finding("no trace within the horizon obeys " + id_b + " while violating " + id_a);
  return result;
}

inline WfResult check_insufficiency(const Ruleset& rs, const std::string& concern_id,
                                    const SearchConfig& cfg, const TimeConfig& tc) {
  WfResult result;
  std::int64_t horizon = effective_horizon(rs, cfg, tc);
  const Annotation* concern = rs.find_annotation(concern_id);
  if (!concern || concern->kind != AnnotationKind::Concern) return result;

  ValuationSpace space = build_valuation_space(rs);
  ClassifiedEvents classes = classify_events(rs);
  wf_detail::Scope scope =
      wf_detail::build_scope(rs, space, classes, std::nullopt, horizon,
                             cfg.max_env_events_per_unit, tc, /*maximal_env=*/false,
                             concern);
  wf_detail::horizon_warnings(scope.rules, horizon, tc, result.warnings);

  if (concern->trigger_guard && !guard_satisfiable(*concern->trigger_guard, space)) {
    Finding w;
    w.kind = FindingKind::Warning;
    w.annotation_id = concern_id;
    w.message = "concern " + concern_id +
                " is vacuous: its trigger guard is unsatisfiable under the declared facts";
    result.warnings.push_back(std::move(w));
    return result;
  }

  wf_detail::ReachOptions opts;
  opts.require_exhibited = true;
  opts.forbid_residuals = true;
  auto witness = wf_detail::find_reachable(scope, opts);
  if (!witness) return result;

  Finding f;
  f.kind = FindingKind::Insufficiency;
  f.annotation_id = concern_id;
  f.horizon = horizon;
  f.witness = wf_detail::render_reach_witness(scope, *witness);
  f.message =
      "the ruleset is insufficient: a rule-compliant trace exhibits concern " + concern_id;
  result.finding = std::move(f);
  return result;
}

inline WfResult check_overrestrictiveness(const Ruleset& rs, const std::string& purpose_id,
                                          const SearchConfig& cfg, const TimeConfig& tc) {
  WfResult result;
  std::int64_t horizon = effective_horizon(rs, cfg, tc);
  const Annotation* purpose = rs.find_annotation(purpose_id);
  if (!purpose || purpose->kind != AnnotationKind::Purpose) return result;

  ValuationSpace space = build_valuation_space(rs);
  ClassifiedEvents classes = classify_events(rs);

  auto achievable = [&](const std::optional<std::vector<std::string>>& rule_ids) {
    wf_detail::Scope scope =
        wf_detail::build_scope(rs, space, classes, rule_ids, horizon,
                               cfg.max_env_events_per_unit, tc, /*maximal_env=*/false,
                               purpose);
    wf_detail::ReachOptions opts;
    opts.require_exhibited = true;
    opts.forbid_residuals = true;
    return wf_detail::find_reachable(scope, opts).has_value();
  };

  {
    wf_detail::Scope full =
        wf_detail::build_scope(rs, space, classes, std::nullopt, horizon,
                               cfg.max_env_events_per_unit, tc, false, purpose);
    wf_detail::horizon_warnings(full.rules, horizon, tc, result.warnings);
  }

  if (achievable(std::nullopt)) return result;

  Finding f;
  f.kind = FindingKind::OverRestrictiveness;
  f.annotation_id = purpose_id;
  f.horizon = horizon;

  bool vacuous =
      (purpose->trigger_guard && !guard_satisfiable(*purpose->trigger_guard, space)) ||
      !achievable(std::vector<std::string>{});
  if (vacuous) {
    Finding w;
    w.kind = FindingKind::Warning;
    w.annotation_id = purpose_id;
    w.message = "purpose " + purpose_id +
                " is vacuous: it is unachievable even with every rule removed";
    result.warnings.push_back(std::move(w));
    f.message = "purpose " + purpose_id + " is unachievable within horizon " +
                std::to_string(horizon) + " (vacuously: no rule set makes it achievable)";
    result.finding = std::move(f);
    return result;
  }

  // Minimal blocking set: smallest rule subset whose removal makes the purpose
  // achievable, by exhaustive subset search in size-then-index order.
  std::size_t n = rs.rules.size();
  std::vector<unsigned> masks;
  for (unsigned mask = 1; mask < (1u << n); ++mask) masks.push_back(mask);
  std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  std::vector<std::string> blocking;
  for (unsigned mask : masks) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < n; ++i)
      if (!(mask & (1u << i))) kept.push_back(rs.rules[i].id);
    if (achievable(kept)) {
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) blocking.push_back(rs.rules[i].id);
      break;
    }
  }

  f.rule_ids = blocking;
  std::string names;
  for (const auto& id : blocking) {
    if (!names.empty()) names += ", ";
    names += id;
  }
  f.message = "purpose " + purpose_id + " is unachievable within horizon " +
              std::to_string(horizon) + "; removing {" + names + "} makes it achievable";
  result.finding = std::move(f);
  return result;
}

// ---------------------------------------------------------------------------
// Driver

inline bool finding_order(const Finding& a, const Finding& b) {
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  if (a.rule_ids != b.rule_ids) return a.rule_ids < b.rule_ids;
  auto aid = a.annotation_id.value_or("");
  auto bid = b.annotation_id.value_or("");
  if (aid != bid) return aid < bid;
  return a.message < b.message;
}

inline std::vector<Finding> analyze(const Ruleset& rs, const SearchConfig& cfg,
                                    const TimeConfig& tc) {
  std::vector<Finding> findings;
  std::vector<Finding> warnings;
  auto take = [&](WfResult r) {
    if (r.finding) findings.push_back(std::move(*r.finding));
    for (auto& w : r.warnings) warnings.push_back(std::move(w));
  };

  if (cfg.checks.count(WfCheck::Conflict)) {
    if (cfg.whole_ruleset_conflict) {
      take(check_conflict_whole(rs, cfg, tc));
    } else {
      for (std::size_t i = 0; i < rs.rules.size(); ++i)
        for (std::size_t j = i + 1; j < rs.rules.size(); ++j)
          take(check_conflict(rs, rs.rules[i].id, rs.rules[j].id, cfg, tc));
    }
  }
  if (cfg.checks.count(WfCheck::Redundancy)) {
    for (std::size_t i = 0; i < rs.rules.size(); ++i)
      for (std::size_t j = 0; j < rs.rules.size(); ++j)
        if (i != j) take(check_redundancy(rs, rs.rules[i].id, rs.rules[j].id, cfg, tc));
  }
  if (cfg.checks.count(WfCheck::Insufficiency)) {
    for (const auto& a : rs.annotations)
      if (a.kind == AnnotationKind::Concern) take(check_insufficiency(rs, a.id, cfg, tc));
  }
  if (cfg.checks.count(WfCheck::OverRestrictiveness)) {
    for (const auto& a : rs.annotations)
      if (a.kind == AnnotationKind::Purpose)
        take(check_overrestrictiveness(rs, a.id, cfg, tc));
  }

  // The same horizon warning recurs across checks; keep one copy of each.
  std::sort(warnings.begin(), warnings.end(), finding_order);
  warnings.erase(std::unique(warnings.begin(), warnings.end(),
                             [](const Finding& a, const Finding& b) {
                               return a.message == b.message;
                             }),
                 warnings.end());
  for (auto& w : warnings) findings.push_back(std::move(w));
  std::sort(findings.begin(), findings.end(), finding_order);
  return findings;
}

}  // namespace sleec
