#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/atoms.hpp"
#include "sleec/parser.hpp"
#include "sleec/semantics.hpp"
#include "sleec/validate.hpp"
#include "sleec/wellformedness.hpp"

// Bounded conformance checking of a small agent-behaviour model against a
// ruleset. The model is deterministic given the environment; nondeterminism
// lives in the environment's event choices and in the measure values it
// supplies at the instant a guarded transition reads them. Exploration is
// exhaustive up to the horizon and returns the first violating run in
// canonical order as a counterexample.

namespace sleec {

// ---------------------------------------------------------------------------
// Agent model

struct ModelTransition {
  enum class Trigger { OnEvent, OnTock, Auto };

  std::string from;
  std::string to;
  Trigger trigger = Trigger::Auto;
  std::string event;  // OnEvent only
  std::optional<Guard> guard;
  std::vector<std::string> emits;
  SourceSpan span;
};

struct AgentModel {
  std::string name;
  std::vector<std::string> states;
  std::string initial;
  std::vector<ModelTransition> transitions;

  bool has_state(const std::string& s) const {
    return std::find(states.begin(), states.end(), s) != states.end();
  }
};

struct ModelParseResult {
  std::optional<AgentModel> model;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

namespace conf_detail {

class ModelParser : public detail::ParserBase {
 public:
  ModelParser(std::vector<detail::Token> tokens, std::vector<Diagnostic>& diags,
              const Ruleset& rs)
      : ParserBase(std::move(tokens), diags), rs_(rs) {}

  AgentModel run() {
    AgentModel m;
    bool saw_initial = false;
    if (accept_word("model")) {
      if (at(detail::TokKind::UpperIdent) || at(detail::TokKind::LowerIdent)) {
        m.name = peek().text;
        consume();
      } else {
        error_here("expected a model name");
      }
    } else {
      error_here("expected 'model'");
    }
    while (!at(detail::TokKind::Eof)) {
      if (accept_word("state")) {
        if (!at(detail::TokKind::UpperIdent) && !at(detail::TokKind::LowerIdent)) {
          error_here("expected a state name");
          skip_line();
          continue;
        }
        std::string name = peek().text;
        SourceSpan span = peek().span;
        consume();
        if (m.has_state(name))
          diags_.push_back({Severity::Error, "duplicate-state",
                            "duplicate state '" + name + "'", span});
        else
          m.states.push_back(name);
        if (accept_word("initial")) {
          if (saw_initial)
            diags_.push_back({Severity::Error, "multiple-initial",
                              "more than one initial state", span});
          saw_initial = true;
          m.initial = name;
        }
      } else if (accept_word("trans")) {
        parse_transition(m);
      } else {
        error_here("expected 'state' or 'trans'");
        skip_line();
      }
    }
    if (!saw_initial && m.name.empty() == false)
      diags_.push_back(
          {Severity::Error, "no-initial", "the model declares no initial state", {}});
    return m;
  }

 private:
  void parse_transition(AgentModel& m) {
    ModelTransition t;
    SourceSpan start = peek().span;
    t.from = take_state_name(m);
    if (!expect(detail::TokKind::Arrow, "'->'")) {
      skip_line();
      return;
    }
    t.to = take_state_name(m);
    if (!accept_word("on")) {
      error_here("expected 'on'");
      skip_line();
      return;
    }
    if (accept_word("tock")) {
      t.trigger = ModelTransition::Trigger::OnTock;
    } else if (accept_word("auto")) {
      t.trigger = ModelTransition::Trigger::Auto;
    } else if (at(detail::TokKind::UpperIdent)) {
      t.trigger = ModelTransition::Trigger::OnEvent;
      t.event = peek().text;
      const CapabilityDecl* d = rs_.find_declaration(t.event);
      if (!d || d->kind != CapabilityKind::Event)
        diags_.push_back({Severity::Error, "unknown-name",
                          "'" + t.event + "' is not a declared event", peek().span});
      consume();
    } else {
      error_here("expected an event name, 'tock', or 'auto'");
      skip_line();
      return;
    }
    if (accept(detail::TokKind::KwWhen)) {
      auto g = parse_guard();
      if (!g) {
        skip_line();
        return;
      }
      detail::check_guard_types(*g, rs_, "model transition", diags_);
      t.guard = std::move(*g);
    }
    if (accept_word("emit")) {
      while (true) {
        if (!at(detail::TokKind::UpperIdent)) {
          error_here("expected an event name to emit");
          skip_line();
          return;
        }
        std::string e = peek().text;
        const CapabilityDecl* d = rs_.find_declaration(e);
        if (!d || d->kind != CapabilityKind::Event)
          diags_.push_back({Severity::Error, "unknown-name",
                            "'" + e + "' is not a declared event", peek().span});
        consume();
        t.emits.push_back(std::move(e));
        if (!accept(detail::TokKind::Comma)) break;
      }
    }
    t.span = merge(start, prev_span_);
    m.transitions.push_back(std::move(t));
  }

  std::string take_state_name(const AgentModel&) {
    if (!at(detail::TokKind::UpperIdent) && !at(detail::TokKind::LowerIdent)) {
      error_here("expected a state name");
      return "";
    }
    std::string name = peek().text;
    consume();
    return name;
  }

  void skip_line() {
    int line = at(detail::TokKind::Eof) ? -1 : peek().span.begin_line;
    while (!at(detail::TokKind::Eof) && peek().span.begin_line == line) consume();
  }

  const Ruleset& rs_;
};

}  // namespace conf_detail

inline ModelParseResult parse_model(std::string_view src, const Ruleset& rs) {
  ModelParseResult result;
  detail::Lexer lexer(src);
  auto tokens = lexer.run(result.diagnostics);
  conf_detail::ModelParser parser(std::move(tokens), result.diagnostics, rs);
  AgentModel m = parser.run();
  // States may be referenced before their declaration line; resolve at the end.
  for (const auto& t : m.transitions) {
    for (const std::string* s : {&t.from, &t.to})
      if (!s->empty() && !m.has_state(*s))
        result.diagnostics.push_back({Severity::Error, "unknown-state",
                                      "state '" + *s + "' is not declared", t.span});
  }
  if (!detail::has_error(result.diagnostics)) result.model = std::move(m);
  return result;
}

// ---------------------------------------------------------------------------
// Exploration

struct ConformanceResult {
  bool conformant = true;
  std::int64_t horizon = 8;
  std::optional<Trace> counterexample;
  std::vector<std::string> violated_rules;  // sorted, unique
  std::string explanation;
  std::vector<Finding> warnings;
};

// Environment alphabet for a model run: declared events that are neither rule
// or annotation responses nor model emissions. The model's own outputs are
// agent behaviour and never offered by the environment.
inline std::vector<std::string> conformance_env_events(const AgentModel& m,
                                                       const Ruleset& rs) {
  ClassifiedEvents classes = classify_events(rs);
  std::set<std::string> emitted;
  for (const auto& t : m.transitions) emitted.insert(t.emits.begin(), t.emits.end());
  std::vector<std::string> out;
  for (const auto& e : classes.environment)
    if (!emitted.count(e)) out.push_back(e);
  return out;
}

namespace conf_detail {

// Rule-side bookkeeping along a run: the same state evolution as
// semantics::check_trace, kept incrementally so exploration can prune and
// memoize. Counterexamples are re-validated through check_trace by the tests.
struct RuleTracker {
  const Ruleset* rs = nullptr;
  const TimeConfig* tc = nullptr;
  MeasureState measures;
  std::vector<Requirement> live;
  std::int64_t now = 0;
  std::vector<std::string> violations;  // rule ids, in raise order

  void on_token(const TraceToken& token) {
    switch (token.kind) {
      case TraceToken::Kind::Measure:
        measures.set(token.name, token.value);
        break;
      case TraceToken::Kind::Tock: {
        ++now;
        std::vector<Requirement> kept;
        for (auto& r : live) {
          if (r.end < now) {
            if (r.kind == RequirementKind::Obligation)
              violations.push_back(r.source_rule);
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
            if (r.kind == RequirementKind::Obligation) continue;
            violations.push_back(r.source_rule);
          }
          kept.push_back(std::move(r));
        }
        live = std::move(kept);
        for (const auto& rule : rs->rules) {
          if (rule.trigger_event != token.name) continue;
          Activation a = activate(rule, now, measures, *tc);
          if (a.requirement) live.push_back(*a.requirement);
        }
        break;
      }
    }
  }

  // Obligations whose whole window fits inside the horizon must have been met.
  std::vector<std::string> residual_conversions(std::int64_t last_unit) const {
    std::vector<std::string> out;
    for (const auto& r : live)
      if (r.kind == RequirementKind::Obligation && r.end <= last_unit)
        out.push_back(r.source_rule);
    return out;
  }
};

struct RunState {
  std::string state;
  std::set<std::string> autos_done;              // reset each unit
  std::map<std::string, MeasureValue> cache;     // reads this unit
  RuleTracker rules;
  Trace tokens;
  bool violated = false;
};

struct ExploreCtx {
  const AgentModel* model = nullptr;
  const Ruleset* rs = nullptr;
  TimeConfig tc;
  std::int64_t horizon = 8;
  std::vector<std::vector<std::string>> env_choices;  // counting order, empty first
  ValuationSpace space;

  using MemoKey = std::tuple<std::int64_t, std::string,
                             std::vector<std::pair<std::string, MeasureValue>>,
                             std::vector<std::tuple<std::string, int, std::string,
                                                    std::int64_t>>>;
  std::set<MemoKey> clean;
};

inline ExploreCtx::MemoKey memo_key(const ExploreCtx& ctx, std::int64_t u,
                                    const RunState& st) {
  (void)ctx;
  std::vector<std::pair<std::string, MeasureValue>> mv(st.rules.measures.values.begin(),
                                                       st.rules.measures.values.end());
  std::vector<std::tuple<std::string, int, std::string, std::int64_t>> reqs;
  for (const auto& r : st.rules.live)
    reqs.emplace_back(r.source_rule, static_cast<int>(r.kind), r.event, r.end);
  std::sort(reqs.begin(), reqs.end());
  return {u, st.state, std::move(mv), std::move(reqs)};
}

// Joint assignments for the given unread measures, consistent with the facts
// and with the values already read this unit; ordered so that assignments
// firing `guard` come first, value order within each class.
inline std::vector<std::vector<std::pair<std::string, MeasureValue>>> admissible_reads(
    const ExploreCtx& ctx, const std::map<std::string, MeasureValue>& cache,
    const std::vector<std::string>& needed, const Guard& guard) {
  std::vector<std::vector<std::pair<std::string, MeasureValue>>> all;
  for (const auto& total : ctx.space.consistent) {
    bool agrees = true;
    std::vector<std::pair<std::string, MeasureValue>> pick;
    for (const auto& [name, value] : total.values) {
      auto it = cache.find(name);
      if (it != cache.end() && !(it->second == value)) {
        agrees = false;
        break;
      }
      if (std::find(needed.begin(), needed.end(), name) != needed.end())
        pick.emplace_back(name, value);
    }
    if (!agrees) continue;
    if (std::find(all.begin(), all.end(), pick) == all.end()) all.push_back(std::move(pick));
  }
  std::stable_partition(all.begin(), all.end(), [&](const auto& assignment) {
    MeasureState ms;
    for (const auto& [name, value] : cache) ms.set(name, value);
    for (const auto& [name, value] : assignment) ms.set(name, value);
    return eval_guard(guard, ms) == Truth::True;
  });
  return all;
}

// Enumerates, in canonical order, every way the model can get through one time
// unit. `limit` bounds how many completions are collected (1 = first only).
class UnitSimulator {
 public:
  UnitSimulator(ExploreCtx& ctx, std::size_t limit) : ctx_(ctx), limit_(limit) {}

  std::vector<RunState> run(const RunState& start,
                            const std::vector<std::string>& env_events) {
    out_.clear();
    auto_chase(start, [this, &env_events](RunState st) { env_phase(std::move(st), env_events, 0); });
    return std::move(out_);
  }

 private:
  using Cont = std::function<void(RunState)>;

  void env_phase(RunState st, const std::vector<std::string>& env_events,
                 std::size_t k) {
    if (done()) return;
    if (k == env_events.size()) {
      tock_phase(std::move(st));
      return;
    }
    const std::string& e = env_events[k];
    push_token(st, TraceToken::event(e));
    attempt(std::move(st), ModelTransition::Trigger::OnEvent, e,
            [this, &env_events, k](RunState next, bool fired) {
              if (fired)
                auto_chase(std::move(next), [this, &env_events, k](RunState n2) {
                  env_phase(std::move(n2), env_events, k + 1);
                });
              else
                env_phase(std::move(next), env_events, k + 1);
            });
  }

  void tock_phase(RunState st) {
    if (done()) return;
    attempt(std::move(st), ModelTransition::Trigger::OnTock, "",
            [this](RunState next, bool) {
              if (!done()) out_.push_back(std::move(next));
            });
  }

  // Runs Auto transitions to quiescence; each state fires its Auto at most
  // once per unit, which bounds the chase.
  void auto_chase(RunState st, const Cont& then) {
    if (done()) return;
    if (st.autos_done.count(st.state)) {
      then(std::move(st));
      return;
    }
    std::string from = st.state;
    attempt(std::move(st), ModelTransition::Trigger::Auto, "",
            [this, then, from](RunState next, bool fired) {
              if (fired) {
                next.autos_done.insert(from);
                auto_chase(std::move(next), then);
              } else {
                then(std::move(next));
              }
            });
  }

  // Tries the transitions matching (state, trigger) in listing order; guarded
  // ones read their unread measures, branching over admissible values with
  // firing assignments first. Calls `sink` once per branch.
  void attempt(RunState st, ModelTransition::Trigger trigger, const std::string& event,
               const std::function<void(RunState, bool)>& sink) {
    attempt_from(std::move(st), trigger, event, 0, sink);
  }

  void attempt_from(RunState st, ModelTransition::Trigger trigger,
                    const std::string& event, std::size_t idx,
                    const std::function<void(RunState, bool)>& sink) {
    if (done()) return;
    const auto& ts = ctx_.model->transitions;
    std::size_t i = idx;
    for (; i < ts.size(); ++i) {
      if (ts[i].from != st.state || ts[i].trigger != trigger) continue;
      if (trigger == ModelTransition::Trigger::OnEvent && ts[i].event != event) continue;
      break;
    }
    if (i == ts.size()) {
      sink(std::move(st), false);
      return;
    }
    const ModelTransition& t = ts[i];
    if (!t.guard) {
      fire(std::move(st), t, sink);
      return;
    }
    std::vector<std::string> measures;
    collect_guard_measures(*t.guard, measures);
    std::vector<std::string> needed;
    for (const auto& m : measures)
      if (!st.cache.count(m) &&
          std::find(needed.begin(), needed.end(), m) == needed.end())
        needed.push_back(m);
    if (needed.empty()) {
      MeasureState ms;
      for (const auto& [name, value] : st.cache) ms.set(name, value);
      if (eval_guard(*t.guard, ms) == Truth::True)
        fire(std::move(st), t, sink);
      else
        attempt_from(std::move(st), trigger, event, i + 1, sink);
      return;
    }
    auto assignments = admissible_reads(ctx_, st.cache, needed, *t.guard);
    for (const auto& assignment : assignments) {
      if (done()) return;
      RunState branch = st;
      MeasureState ms;
      for (const auto& [name, value] : branch.cache) ms.set(name, value);
      for (const auto& [name, value] : assignment) {
        branch.cache[name] = value;
        ms.set(name, value);
        push_token(branch, TraceToken::measure(name, value));
      }
      if (eval_guard(*t.guard, ms) == Truth::True)
        fire(std::move(branch), t, sink);
      else
        attempt_from(std::move(branch), trigger, event, i + 1, sink);
    }
  }

  void fire(RunState st, const ModelTransition& t,
            const std::function<void(RunState, bool)>& sink) {
    st.state = t.to;
    for (const auto& e : t.emits) push_token(st, TraceToken::event(e));
    sink(std::move(st), true);
  }

  void push_token(RunState& st, TraceToken token) {
    st.rules.on_token(token);
    if (!st.rules.violations.empty()) st.violated = true;
    st.tokens.tokens.push_back(std::move(token));
  }

  bool done() const { return out_.size() >= limit_; }

  ExploreCtx& ctx_;
  std::size_t limit_;
  std::vector<RunState> out_;
};

// Completes a violating run to the horizon with first-choice continuations
// (quiet environment, first read branch): the lexicographically smallest
// completion of the violating prefix.
inline RunState complete_first(ExploreCtx& ctx, RunState st, std::int64_t next_unit) {
  for (std::int64_t u = next_unit; u < ctx.horizon; ++u) {
    st.tokens.tokens.push_back(TraceToken::tock());
    st.rules.on_token(TraceToken::tock());
    st.autos_done.clear();
    st.cache.clear();
    UnitSimulator sim(ctx, 1);
    auto outs = sim.run(st, ctx.env_choices[0]);
    st = std::move(outs.front());
  }
  return st;
}

inline std::optional<RunState> search(ExploreCtx& ctx, RunState st, std::int64_t u) {
  if (u == ctx.horizon) {
    auto conversions = st.rules.residual_conversions(ctx.horizon - 1);
    if (!st.rules.violations.empty() || !conversions.empty()) return st;
    return std::nullopt;
  }
  auto key = memo_key(ctx, u, st);
  if (ctx.clean.count(key)) return std::nullopt;
  for (const auto& env : ctx.env_choices) {
    UnitSimulator sim(ctx, static_cast<std::size_t>(-1));
    auto completions = sim.run(st, env);
    for (auto& c : completions) {
      RunState next = std::move(c);
      if (u + 1 < ctx.horizon && !next.violated) {
        // The inter-unit tock may itself expire a deadline.
        RunState stepped = next;
        stepped.tokens.tokens.push_back(TraceToken::tock());
        stepped.rules.on_token(TraceToken::tock());
        if (!stepped.rules.violations.empty()) stepped.violated = true;
        stepped.autos_done.clear();
        stepped.cache.clear();
        if (stepped.violated) return complete_first(ctx, next, u + 1);
        auto found = search(ctx, std::move(stepped), u + 1);
        if (found) return found;
      } else if (next.violated) {
        return complete_first(ctx, std::move(next), u + 1);
      } else {
        auto found = search(ctx, std::move(next), u + 1);
        if (found) return found;
      }
    }
  }
  ctx.clean.insert(std::move(key));
  return std::nullopt;
}

}  // namespace conf_detail

// Violations visible to a plain replay of the trace, plus obligations whose
// in-horizon deadline the run left unmet.
inline std::pair<std::vector<std::string>, std::vector<std::string>>
counterexample_verdict(const Ruleset& rs, const Trace& trace, const TimeConfig& tc,
                       std::int64_t horizon) {
  TraceCheckResult check = check_trace(rs, trace, tc);
  std::vector<std::string> visible;
  for (const auto& f : check.findings)
    if (f.kind == FindingKind::Violation) visible.push_back(f.rule_ids.front());
  std::vector<std::string> conversions;
  for (const auto& r : check.residuals)
    if (r.end <= horizon - 1) conversions.push_back(r.source_rule);
  std::sort(visible.begin(), visible.end());
  std::sort(conversions.begin(), conversions.end());
  return {visible, conversions};
}

inline ConformanceResult explore(const AgentModel& m, const Ruleset& rs,
                                 const SearchConfig& cfg, const TimeConfig& tc) {
  ConformanceResult result;
  result.horizon = cfg.horizon.value_or(8);
  if (result.horizon < 1) result.horizon = 1;

  conf_detail::ExploreCtx ctx;
  ctx.model = &m;
  ctx.rs = &rs;
  ctx.tc = tc;
  ctx.horizon = result.horizon;
  std::vector<const Guard*> model_guards;
  for (const auto& t : m.transitions)
    if (t.guard) model_guards.push_back(&*t.guard);
  ctx.space = build_valuation_space(rs, model_guards);

  {
    std::vector<const Rule*> rules;
    for (const auto& r : rs.rules) rules.push_back(&r);
    wf_detail::horizon_warnings(rules, ctx.horizon, tc, result.warnings);
  }
  if (ctx.space.facts_unsatisfiable) {
    Finding w;
    w.kind = FindingKind::Warning;
    w.message = "the fact annotations are jointly unsatisfiable; no run is explorable";
    result.warnings.push_back(std::move(w));
    return result;
  }

  std::vector<std::string> env = conformance_env_events(m, rs);
  int n = static_cast<int>(env.size());
  int cap = cfg.max_env_events_per_unit;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (__builtin_popcount(mask) > cap) continue;
    std::vector<std::string> subset;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) subset.push_back(env[static_cast<std::size_t>(i)]);
    ctx.env_choices.push_back(std::move(subset));
  }

  conf_detail::RunState init;
  init.state = m.initial;
  init.rules.rs = &rs;
  init.rules.tc = &ctx.tc;

  auto violating = conf_detail::search(ctx, std::move(init), 0);
  if (!violating) return result;

  // Canonical counterexample: trailing tocks that do not change the replayed
  // violations are stripped.
  Trace trace = std::move(violating->tokens);
  auto verdict = counterexample_verdict(rs, trace, tc, ctx.horizon);
  while (!trace.tokens.empty() && trace.tokens.back().kind == TraceToken::Kind::Tock) {
    Trace shorter = trace;
    shorter.tokens.pop_back();
    if (counterexample_verdict(rs, shorter, tc, ctx.horizon).first != verdict.first) break;
    trace = std::move(shorter);
  }
  verdict = counterexample_verdict(rs, trace, tc, ctx.horizon);

  result.conformant = false;
  result.counterexample = std::move(trace);
  std::vector<std::string> rules_hit = verdict.first;
  for (const auto& r : verdict.second) rules_hit.push_back(r);
  std::sort(rules_hit.begin(), rules_hit.end());
  rules_hit.erase(std::unique(rules_hit.begin(), rules_hit.end()), rules_hit.end());
  result.violated_rules = std::move(rules_hit);

  TraceCheckResult replay = check_trace(rs, *result.counterexample, tc);
  std::string text;
  for (const auto& f : replay.findings) {
    if (f.kind != FindingKind::Violation) continue;
    if (!text.empty()) text += "; ";
    text += f.message;
  }
  for (const auto& r : replay.residuals) {
    if (r.end > ctx.horizon - 1) continue;
    if (!text.empty()) text += "; ";
    text += "rule " + r.source_rule + ": " + requirement_text(r) +
            " left unmet within the horizon";
  }
  result.explanation = std::move(text);
  return result;
}

}  // namespace sleec
