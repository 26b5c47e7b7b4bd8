#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/parser.hpp"

#ifndef SLEEC_CORPUS_DIR
#error "SLEEC_CORPUS_DIR must be defined by the build"
#endif

namespace testutil {

inline std::string corpus_path(const std::string& name) {
  return std::string(SLEEC_CORPUS_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline sleec::Ruleset load_ruleset(const std::string& corpus_name) {
  auto parsed = sleec::parse_ruleset(read_file(corpus_path(corpus_name)));
  if (!parsed.ok()) throw std::runtime_error("corpus ruleset failed to parse");
  return std::move(*parsed.ruleset);
}

inline sleec::Trace load_trace(const std::string& corpus_name, const sleec::Ruleset& rs) {
  auto parsed = sleec::parse_trace(read_file(corpus_path(corpus_name)), rs);
  if (!parsed.ok()) throw std::runtime_error("corpus trace failed to parse");
  return std::move(*parsed.trace);
}

inline std::string trimmed(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

// ---------------------------------------------------------------------------
// Generators (deterministic; callers pass a seeded engine)

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}
inline bool coin(Rng& rng) { return pick(rng, 0, 1) == 1; }

struct GenAlphabet {
  std::vector<std::string> events;
  std::vector<std::string> bool_measures;
  std::vector<std::string> num_measures;
};

inline GenAlphabet default_alphabet() {
  return {{"Alpha", "Beta", "Gamma", "Delta", "Omega"},
          {"ready", "seen", "open"},
          {"level", "temp"}};
}

inline sleec::Guard random_guard(Rng& rng, const GenAlphabet& a, int depth) {
  using sleec::Guard;
  int choice = depth <= 0 ? pick(rng, 0, 3) : pick(rng, 0, 7);
  switch (choice) {
    case 0:
      return Guard::constant_guard(coin(rng));
    case 1:
    case 2:
      return Guard::atom(a.bool_measures[static_cast<std::size_t>(
          pick(rng, 0, static_cast<int>(a.bool_measures.size()) - 1))]);
    case 3: {
      static const sleec::Relop ops[] = {sleec::Relop::Lt, sleec::Relop::Le,
                                         sleec::Relop::Gt, sleec::Relop::Ge,
                                         sleec::Relop::Eq, sleec::Relop::Ne};
      return Guard::comparison(
          a.num_measures[static_cast<std::size_t>(
              pick(rng, 0, static_cast<int>(a.num_measures.size()) - 1))],
          ops[pick(rng, 0, 5)], pick(rng, 0, 50));
    }
    case 4:
      return Guard::negation(random_guard(rng, a, depth - 1));
    case 5:
      return Guard::binary(Guard::Kind::And, random_guard(rng, a, depth - 1),
                           random_guard(rng, a, depth - 1));
    case 6:
      return Guard::binary(Guard::Kind::Or, random_guard(rng, a, depth - 1),
                           random_guard(rng, a, depth - 1));
    default:
      return Guard::binary(Guard::Kind::Implies, random_guard(rng, a, depth - 1),
                           random_guard(rng, a, depth - 1));
  }
}

inline sleec::Response random_response(Rng& rng, const GenAlphabet& a) {
  sleec::Response r;
  r.negated = coin(rng);
  r.event = a.events[static_cast<std::size_t>(
      pick(rng, 0, static_cast<int>(a.events.size()) - 1))];
  if (coin(rng)) {
    static const sleec::TimeUnit units[] = {sleec::TimeUnit::Seconds,
                                            sleec::TimeUnit::Minutes,
                                            sleec::TimeUnit::Hours};
    r.window = sleec::Duration{pick(rng, 0, 12), units[pick(rng, 0, 2)]};
  }
  return r;
}

// A structurally valid ruleset over the fixed alphabet; name resolution and
// type checks hold by construction.
inline sleec::Ruleset random_ruleset(Rng& rng) {
  GenAlphabet a = default_alphabet();
  sleec::Ruleset rs;
  for (const auto& e : a.events)
    rs.declarations.push_back({sleec::CapabilityKind::Event, e, {}, {}});
  for (const auto& m : a.bool_measures)
    rs.declarations.push_back(
        {sleec::CapabilityKind::Measure, m, sleec::MeasureType::Boolean, {}});
  for (const auto& m : a.num_measures)
    rs.declarations.push_back(
        {sleec::CapabilityKind::Measure, m, sleec::MeasureType::Numeric, {}});

  int n_rules = pick(rng, 0, 4);
  for (int i = 0; i < n_rules; ++i) {
    sleec::Rule r;
    r.id = "R" + std::to_string(i + 1) + (coin(rng) ? "'" : "");
    r.trigger_event = a.events[static_cast<std::size_t>(
        pick(rng, 0, static_cast<int>(a.events.size()) - 1))];
    if (coin(rng)) r.trigger_guard = random_guard(rng, a, 2);
    r.response = random_response(rng, a);
    int n_def = pick(rng, 0, 2);
    for (int d = 0; d < n_def; ++d) {
      sleec::Defeater def;
      def.guard = random_guard(rng, a, 2);
      if (coin(rng)) def.response = random_response(rng, a);
      r.defeaters.push_back(std::move(def));
    }
    rs.rules.push_back(std::move(r));
  }
  int n_ann = pick(rng, 0, 2);
  for (int i = 0; i < n_ann; ++i) {
    sleec::Annotation ann;
    int kind = pick(rng, 0, 2);
    ann.id = std::string(kind == 0 ? "c" : kind == 1 ? "p" : "f") + std::to_string(i + 1);
    if (kind == 2) {
      ann.kind = sleec::AnnotationKind::Fact;
      ann.fact = random_guard(rng, a, 2);
    } else {
      ann.kind = kind == 0 ? sleec::AnnotationKind::Concern : sleec::AnnotationKind::Purpose;
      ann.trigger_event = a.events[static_cast<std::size_t>(
          pick(rng, 0, static_cast<int>(a.events.size()) - 1))];
      if (coin(rng)) ann.trigger_guard = random_guard(rng, a, 2);
      ann.response = random_response(rng, a);
    }
    rs.annotations.push_back(std::move(ann));
  }
  return rs;
}

// Random trace over a ruleset's declared alphabet: events, boolean/numeric
// readings, and tocks.
inline sleec::Trace random_trace(Rng& rng, const sleec::Ruleset& rs, int max_len) {
  sleec::Trace out;
  std::vector<const sleec::CapabilityDecl*> events, measures;
  for (const auto& d : rs.declarations)
    (d.kind == sleec::CapabilityKind::Event ? events : measures).push_back(&d);
  int len = pick(rng, 0, max_len);
  for (int i = 0; i < len; ++i) {
    switch (pick(rng, 0, 2)) {
      case 0:
        out.tokens.push_back(sleec::TraceToken::tock());
        break;
      case 1:
        if (!events.empty()) {
          out.tokens.push_back(sleec::TraceToken::event(
              events[static_cast<std::size_t>(
                         pick(rng, 0, static_cast<int>(events.size()) - 1))]
                  ->name));
        }
        break;
      default:
        if (!measures.empty()) {
          const auto* m = measures[static_cast<std::size_t>(
              pick(rng, 0, static_cast<int>(measures.size()) - 1))];
          sleec::MeasureValue v;
          if (m->measure_type == sleec::MeasureType::Boolean)
            v = coin(rng);
          else
            v = static_cast<double>(pick(rng, 0, 50));
          out.tokens.push_back(sleec::TraceToken::measure(m->name, v));
        }
        break;
    }
  }
  return out;
}

}  // namespace testutil
