#include <catch2/catch_amalgamated.hpp>

#include "sleec/monitor.hpp"
#include "sleec/parser.hpp"
#include "sleec/semantics.hpp"
#include "testutil.hpp"

using namespace sleec;

namespace {

struct FindingView {
  FindingKind kind;
  std::vector<std::string> rules;
  std::string message;

  friend bool operator==(const FindingView&, const FindingView&) = default;
};

std::vector<FindingView> views(const std::vector<Finding>& fs) {
  std::vector<FindingView> out;
  for (const auto& f : fs) out.push_back({f.kind, f.rule_ids, f.message});
  return out;
}

}  // namespace

TEST_CASE("a fresh session is at time zero with nothing live") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  MonitorSession s = open_session(rs, TimeConfig{});
  CHECK(s.now() == 0);
  CHECK(s.findings().empty());
  for (const char* e : {"MealTime", "InformUser", "CallEmergencySupport"})
    CHECK(s.query_blocked(e).status == BlockQuery::Status::Allowed);
}

TEST_CASE("the quantum rescales windows at session open") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  MonitorSession s = open_session(rs, TimeConfig{Duration{30, TimeUnit::Seconds}});
  StepReport r = s.step(TraceToken::event("SmokeDetectorAlarm"));
  REQUIRE(r.pending.size() == 1);
  CHECK(r.pending[0].end == 4);  // 2 minutes at a 30s quantum
}

TEST_CASE("a non-normalisable window is a configuration error") {
  auto parsed = parse_ruleset("event Go\nevent Act\n"
                              "R1 when Go then Act within 90 seconds\n");
  REQUIRE(parsed.ok());
  CHECK_THROWS_AS(open_session(*parsed.ruleset, TimeConfig{}), NonIntegralDuration);
  CHECK_NOTHROW(
      open_session(*parsed.ruleset, TimeConfig{Duration{30, TimeUnit::Seconds}}));
}

TEST_CASE("a tock on an empty session only advances time") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  MonitorSession s = open_session(rs, TimeConfig{});
  StepReport r = s.step(TraceToken::tock());
  CHECK(r.time == 1);
  CHECK(r.activations.empty());
  CHECK(r.violations.empty());
  CHECK(r.blocked.empty());
  CHECK(r.pending.empty());
}

TEST_CASE("query_blocked reflects live prohibitions and obligations") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  SECTION("a fall without assent blocks the call for four tocks") {
    MonitorSession s = open_session(rs, TimeConfig{});
    s.step(TraceToken::measure("humanAssents", false));
    s.step(TraceToken::event("HumanOnFloor"));
    for (int t = 0; t <= 4; ++t) {
      BlockQuery q = s.query_blocked("CallEmergencySupport");
      CHECK(q.status == BlockQuery::Status::Blocked);
      CHECK(q.blocking_rules == std::vector<std::string>{"R3"});
      s.step(TraceToken::tock());
    }
    CHECK(s.query_blocked("CallEmergencySupport").status ==
          BlockQuery::Status::Allowed);
  }
  SECTION("an alarm obliges the call with a deadline two tocks out") {
    MonitorSession s = open_session(rs, TimeConfig{});
    s.step(TraceToken::event("SmokeDetectorAlarm"));
    BlockQuery q = s.query_blocked("CallEmergencySupport");
    REQUIRE(q.status == BlockQuery::Status::Obliged);
    REQUIRE(q.obligations.size() == 1);
    CHECK(q.obligations[0].source_rule == "R2");
    CHECK(q.obligations[0].end == 2);
  }
  SECTION("querying an undeclared event is an error") {
    MonitorSession s = open_session(rs, TimeConfig{});
    CHECK_THROWS_AS(s.query_blocked("Nonsense"), UnknownCapability);
  }
}

TEST_CASE("the delayed-fetch trace raises R3 at the fifth tock after the fall") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  Trace tr = testutil::load_trace("delayed_fetch.trace", rs);
  MonitorSession s = open_session(rs, TimeConfig{});
  std::optional<std::size_t> violation_step;
  std::optional<std::size_t> fall_index;
  std::size_t tocks_after_fall = 0;
  for (std::size_t i = 0; i < tr.tokens.size(); ++i) {
    if (tr.tokens[i].kind == TraceToken::Kind::Event &&
        tr.tokens[i].name == "HumanOnFloor")
      fall_index = i;
    if (fall_index && i > *fall_index && tr.tokens[i].kind == TraceToken::Kind::Tock)
      ++tocks_after_fall;
    StepReport r = s.step(tr.tokens[i]);
    if (!r.violations.empty()) {
      REQUIRE_FALSE(violation_step.has_value());
      violation_step = i;
      CHECK(tr.tokens[i].kind == TraceToken::Kind::Tock);
      CHECK(tocks_after_fall == 5);
      CHECK(r.violations[0].rule_ids == std::vector<std::string>{"R3"});
    }
  }
  REQUIRE(violation_step.has_value());
  // The expiry precedes the final CallEmergencySupport token.
  CHECK(*violation_step < tr.tokens.size() - 1);
  CHECK(s.finish().empty());
  CHECK(s.findings().size() == 1);
}

TEST_CASE("hot reload keeps requirements whose rule text is unchanged") {
  Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
  Ruleset v2 = testutil::load_ruleset("care_robot_v2.sleec");
  SECTION("switching to the revised ruleset drops R3's live prohibition") {
    MonitorSession s = open_session(v1, TimeConfig{});
    s.step(TraceToken::event("SmokeDetectorAlarm"));
    s.step(TraceToken::measure("humanAssents", false));
    s.step(TraceToken::event("HumanOnFloor"));
    ReloadReport r = s.reload_ruleset(v2);
    CHECK(r.generation == 1);
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.dropped[0].source_rule == "R3");
    REQUIRE(r.kept.size() == 1);
    CHECK(r.kept[0].source_rule == "R2");
    CHECK(s.generation() == 1);
  }
  SECTION("reloading the identical ruleset drops nothing") {
    MonitorSession s = open_session(v1, TimeConfig{});
    s.step(TraceToken::event("SmokeDetectorAlarm"));
    ReloadReport r = s.reload_ruleset(v1);
    CHECK(r.dropped.empty());
    CHECK(r.kept.size() == 1);
  }
  SECTION("removing the event declaration of a live requirement is an error") {
    MonitorSession s = open_session(v1, TimeConfig{});
    s.step(TraceToken::event("SmokeDetectorAlarm"));
    Ruleset broken = v1;
    broken.rules.clear();
    broken.annotations.clear();
    std::erase_if(broken.declarations,
                  [](const CapabilityDecl& d) { return d.name == "CallEmergencySupport"; });
    CHECK_THROWS_AS(s.reload_ruleset(broken), MissingCapability);
  }
}

TEST_CASE("online and offline checking agree on random traces") {
  TimeConfig tc;
  testutil::Rng rng(2024);
  for (const char* corpus : {"care_robot_v1.sleec", "care_robot_v2.sleec"}) {
    Ruleset rs = testutil::load_ruleset(corpus);
    for (int i = 0; i < 200; ++i) {
      Trace tr = testutil::random_trace(rng, rs, 40);
      TraceCheckResult offline = check_trace(rs, tr, tc);
      MonitorSession s = open_session(rs, tc);
      for (const auto& t : tr.tokens) s.step(t);
      std::vector<Requirement> residuals = s.finish();
      CHECK(views(s.findings()) == views(offline.findings));
      CHECK(residuals == offline.residuals);
    }
  }
}

TEST_CASE("query_blocked is consistent with actually emitting the event") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  TimeConfig tc;
  testutil::Rng rng(555);
  for (int i = 0; i < 120; ++i) {
    Trace prefix = testutil::random_trace(rng, rs, 25);
    MonitorSession s = open_session(rs, tc);
    for (const auto& t : prefix.tokens) s.step(t);
    for (const auto& d : rs.declarations) {
      if (d.kind != CapabilityKind::Event) continue;
      BlockQuery q = s.query_blocked(d.name);
      MonitorSession probe = s;  // sessions are values; copy and poke
      StepReport r = probe.step(TraceToken::event(d.name));
      bool prohibition_hit = false;
      for (const auto& f : r.violations)
        prohibition_hit |= f.message.find("despite") != std::string::npos;
      if (q.status == BlockQuery::Status::Blocked)
        CHECK(prohibition_hit);
      else
        CHECK_FALSE(prohibition_hit);
    }
  }
}

TEST_CASE("every obligation ends up pending, discharged, or violated exactly once") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  TimeConfig tc;
  testutil::Rng rng(99);
  for (int i = 0; i < 120; ++i) {
    Trace tr = testutil::random_trace(rng, rs, 30);
    MonitorSession s = open_session(rs, tc);
    std::size_t created = 0, discharged = 0, violated = 0;
    for (const auto& t : tr.tokens) {
      StepReport r = s.step(t);
      for (const auto& a : r.activations)
        if (a.activation.requirement &&
            a.activation.requirement->kind == RequirementKind::Obligation)
          ++created;
      discharged += r.discharged.size();
      for (const auto& f : r.violations)
        if (f.message.find("expired") != std::string::npos) ++violated;
    }
    std::size_t residual = s.finish().size();
    CHECK(created == discharged + violated + residual);
  }
}

TEST_CASE("fail-stop mode halts the session at the first violation") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  MonitorSession s = open_session(rs, TimeConfig{}, MonitorOptions{false, true});
  s.step(TraceToken::measure("humanAssents", false));
  s.step(TraceToken::event("HumanOnFloor"));
  StepReport r = s.step(TraceToken::event("CallEmergencySupport"));
  CHECK_FALSE(r.violations.empty());
  CHECK(s.halted());
  CHECK_THROWS_AS(s.step(TraceToken::tock()), std::logic_error);
}

TEST_CASE("step reports serialise with a stable key order") {
  Ruleset rs = testutil::load_ruleset("care_robot_v1.sleec");
  MonitorSession s = open_session(rs, TimeConfig{});
  StepReport r = s.step(TraceToken::event("SmokeDetectorAlarm"));
  std::string json = step_report_json(r).dump();
  CHECK(json.find("{\"t\":0,\"activations\":[") == 0);
  CHECK(json.find("\"violations\":[") != std::string::npos);
  CHECK(json.find("\"blocked\":[") != std::string::npos);
  CHECK(json.find("\"pending\":[") != std::string::npos);
  CHECK(json.find("\"violations\"") < json.find("\"blocked\""));
  CHECK(json.find("\"blocked\"") < json.find("\"pending\""));
}
