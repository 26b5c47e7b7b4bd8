#include <catch2/catch_amalgamated.hpp>

#include <tuple>

#include "sleec/format.hpp"
#include "sleec/parser.hpp"
#include "sleec/wellformedness.hpp"
#include "testutil.hpp"

using namespace sleec;

namespace {

SearchConfig at_horizon(std::int64_t h) {
  SearchConfig cfg;
  cfg.horizon = h;
  return cfg;
}

using Key = std::tuple<FindingKind, std::vector<std::string>, std::string>;

std::set<Key> finding_keys(const std::vector<Finding>& fs, FindingKind kind) {
  std::set<Key> out;
  for (const auto& f : fs)
    if (f.kind == kind) out.insert({f.kind, f.rule_ids, f.annotation_id.value_or("")});
  return out;
}

}  // namespace

TEST_CASE("classify_events splits the alphabet by response position") {
  SECTION("table 1 capabilities") {
    auto parsed = parse_ruleset(
        "event MealTime\nevent InformUser\nevent RemindLater\n"
        "event SmokeDetectorAlarm\nevent CallEmergencySupport\nevent HumanOnFloor\n"
        "measure userOccupied: boolean\nmeasure humanAssents: boolean\n"
        "R1 when MealTime then InformUser within 10 minutes\n"
        "  unless userOccupied then RemindLater\n"
        "R2 when SmokeDetectorAlarm then CallEmergencySupport within 2 minutes\n"
        "R3 when HumanOnFloor then CallEmergencySupport within 4 minutes\n"
        "  unless not humanAssents then not CallEmergencySupport within 4 minutes\n");
    REQUIRE(parsed.ok());
    ClassifiedEvents c = classify_events(*parsed.ruleset);
    CHECK(c.agent == std::vector<std::string>{"InformUser", "RemindLater",
                                              "CallEmergencySupport"});
    CHECK(c.environment == std::vector<std::string>{"MealTime", "SmokeDetectorAlarm",
                                                    "HumanOnFloor"});
  }
  SECTION("no rules: everything is environmental") {
    auto parsed = parse_ruleset("event A\nevent B\n");
    REQUIRE(parsed.ok());
    ClassifiedEvents c = classify_events(*parsed.ruleset);
    CHECK(c.agent.empty());
    CHECK(c.environment == std::vector<std::string>{"A", "B"});
  }
  SECTION("an event that is both trigger and response is an agent event") {
    auto parsed = parse_ruleset("event X\nA when X then X\n");
    REQUIRE(parsed.ok());
    ClassifiedEvents c = classify_events(*parsed.ruleset);
    CHECK(c.agent == std::vector<std::string>{"X"});
    CHECK(c.environment.empty());
  }
}

TEST_CASE("R2 and R3 conflict; the revised R3' does not") {
  Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
  Ruleset v2 = testutil::load_ruleset("care_robot_v2.sleec");
  TimeConfig tc;

  SECTION("the table-1 pair conflicts with a containment witness") {
    WfResult r = check_conflict(v1, "R2", "R3", at_horizon(8), tc);
    REQUIRE(r.finding.has_value());
    CHECK(r.finding->kind == FindingKind::Conflict);
    CHECK(r.finding->rule_ids == std::vector<std::string>{"R2", "R3"});
    REQUIRE(r.finding->witness.has_value());
    CHECK(r.finding->message.find("lies inside") != std::string::npos);

    // The witness really contains a fall without assent and an alarm whose
    // whole response window the prohibition covers.
    const Trace& w = *r.finding->witness;
    MeasureState ms;
    std::optional<std::int64_t> fall, alarm;
    for (std::size_t i = 0; i < w.tokens.size(); ++i) {
      const auto& t = w.tokens[i];
      if (t.kind == TraceToken::Kind::Measure) ms.set(t.name, t.value);
      if (t.kind == TraceToken::Kind::Event && t.name == "HumanOnFloor" && !fall) {
        auto v = ms.read("humanAssents");
        REQUIRE(v != nullptr);
        CHECK(std::get<bool>(*v) == false);
        fall = w.timestamp_of(i);
      }
      if (t.kind == TraceToken::Kind::Event && t.name == "SmokeDetectorAlarm" && !alarm)
        alarm = w.timestamp_of(i);
    }
    REQUIRE(fall.has_value());
    REQUIRE(alarm.has_value());
    CHECK(*alarm >= *fall);
    CHECK(*alarm + 2 <= *fall + 4);  // obligation window inside prohibition window
  }
  SECTION("the revised defeater removes the conflict") {
    CHECK_FALSE(check_conflict(v2, "R2", "R3'", at_horizon(8), tc).finding.has_value());
  }
  SECTION("other table-1 pairs are conflict-free") {
    CHECK_FALSE(check_conflict(v1, "R1", "R2", at_horizon(8), tc).finding.has_value());
    CHECK_FALSE(check_conflict(v1, "R1", "R3", at_horizon(8), tc).finding.has_value());
  }
  SECTION("a rule does not conflict with itself") {
    CHECK_FALSE(check_conflict(v1, "R1", "R1", at_horizon(8), tc).finding.has_value());
    CHECK_FALSE(check_conflict(v1, "R3", "R3", at_horizon(8), tc).finding.has_value());
  }
  SECTION("whole-ruleset mode finds the same forced pair") {
    SearchConfig cfg = at_horizon(8);
    cfg.whole_ruleset_conflict = true;
    WfResult r = check_conflict_whole(v1, cfg, tc);
    REQUIRE(r.finding.has_value());
    CHECK(r.finding->rule_ids == std::vector<std::string>{"R2", "R3"});
    CHECK_FALSE(check_conflict_whole(v2, cfg, tc).finding.has_value());
  }
  SECTION("one environment event per unit forces a staggered witness") {
    SearchConfig cfg = at_horizon(8);
    cfg.max_env_events_per_unit = 1;
    WfResult r = check_conflict(v1, "R2", "R3", cfg, tc);
    REQUIRE(r.finding.has_value());
    // The fall and the alarm now sit in different units; the containment must
    // still hold in the witness.
    const Trace& w = *r.finding->witness;
    std::optional<std::int64_t> fall, alarm;
    for (std::size_t i = 0; i < w.tokens.size(); ++i) {
      if (w.tokens[i].kind != TraceToken::Kind::Event) continue;
      if (w.tokens[i].name == "HumanOnFloor" && !fall) fall = w.timestamp_of(i);
      if (w.tokens[i].name == "SmokeDetectorAlarm" && !alarm) alarm = w.timestamp_of(i);
    }
    REQUIRE((fall && alarm));
    CHECK(*fall != *alarm);
    CHECK(*alarm >= *fall);
    CHECK(*alarm + 2 <= *fall + 4);
  }
}

TEST_CASE("redundancy detection") {
  TimeConfig tc;
  SECTION("a textual duplicate is redundant both ways") {
    auto parsed = parse_ruleset(
        "event SmokeDetectorAlarm\nevent CallEmergencySupport\n"
        "R2 when SmokeDetectorAlarm then CallEmergencySupport within 2 minutes\n"
        "R4 when SmokeDetectorAlarm then CallEmergencySupport within 2 minutes\n");
    REQUIRE(parsed.ok());
    CHECK(check_redundancy(*parsed.ruleset, "R4", "R2", at_horizon(8), tc).finding);
    CHECK(check_redundancy(*parsed.ruleset, "R2", "R4", at_horizon(8), tc).finding);
  }
  SECTION("a widened window is redundant given the tighter rule, not conversely") {
    auto parsed = parse_ruleset(
        "event SmokeDetectorAlarm\nevent CallEmergencySupport\n"
        "RW when SmokeDetectorAlarm then CallEmergencySupport within 4 minutes\n"
        "R2 when SmokeDetectorAlarm then CallEmergencySupport within 2 minutes\n");
    REQUIRE(parsed.ok());
    CHECK(check_redundancy(*parsed.ruleset, "RW", "R2", at_horizon(8), tc).finding);
    CHECK_FALSE(check_redundancy(*parsed.ruleset, "R2", "RW", at_horizon(8), tc).finding);
  }
  SECTION("R1 and R2 are independent in both directions") {
    Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
    CHECK_FALSE(check_redundancy(v1, "R1", "R2", at_horizon(8), tc).finding);
    CHECK_FALSE(check_redundancy(v1, "R2", "R1", at_horizon(8), tc).finding);
  }
  SECTION("the reflexive case is trivially redundant") {
    Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
    CHECK(check_redundancy(v1, "R2", "R2", at_horizon(8), tc).finding);
  }
}

TEST_CASE("insufficiency: a compliant trace can exhibit the concern") {
  TimeConfig tc;
  SECTION("R2 alone does not force a call after a fall") {
    auto parsed = parse_ruleset(
        "event SmokeDetectorAlarm\nevent CallEmergencySupport\nevent HumanOnFloor\n"
        "measure humanAssents: boolean\nmeasure userResponsive: boolean\n"
        "R2 when SmokeDetectorAlarm then CallEmergencySupport within 2 minutes\n"
        "fact f1 not userResponsive implies not humanAssents\n"
        "concern c1 when HumanOnFloor and not userResponsive then "
        "not CallEmergencySupport within 4 minutes\n");
    REQUIRE(parsed.ok());
    WfResult r = check_insufficiency(*parsed.ruleset, "c1", at_horizon(8), tc);
    REQUIRE(r.finding.has_value());
    REQUIRE(r.finding->witness.has_value());

    // Witness soundness: the trace is rule-compliant in strict mode and
    // exhibits the concern per an independent pattern check.
    const Trace& w = *r.finding->witness;
    auto replay = check_trace(*parsed.ruleset, w, tc, CheckOptions{true});
    CHECK(replay.findings.empty());

    MeasureState ms;
    bool exhibited = false;
    for (std::size_t i = 0; i < w.tokens.size(); ++i) {
      const auto& t = w.tokens[i];
      if (t.kind == TraceToken::Kind::Measure) ms.set(t.name, t.value);
      if (t.kind != TraceToken::Kind::Event || t.name != "HumanOnFloor") continue;
      auto resp = ms.read("userResponsive");
      if (!resp || std::get<bool>(*resp)) continue;
      std::int64_t at = w.timestamp_of(i);
      bool called = false;
      for (std::size_t j = i + 1; j < w.tokens.size(); ++j)
        if (w.tokens[j].kind == TraceToken::Kind::Event &&
            w.tokens[j].name == "CallEmergencySupport" && w.timestamp_of(j) <= at + 4)
          called = true;
      if (!called && at + 4 <= w.total_tocks()) exhibited = true;
    }
    CHECK(exhibited);
  }
  SECTION("the revised ruleset forecloses the concern") {
    Ruleset v2 = testutil::load_ruleset("care_robot_v2.sleec");
    CHECK_FALSE(check_insufficiency(v2, "c1", at_horizon(8), TimeConfig{}).finding);
  }
  SECTION("a concern with an unsatisfiable guard is vacuous") {
    auto parsed = parse_ruleset(
        "event Go\nevent Act\nmeasure ready: boolean\n"
        "R1 when Go then Act\n"
        "fact f1 ready\n"
        "concern c1 when Go and not ready then not Act within 2 minutes\n");
    REQUIRE(parsed.ok());
    WfResult r = check_insufficiency(*parsed.ruleset, "c1", at_horizon(6), TimeConfig{});
    CHECK_FALSE(r.finding.has_value());
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].message.find("vacuous") != std::string::npos);
  }
}

TEST_CASE("over-restrictiveness names R3 as the blocking rule") {
  TimeConfig tc;
  SECTION("table 1 blocks the safety purpose") {
    Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
    WfResult r = check_overrestrictiveness(v1, "p1", at_horizon(8), tc);
    REQUIRE(r.finding.has_value());
    CHECK(r.finding->kind == FindingKind::OverRestrictiveness);
    CHECK(r.finding->rule_ids == std::vector<std::string>{"R3"});
    CHECK(r.finding->annotation_id == std::optional<std::string>("p1"));
    CHECK(r.finding->horizon == std::optional<std::int64_t>(8));
    CHECK_FALSE(r.finding->witness.has_value());
  }
  SECTION("the revised ruleset achieves the purpose") {
    Ruleset v2 = testutil::load_ruleset("care_robot_v2.sleec");
    CHECK_FALSE(check_overrestrictiveness(v2, "p1", at_horizon(8), tc).finding);
  }
  SECTION("a constant-false purpose guard is vacuously unachievable") {
    auto parsed = parse_ruleset(
        "event Go\nevent Act\n"
        "R1 when Go then Act\n"
        "purpose p1 when Go and false then Act within 2 minutes\n");
    REQUIRE(parsed.ok());
    WfResult r = check_overrestrictiveness(*parsed.ruleset, "p1", at_horizon(6), tc);
    REQUIRE(r.finding.has_value());
    CHECK(r.finding->rule_ids.empty());
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].message.find("vacuous") != std::string::npos);
  }
}

TEST_CASE("analyze composes the per-check findings deterministically") {
  Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
  Ruleset v2 = testutil::load_ruleset("care_robot_v2.sleec");
  TimeConfig tc;

  SECTION("conflict and over-restrictiveness on table 1, exactly") {
    SearchConfig cfg = at_horizon(8);
    cfg.checks = {WfCheck::Conflict, WfCheck::OverRestrictiveness};
    std::vector<Finding> findings = analyze(v1, cfg, tc);
    auto conflicts = finding_keys(findings, FindingKind::Conflict);
    auto overr = finding_keys(findings, FindingKind::OverRestrictiveness);
    CHECK(conflicts ==
          std::set<Key>{{FindingKind::Conflict, {"R2", "R3"}, ""}});
    CHECK(overr ==
          std::set<Key>{{FindingKind::OverRestrictiveness, {"R3"}, "p1"}});
    CHECK(finding_keys(findings, FindingKind::Redundancy).empty());
    CHECK(finding_keys(findings, FindingKind::Insufficiency).empty());
  }
  SECTION("the revised corpus is clean under every check") {
    std::vector<Finding> findings = analyze(v2, at_horizon(8), tc);
    for (const auto& f : findings) CHECK(f.kind == FindingKind::Warning);
  }
  SECTION("an empty ruleset yields no findings") {
    CHECK(analyze(Ruleset{}, at_horizon(8), tc).empty());
  }
  SECTION("two runs produce identical findings") {
    SearchConfig cfg = at_horizon(8);
    auto a = analyze(v1, cfg, tc);
    auto b = analyze(v1, cfg, tc);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].kind == b[i].kind);
      CHECK(a[i].rule_ids == b[i].rule_ids);
      CHECK(a[i].message == b[i].message);
      CHECK((a[i].witness.has_value() ? format_trace(*a[i].witness) : "") ==
            (b[i].witness.has_value() ? format_trace(*b[i].witness) : ""));
    }
  }
  SECTION("a short horizon draws a warning for R1's ten-minute window") {
    std::vector<Finding> findings = analyze(v1, at_horizon(8), tc);
    bool warned = false;
    for (const auto& f : findings)
      if (f.kind == FindingKind::Warning && f.message.find("R1") != std::string::npos)
        warned = true;
    CHECK(warned);
  }
  SECTION("check filtering leaves only the requested kinds") {
    SearchConfig cfg = at_horizon(8);
    cfg.checks = {WfCheck::Conflict};
    for (const auto& f : analyze(v1, cfg, tc))
      CHECK((f.kind == FindingKind::Conflict || f.kind == FindingKind::Warning));
  }
}

TEST_CASE("horizon monotonicity of the four checks") {
  Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
  TimeConfig tc;
  std::vector<Finding> prev;
  for (std::int64_t h : {4, 6, 8}) {
    std::vector<Finding> cur = analyze(v1, at_horizon(h), tc);
    if (!prev.empty() || h > 4) {
      // Existential checks only grow; universal checks only shrink.
      for (FindingKind kind : {FindingKind::Conflict, FindingKind::Insufficiency}) {
        auto small = finding_keys(prev, kind);
        auto large = finding_keys(cur, kind);
        for (const auto& k : small) CHECK(large.count(k) == 1);
      }
      for (FindingKind kind :
           {FindingKind::Redundancy, FindingKind::OverRestrictiveness}) {
        auto small = finding_keys(cur, kind);
        auto large = finding_keys(prev, kind);
        for (const auto& k : small) CHECK(large.count(k) == 1);
      }
    }
    prev = std::move(cur);
  }
}

TEST_CASE("conflict witnesses replay to a violation under every agent schedule") {
  Ruleset v1 = testutil::load_ruleset("care_robot_v1.sleec");
  TimeConfig tc;
  WfResult r = check_conflict(v1, "R2", "R3", at_horizon(4), tc);
  REQUIRE(r.finding.has_value());
  const Trace& witness = *r.finding->witness;

  // Split the witness into units and inject every agent-event subset per unit.
  std::vector<std::vector<TraceToken>> units(1);
  for (const auto& t : witness.tokens) {
    units.back().push_back(t);
    if (t.kind == TraceToken::Kind::Tock) units.emplace_back();
  }
  const std::vector<std::string> agent = {"InformUser", "RemindLater",
                                          "CallEmergencySupport"};
  std::size_t n_units = units.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n_units; ++i) combos *= 8;
  for (std::size_t pick = 0; pick < combos; ++pick) {
    Trace combined;
    std::size_t p = pick;
    for (const auto& unit : units) {
      bool had_tock = !unit.empty() && unit.back().kind == TraceToken::Kind::Tock;
      for (const auto& t : unit)
        if (t.kind != TraceToken::Kind::Tock) combined.tokens.push_back(t);
      std::size_t subset = p % 8;
      p /= 8;
      for (std::size_t b = 0; b < 3; ++b)
        if (subset & (1u << b)) combined.tokens.push_back(TraceToken::event(agent[b]));
      if (had_tock) combined.tokens.push_back(TraceToken::tock());
    }
    auto replay = check_trace(v1, combined, tc);
    bool violated_pair = false;
    for (const auto& f : replay.findings)
      if (f.kind == FindingKind::Violation &&
          (f.rule_ids.front() == "R2" || f.rule_ids.front() == "R3"))
        violated_pair = true;
    REQUIRE(violated_pair);
  }
}
