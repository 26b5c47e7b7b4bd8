#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sleec/cli.hpp"
#include "testutil.hpp"

using namespace sleec;
using json = nlohmann::json;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(std::vector<std::string> args, const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  cli::CliIO io{in, out, err, false};
  int code = cli::run_cli(std::move(args), io);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / ("sleec_test_" + name);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  return path.string();
}

std::string v1() { return testutil::corpus_path("care_robot_v1.sleec"); }
std::string v2() { return testutil::corpus_path("care_robot_v2.sleec"); }

}  // namespace

TEST_CASE("check: exit codes and diagnostics") {
  CHECK(run({"check", v2()}).code == 0);
  CHECK(run({"check", "does_not_exist.sleec"}).code == 2);

  std::string bad = temp_file("bad.sleec", "event Go\nR1 when then Go\n");
  RunResult r = run({"check", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find(":2:") != std::string::npos);  // line of the error

  RunResult rj = run({"check", "--json", bad});
  CHECK(rj.code == 2);
  json diags = json::parse(rj.out);
  REQUIRE(diags.is_array());
  CHECK(diags[0]["severity"] == "error");
  CHECK(diags[0]["line"] == 2);
  std::remove(bad.c_str());
}

TEST_CASE("analyze: findings drive the exit code") {
  RunResult r1 = run({"analyze", v1(), "--horizon", "8", "--json"});
  CHECK(r1.code == 1);
  json findings = json::parse(r1.out);
  bool conflict = false, overrestrictive = false;
  for (const auto& f : findings) {
    if (f["kind"] == "conflict" && f["rules"] == json::array({"R2", "R3"}))
      conflict = true;
    if (f["kind"] == "over-restrictiveness" && f["rules"] == json::array({"R3"}))
      overrestrictive = true;
  }
  CHECK(conflict);
  CHECK(overrestrictive);

  RunResult r2 = run({"analyze", v2(), "--horizon", "8"});
  CHECK(r2.code == 0);

  RunResult filtered = run({"analyze", v1(), "--horizon", "8", "--checks", "conflict",
                            "--json"});
  CHECK(filtered.code == 1);
  for (const auto& f : json::parse(filtered.out))
    CHECK((f["kind"] == "conflict" || f["kind"] == "warning"));

  CHECK(run({"analyze", v1(), "--checks", "nonsense"}).code == 2);
}

TEST_CASE("analyze: JSON output is byte-identical across runs") {
  RunResult a = run({"analyze", v1(), "--horizon", "6", "--json"});
  RunResult b = run({"analyze", v1(), "--horizon", "6", "--json"});
  CHECK(a.out == b.out);
  CHECK(a.out.back() == '\n');
}

TEST_CASE("monitor: batch replay of the corpus counterexample") {
  RunResult r = run({"monitor", v1(), "--trace", testutil::corpus_path("delayed_fetch.trace")});
  CHECK(r.code == 1);
  CHECK(r.out.find("R3") != std::string::npos);

  RunResult clean =
      run({"monitor", v2(), "--trace", testutil::corpus_path("empty.trace")});
  CHECK(clean.code == 0);
}

TEST_CASE("monitor: streaming emits one JSON report per token") {
  std::string tokens =
      "MealTime\nuserOccupied.false\nInformUser\ntock\nFetchingIngredients\n"
      "HumanOnFloor\ntock\ntock\ntock\nAbandonFetchingIngredients\ntock\ntock\n"
      "humanAssents.true\nCallEmergencySupport\n";
  RunResult r = run({"monitor", v1()}, tokens);
  CHECK(r.code == 1);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0, violation_line = -1;
  while (std::getline(lines, line)) {
    ++count;
    json step = json::parse(line);
    REQUIRE(step.contains("t"));
    if (!step["violations"].empty() && violation_line < 0) violation_line = count;
  }
  CHECK(count == 14);
  // The deadline expires at the sixth tock of the stream: line 12.
  CHECK(violation_line == 12);
}

TEST_CASE("verify: counterexample and conformance paths") {
  RunResult bad = run({"verify", v1(), "--model",
                       testutil::corpus_path("delayed_fetch.smodel"), "--json"});
  CHECK(bad.code == 1);
  json j = json::parse(bad.out);
  CHECK(j["conformant"] == false);
  CHECK(j["counterexample"] ==
        testutil::trimmed(testutil::read_file(testutil::corpus_path("delayed_fetch.trace"))));
  CHECK(j["violated"] == json::array({"R3"}));

  RunResult good = run({"verify", v2(), "--model",
                        testutil::corpus_path("prompt_responder.smodel")});
  CHECK(good.code == 0);
  CHECK(good.out.find("Conformant at horizon 8") != std::string::npos);

  CHECK(run({"verify", v1()}).code == 2);  // no --model
}

TEST_CASE("fmt: canonical corpus passes --check; drift is rewritten") {
  CHECK(run({"fmt", v1(), "--check"}).code == 0);
  CHECK(run({"fmt", v2(), "--check"}).code == 0);

  std::string messy = temp_file(
      "messy.sleec",
      "event   Go\nevent Act\nR1   when Go then Act within 1 minutes "
      "unless (true) then not Act\n");
  CHECK(run({"fmt", messy, "--check"}).code == 1);
  RunResult printed = run({"fmt", messy});
  CHECK(printed.code == 0);
  CHECK(printed.out.find("R1 when Go then Act within 1 minute\n") != std::string::npos);
  CHECK(run({"fmt", messy, "--write"}).code == 0);
  CHECK(run({"fmt", messy, "--check"}).code == 0);
  CHECK(run({"fmt", messy, "--write", "--check"}).code == 2);
  std::remove(messy.c_str());
}

TEST_CASE("fmt: an empty file is already canonical") {
  std::string empty = temp_file("empty.sleec", "");
  CHECK(run({"fmt", empty, "--check"}).code == 0);
  std::remove(empty.c_str());
}

TEST_CASE("whole-set conflict mode is reachable from the command line") {
  RunResult r = run({"analyze", v1(), "--horizon", "8", "--checks", "conflict",
                     "--whole-set-conflict", "--json"});
  CHECK(r.code == 1);
  json findings = json::parse(r.out);
  bool found = false;
  for (const auto& f : findings)
    if (f["kind"] == "conflict" && f["rules"] == json::array({"R2", "R3"})) found = true;
  CHECK(found);
}

TEST_CASE("quantum flag rescales analysis time") {
  // At a 30s quantum the two-minute window becomes four tocks; with the same
  // horizon the conflict survives.
  RunResult r = run({"analyze", v1(), "--horizon", "12", "--quantum", "30s",
                     "--checks", "conflict", "--json"});
  CHECK(r.code == 1);
  CHECK(run({"analyze", v1(), "--quantum", "bogus"}).code == 2);
  // 90 seconds does not divide into whole minutes: configuration error.
  CHECK(run({"analyze", v1(), "--quantum", "90s", "--horizon", "8"}).code == 2);
}

TEST_CASE("printed witnesses feed back into the monitor") {
  RunResult analyzed = run({"analyze", v1(), "--horizon", "8", "--json"});
  REQUIRE(analyzed.code == 1);
  json findings = json::parse(analyzed.out);
  int checked = 0;
  for (const auto& f : findings) {
    if (f["witness"].is_null()) continue;
    std::string witness = f["witness"].get<std::string>();
    std::string path = temp_file("witness" + std::to_string(checked) + ".trace",
                                 witness + "\n");
    RunResult replay = run({"monitor", v1(), "--trace", path});
    if (f["kind"] == "conflict") {
      // No schedule satisfies both rules; the silent schedule already violates.
      CHECK(replay.code == 1);
    } else if (f["kind"] == "insufficiency") {
      CHECK(replay.code == 0);
    }
    std::remove(path.c_str());
    ++checked;
  }
  CHECK(checked >= 2);
}

TEST_CASE("strict warnings flip the exit code") {
  std::string warny = temp_file(
      "warny.sleec",
      "event Go\nevent Act\nmeasure a: boolean\n"
      "R1 when Go and a and not a then Act\n");
  CHECK(run({"check", warny}).code == 0);
  CHECK(run({"check", warny, "--strict-warnings"}).code == 1);
  std::remove(warny.c_str());
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze"}).code == 2);
  CHECK(run({"analyze", v1(), "--horizon", "zero"}).code == 2);
}
