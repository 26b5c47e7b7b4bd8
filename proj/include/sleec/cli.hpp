#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sleec/ast.hpp"
#include "sleec/conformance.hpp"
#include "sleec/format.hpp"
#include "sleec/monitor.hpp"
#include "sleec/parser.hpp"
#include "sleec/validate.hpp"
#include "sleec/wellformedness.hpp"

// Command-line front door. Exit codes: 0 clean, 1 findings present
// (violations or well-formedness issues), 2 usage, parse, or configuration
// errors. Warnings alone exit 0 unless --strict-warnings.

namespace sleec::cli {

struct CliIO {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  bool color = false;
};

namespace cli_detail {

inline const char* kReset = "\033[0m";
inline const char* kRed = "\033[31m";
inline const char* kYellow = "\033[33m";

inline std::string paint(const CliIO& io, const char* color, const std::string& s) {
  if (!io.color) return s;
  return std::string(color) + s + kReset;
}

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void print_diagnostic(const CliIO& io, const std::string& file,
                             const Diagnostic& d) {
  const char* color = d.severity == Severity::Error ? kRed : kYellow;
  const char* label = d.severity == Severity::Error ? "error" : "warning";
  io.err << file << ":" << d.span.begin_line << ":" << d.span.begin_col << ": "
         << paint(io, color, label) << ": " << d.message << "\n";
}

inline nlohmann::ordered_json diagnostic_json(const Diagnostic& d) {
  nlohmann::ordered_json j;
  j["severity"] = d.severity == Severity::Error ? "error" : "warning";
  j["code"] = d.code;
  j["message"] = d.message;
  j["line"] = d.span.begin_line;
  j["col"] = d.span.begin_col;
  j["endLine"] = d.span.end_line;
  j["endCol"] = d.span.end_col;
  return j;
}

inline nlohmann::ordered_json finding_json(const Finding& f) {
  nlohmann::ordered_json j;
  j["kind"] = finding_kind_text(f.kind);
  j["rules"] = f.rule_ids;
  if (f.annotation_id)
    j["annotation"] = *f.annotation_id;
  else
    j["annotation"] = nullptr;
  if (f.witness)
    j["witness"] = format_trace(*f.witness);
  else
    j["witness"] = nullptr;
  if (f.horizon)
    j["horizon"] = *f.horizon;
  else
    j["horizon"] = nullptr;
  j["message"] = f.message;
  return j;
}

inline void print_finding(const CliIO& io, const Finding& f) {
  const char* color = f.kind == FindingKind::Warning ? kYellow : kRed;
  io.out << paint(io, color, finding_kind_text(f.kind)) << ": " << f.message << "\n";
  if (f.witness) io.out << "  witness: " << format_trace(*f.witness) << "\n";
}

inline int findings_exit(const std::vector<Finding>& findings, bool strict_warnings) {
  bool issue = false, warning = false;
  for (const auto& f : findings) {
    if (f.kind == FindingKind::Warning)
      warning = true;
    else
      issue = true;
  }
  if (issue) return 1;
  if (warning && strict_warnings) return 1;
  return 0;
}

// Quantum flag syntax: an integer with a unit, e.g. 1m, 30s, 2h, "90 seconds".
inline std::optional<Duration> parse_quantum(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == 0) return std::nullopt;
  std::int64_t magnitude = std::strtoll(text.substr(0, i).c_str(), nullptr, 10);
  std::string unit = text.substr(i);
  while (!unit.empty() && unit.front() == ' ') unit.erase(unit.begin());
  if (unit == "s" || unit == "sec" || unit == "second" || unit == "seconds")
    return Duration{magnitude, TimeUnit::Seconds};
  if (unit == "m" || unit == "min" || unit == "minute" || unit == "minutes")
    return Duration{magnitude, TimeUnit::Minutes};
  if (unit == "h" || unit == "hour" || unit == "hours")
    return Duration{magnitude, TimeUnit::Hours};
  return std::nullopt;
}

inline std::optional<std::set<WfCheck>> parse_checks(const std::string& list) {
  std::set<WfCheck> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "conflict")
      out.insert(WfCheck::Conflict);
    else if (item == "redundancy")
      out.insert(WfCheck::Redundancy);
    else if (item == "insufficiency")
      out.insert(WfCheck::Insufficiency);
    else if (item == "overrestrictiveness" || item == "over-restrictiveness")
      out.insert(WfCheck::OverRestrictiveness);
    else
      return std::nullopt;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

struct LoadedRuleset {
  Ruleset ruleset;
  std::vector<Finding> warnings;
};

// Parse + validate; on failure prints diagnostics and returns nullopt.
inline std::optional<LoadedRuleset> load_ruleset(const CliIO& io, const std::string& path,
                                                 bool json,
                                                 nlohmann::ordered_json* json_diags) {
  auto text = read_file(path);
  if (!text) {
    io.err << "error: cannot read '" << path << "'\n";
    return std::nullopt;
  }
  ParseResult parsed = parse_ruleset(*text);
  if (!parsed.ok()) {
    if (json && json_diags) {
      for (const auto& d : parsed.diagnostics) json_diags->push_back(diagnostic_json(d));
    } else {
      for (const auto& d : parsed.diagnostics) print_diagnostic(io, path, d);
    }
    return std::nullopt;
  }
  ValidationResult validation = validate_ruleset(*parsed.ruleset);
  if (!validation.ok()) {
    if (json && json_diags) {
      for (const auto& d : validation.errors) json_diags->push_back(diagnostic_json(d));
    } else {
      for (const auto& d : validation.errors) print_diagnostic(io, path, d);
    }
    return std::nullopt;
  }
  return LoadedRuleset{std::move(*parsed.ruleset), std::move(validation.warnings)};
}

}  // namespace cli_detail

// ---------------------------------------------------------------------------
// Subcommands

struct CommonFlags {
  bool json = false;
  bool strict_warnings = false;
  TimeConfig tc;
};

inline int cmd_check(const CliIO& io, const std::string& file, const CommonFlags& flags) {
  nlohmann::ordered_json diags = nlohmann::ordered_json::array();
  auto loaded = cli_detail::load_ruleset(io, file, flags.json, &diags);
  if (!loaded) {
    if (flags.json) io.out << diags.dump() << "\n";
    return 2;
  }
  if (flags.json) {
    for (const auto& w : loaded->warnings) {
      Diagnostic d{Severity::Warning, "validate", w.message,
                   w.location.value_or(SourceSpan{})};
      diags.push_back(cli_detail::diagnostic_json(d));
    }
    io.out << diags.dump() << "\n";
  } else {
    for (const auto& w : loaded->warnings) {
      Diagnostic d{Severity::Warning, "validate", w.message,
                   w.location.value_or(SourceSpan{})};
      cli_detail::print_diagnostic(io, file, d);
    }
    io.out << "ok: " << loaded->ruleset.declarations.size() << " declarations, "
           << loaded->ruleset.rules.size() << " rules, "
           << loaded->ruleset.annotations.size() << " annotations\n";
  }
  return cli_detail::findings_exit(loaded->warnings, flags.strict_warnings);
}

inline int cmd_analyze(const CliIO& io, const std::string& file, const CommonFlags& flags,
                       const SearchConfig& cfg) {
  auto loaded = cli_detail::load_ruleset(io, file, false, nullptr);
  if (!loaded) return 2;
  std::vector<Finding> findings;
  try {
    findings = analyze(loaded->ruleset, cfg, flags.tc);
  } catch (const NonIntegralDuration& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  }
  for (auto& w : loaded->warnings) findings.push_back(std::move(w));
  std::sort(findings.begin(), findings.end(), finding_order);
  if (flags.json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : findings) arr.push_back(cli_detail::finding_json(f));
    io.out << arr.dump() << "\n";
  } else {
    for (const auto& f : findings) cli_detail::print_finding(io, f);
    if (findings.empty()) io.out << "no well-formedness issues found\n";
  }
  return cli_detail::findings_exit(findings, flags.strict_warnings);
}

inline int cmd_monitor_batch(const CliIO& io, const std::string& file,
                             const std::string& trace_file, bool strict,
                             const CommonFlags& flags) {
  auto loaded = cli_detail::load_ruleset(io, file, false, nullptr);
  if (!loaded) return 2;
  auto trace_text = cli_detail::read_file(trace_file);
  if (!trace_text) {
    io.err << "error: cannot read '" << trace_file << "'\n";
    return 2;
  }
  TraceParseResult parsed = parse_trace(*trace_text, loaded->ruleset);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics)
      cli_detail::print_diagnostic(io, trace_file, d);
    return 2;
  }
  TraceCheckResult result;
  try {
    result = check_trace(loaded->ruleset, *parsed.trace, flags.tc,
                         CheckOptions{strict});
  } catch (const NonIntegralDuration& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  }
  if (flags.json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : result.findings) arr.push_back(cli_detail::finding_json(f));
    io.out << arr.dump() << "\n";
  } else {
    for (const auto& f : result.findings) cli_detail::print_finding(io, f);
    for (const auto& r : result.residuals)
      io.out << "pending: " << requirement_text(r) << " (rule " << r.source_rule << ")\n";
    if (result.findings.empty()) io.out << "no violations\n";
  }
  return cli_detail::findings_exit(result.findings, flags.strict_warnings);
}

// Streaming mode: one token per line on stdin, one JSON step report per line
// on stdout.
inline int cmd_monitor_stream(const CliIO& io, const std::string& file, bool strict,
                              const CommonFlags& flags) {
  auto loaded = cli_detail::load_ruleset(io, file, false, nullptr);
  if (!loaded) return 2;
  std::optional<MonitorSession> session;
  try {
    session.emplace(loaded->ruleset, flags.tc, MonitorOptions{strict, false});
  } catch (const NonIntegralDuration& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  }
  bool violated = false;
  std::string line;
  while (std::getline(io.in, line)) {
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    std::string word = line.substr(a, b - a + 1);
    TraceParseResult tokens = parse_trace(word, loaded->ruleset);
    if (!tokens.ok() || tokens.trace->tokens.size() != 1) {
      io.err << "error: not a single trace token: '" << word << "'\n";
      return 2;
    }
    StepReport report = session->step(tokens.trace->tokens[0]);
    violated = violated || !report.violations.empty();
    io.out << step_report_json(report).dump() << "\n";
  }
  session->finish();
  for (const auto& f : session->findings())
    violated = violated || f.kind == FindingKind::Violation;
  return violated ? 1 : 0;
}

inline int cmd_verify(const CliIO& io, const std::string& file,
                      const std::string& model_file, const CommonFlags& flags,
                      const SearchConfig& cfg) {
  auto loaded = cli_detail::load_ruleset(io, file, false, nullptr);
  if (!loaded) return 2;
  auto model_text = cli_detail::read_file(model_file);
  if (!model_text) {
    io.err << "error: cannot read '" << model_file << "'\n";
    return 2;
  }
  ModelParseResult parsed = parse_model(*model_text, loaded->ruleset);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics)
      cli_detail::print_diagnostic(io, model_file, d);
    return 2;
  }
  ConformanceResult result;
  try {
    result = explore(*parsed.model, loaded->ruleset, cfg, flags.tc);
  } catch (const NonIntegralDuration& e) {
    io.err << "error: " << e.what() << "\n";
    return 2;
  }
  if (flags.json) {
    nlohmann::ordered_json j;
    j["conformant"] = result.conformant;
    j["horizon"] = result.horizon;
    if (result.conformant) {
      j["counterexample"] = nullptr;
      j["violated"] = nlohmann::ordered_json::array();
    } else {
      j["counterexample"] = format_trace(*result.counterexample);
      j["violated"] = result.violated_rules;
    }
    j["explanation"] = result.explanation;
    io.out << j.dump() << "\n";
  } else {
    for (const auto& w : result.warnings) cli_detail::print_finding(io, w);
    if (result.conformant) {
      io.out << "Conformant at horizon " << result.horizon
             << " (bounded exploration; no violating run exists up to this depth)\n";
    } else {
      io.out << cli_detail::paint(io, cli_detail::kRed, "counterexample") << ": "
             << format_trace(*result.counterexample) << "\n";
      io.out << "violated rules:";
      for (const auto& r : result.violated_rules) io.out << " " << r;
      io.out << "\n" << result.explanation << "\n";
    }
  }
  if (!result.conformant) return 1;
  return cli_detail::findings_exit(result.warnings, flags.strict_warnings);
}

inline int cmd_fmt(const CliIO& io, const std::string& file, bool write, bool check) {
  auto text = cli_detail::read_file(file);
  if (!text) {
    io.err << "error: cannot read '" << file << "'\n";
    return 2;
  }
  ParseResult parsed = parse_ruleset(*text);
  if (!parsed.ok()) {
    for (const auto& d : parsed.diagnostics) cli_detail::print_diagnostic(io, file, d);
    return 2;
  }
  std::string canonical = format_ruleset(*parsed.ruleset);
  if (check) {
    if (canonical == *text) return 0;
    io.out << file << " is not canonically formatted\n";
    return 1;
  }
  if (write) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
      io.err << "error: cannot write '" << file << "'\n";
      return 2;
    }
    out << canonical;
    return 0;
  }
  io.out << canonical;
  return 0;
}

// ---------------------------------------------------------------------------
// Argument handling

inline int usage(const CliIO& io) {
  io.err << "usage: sleec <command> [options]\n"
            "\n"
            "commands:\n"
            "  check FILE                   parse and validate a ruleset\n"
            "  analyze FILE                 run well-formedness analysis\n"
            "  monitor FILE [--trace FILE]  replay a trace, or stream tokens from stdin\n"
            "  verify FILE --model FILE     check an agent model against the ruleset\n"
            "  fmt FILE                     print canonical formatting\n"
            "\n"
            "options:\n"
            "  --json                show machine-readable output\n"
            "  --horizon N           search depth in time units (default: fit windows)\n"
            "  --checks LIST         conflict,redundancy,insufficiency,overrestrictiveness\n"
            "  --max-env N           environment events per unit bound (default 2)\n"
            "  --whole-set-conflict  conflict check over the whole ruleset at once\n"
            "  --quantum DUR         tock length, e.g. 1m, 30s (default 1m)\n"
            "  --strict              residual obligations count as violations\n"
            "  --strict-warnings     warnings affect the exit code\n"
            "  --write / --check     fmt: rewrite in place / only report drift\n";
  return 2;
}

inline int run_cli(std::vector<std::string> args, CliIO io) {
  if (const char* nc = std::getenv("NO_COLOR"); nc && *nc) io.color = false;
  if (args.empty()) return usage(io);
  std::string command = args[0];

  CommonFlags flags;
  SearchConfig cfg;
  std::optional<std::string> file, trace_file, model_file;
  bool strict = false, write = false, fmt_check = false;

  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    auto next = [&]() -> std::optional<std::string> {
      if (i + 1 >= args.size()) return std::nullopt;
      return args[++i];
    };
    if (a == "--json") {
      flags.json = true;
    } else if (a == "--strict") {
      strict = true;
    } else if (a == "--strict-warnings") {
      flags.strict_warnings = true;
    } else if (a == "--write") {
      write = true;
    } else if (a == "--check") {
      fmt_check = true;
    } else if (a == "--whole-set-conflict") {
      cfg.whole_ruleset_conflict = true;
    } else if (a == "--horizon") {
      auto v = next();
      if (!v) return usage(io);
      char* end = nullptr;
      long h = std::strtol(v->c_str(), &end, 10);
      if (!end || *end != '\0' || h < 1) {
        io.err << "error: --horizon expects a positive integer\n";
        return 2;
      }
      cfg.horizon = h;
    } else if (a == "--max-env") {
      auto v = next();
      if (!v) return usage(io);
      char* end = nullptr;
      long n = std::strtol(v->c_str(), &end, 10);
      if (!end || *end != '\0' || n < 0) {
        io.err << "error: --max-env expects a non-negative integer\n";
        return 2;
      }
      cfg.max_env_events_per_unit = static_cast<int>(n);
    } else if (a == "--checks") {
      auto v = next();
      if (!v) return usage(io);
      auto checks = cli_detail::parse_checks(*v);
      if (!checks) {
        io.err << "error: unknown check in '" << *v << "'\n";
        return 2;
      }
      cfg.checks = std::move(*checks);
    } else if (a == "--quantum") {
      auto v = next();
      if (!v) return usage(io);
      auto q = cli_detail::parse_quantum(*v);
      if (!q || q->magnitude <= 0) {
        io.err << "error: --quantum expects forms like 1m, 30s, 2h\n";
        return 2;
      }
      flags.tc.quantum = *q;
    } else if (a == "--trace") {
      auto v = next();
      if (!v) return usage(io);
      trace_file = *v;
    } else if (a == "--model") {
      auto v = next();
      if (!v) return usage(io);
      model_file = *v;
    } else if (!a.empty() && a[0] == '-') {
      io.err << "error: unknown option '" << a << "'\n";
      return usage(io);
    } else if (!file) {
      file = a;
    } else {
      io.err << "error: unexpected argument '" << a << "'\n";
      return usage(io);
    }
  }

  if (command == "check") {
    if (!file) return usage(io);
    return cmd_check(io, *file, flags);
  }
  if (command == "analyze") {
    if (!file) return usage(io);
    return cmd_analyze(io, *file, flags, cfg);
  }
  if (command == "monitor") {
    if (!file) return usage(io);
    if (trace_file) return cmd_monitor_batch(io, *file, *trace_file, strict, flags);
    return cmd_monitor_stream(io, *file, strict, flags);
  }
  if (command == "verify") {
    if (!file || !model_file) return usage(io);
    return cmd_verify(io, *file, *model_file, flags, cfg);
  }
  if (command == "fmt") {
    if (!file) return usage(io);
    if (write && fmt_check) {
      io.err << "error: --write and --check are mutually exclusive\n";
      return 2;
    }
    return cmd_fmt(io, *file, write, fmt_check);
  }
  return usage(io);
}

}  // namespace sleec::cli
