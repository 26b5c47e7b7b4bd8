#pragma once

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sleec/ast.hpp"
#include "sleec/validate.hpp"

// Lexer and recursive-descent parser for the SLEEC rule DSL and for trace
// files. Parsing is total: any input yields either a value or a non-empty
// diagnostic list, never both.

namespace sleec {

struct ParseResult {
  std::optional<Ruleset> ruleset;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return ruleset.has_value(); }
};

struct TraceParseResult {
  std::optional<Trace> trace;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return trace.has_value(); }
};

namespace detail {

enum class TokKind {
  UpperIdent,
  LowerIdent,
  Number,
  LParen,
  RParen,
  Colon,
  Comma,
  Arrow,
  Relop,
  KwWhen,
  KwThen,
  KwWithin,
  KwUnless,
  KwAnd,
  KwOr,
  KwNot,
  KwImplies,
  KwTrue,
  KwFalse,
  KwEvent,
  KwMeasure,
  KwBoolean,
  KwNumeric,
  KwConcern,
  KwPurpose,
  KwFact,
  Error,
  Eof
};

struct Token {
  TokKind kind = TokKind::Eof;
  std::string text;
  double number = 0.0;
  bool number_is_int = false;
  std::int64_t int_value = 0;
  Relop relop = Relop::Lt;
  SourceSpan span;
};

inline TokKind keyword_kind(std::string_view s) {
  if (s == "when") return TokKind::KwWhen;
  if (s == "then") return TokKind::KwThen;
  if (s == "within") return TokKind::KwWithin;
  if (s == "unless") return TokKind::KwUnless;
  if (s == "and") return TokKind::KwAnd;
  if (s == "or") return TokKind::KwOr;
  if (s == "not") return TokKind::KwNot;
  if (s == "implies") return TokKind::KwImplies;
  if (s == "true") return TokKind::KwTrue;
  if (s == "false") return TokKind::KwFalse;
  if (s == "event") return TokKind::KwEvent;
  if (s == "measure") return TokKind::KwMeasure;
  if (s == "boolean") return TokKind::KwBoolean;
  if (s == "numeric") return TokKind::KwNumeric;
  if (s == "concern") return TokKind::KwConcern;
  if (s == "purpose") return TokKind::KwPurpose;
  if (s == "fact") return TokKind::KwFact;
  return TokKind::Eof;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run(std::vector<Diagnostic>& diags) {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      Token t = next(diags);
      bool eof = t.kind == TokKind::Eof;
      if (t.kind != TokKind::Error) out.push_back(std::move(t));
      if (eof) break;
    }
    return out;
  }

 private:
  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  Token next(std::vector<Diagnostic>& diags) {
    Token t;
    mark_ = pos_;
    mark_line_ = line_;
    mark_col_ = col_;
    if (pos_ >= src_.size()) {
      t.kind = TokKind::Eof;
      t.span = span_here();
      return t;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c))) return lex_ident();
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number();
    advance();
    switch (c) {
      case '(': t.kind = TokKind::LParen; break;
      case ')': t.kind = TokKind::RParen; break;
      case ':': t.kind = TokKind::Colon; break;
      case ',': t.kind = TokKind::Comma; break;
      case '<':
        t.kind = TokKind::Relop;
        t.relop = match('=') ? Relop::Le : Relop::Lt;
        break;
      case '>':
        t.kind = TokKind::Relop;
        t.relop = match('=') ? Relop::Ge : Relop::Gt;
        break;
      case '=':
        t.kind = TokKind::Relop;
        t.relop = Relop::Eq;
        break;
      case '!':
        if (match('=')) {
          t.kind = TokKind::Relop;
          t.relop = Relop::Ne;
        } else {
          t.kind = TokKind::Error;
          diags.push_back({Severity::Error, "lex",
                           "unexpected character '!'", span_here()});
        }
        break;
      case '-':
        if (match('>')) {
          t.kind = TokKind::Arrow;
        } else {
          t.kind = TokKind::Error;
          diags.push_back({Severity::Error, "lex",
                           "unexpected character '-'", span_here()});
        }
        break;
      default:
        t.kind = TokKind::Error;
        diags.push_back({Severity::Error, "lex",
                         std::string("unexpected character '") + c + "'", span_here()});
        break;
    }
    t.span = span_here();
    return t;
  }

  Token lex_ident() {
    Token t;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
            src_[pos_] == '\''))
      advance();
    t.text = std::string(src_.substr(mark_, pos_ - mark_));
    TokKind kw = keyword_kind(t.text);
    if (kw != TokKind::Eof)
      t.kind = kw;
    else
      t.kind = (t.text[0] >= 'A' && t.text[0] <= 'Z') ? TokKind::UpperIdent
                                                      : TokKind::LowerIdent;
    t.span = span_here();
    return t;
  }

  Token lex_number() {
    Token t;
    t.kind = TokKind::Number;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance();
    t.number_is_int = true;
    if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
      t.number_is_int = false;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
    }
    t.text = std::string(src_.substr(mark_, pos_ - mark_));
    t.number = std::strtod(t.text.c_str(), nullptr);
    if (t.number_is_int) t.int_value = std::strtoll(t.text.c_str(), nullptr, 10);
    t.span = span_here();
    return t;
  }

  SourceSpan span_here() const {
    SourceSpan s;
    s.begin = mark_;
    s.end = pos_;
    s.begin_line = mark_line_;
    s.begin_col = mark_col_;
    s.end_line = line_;
    s.end_col = col_;
    return s;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  bool match(char c) {
    if (pos_ < src_.size() && src_[pos_] == c) {
      advance();
      return true;
    }
    return false;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t mark_ = 0;
  int line_ = 1, col_ = 1;
  int mark_line_ = 1, mark_col_ = 1;
};

// Token-stream helpers and guard parsing, shared by the ruleset parser and
// the agent-model parser.
class ParserBase {
 public:
  ParserBase(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), diags_(diags) {}

 protected:
  // Precedence climbing: implies (weakest, right-assoc) < or < and < not.
  std::optional<Guard> parse_guard() { return parse_implies(); }

  std::optional<Guard> parse_implies() {
    auto lhs = parse_or();
    if (!lhs) return std::nullopt;
    if (accept(TokKind::KwImplies)) {
      auto rhs = parse_implies();
      if (!rhs) return std::nullopt;
      Guard g = Guard::binary(Guard::Kind::Implies, std::move(*lhs), std::move(*rhs));
      g.span = merge(g.children[0].span, g.children[1].span);
      return g;
    }
    return lhs;
  }

  std::optional<Guard> parse_or() {
    auto lhs = parse_and();
    if (!lhs) return std::nullopt;
    while (accept(TokKind::KwOr)) {
      auto rhs = parse_and();
      if (!rhs) return std::nullopt;
      Guard g = Guard::binary(Guard::Kind::Or, std::move(*lhs), std::move(*rhs));
      g.span = merge(g.children[0].span, g.children[1].span);
      lhs = std::move(g);
    }
    return lhs;
  }

  std::optional<Guard> parse_and() {
    auto lhs = parse_unary();
    if (!lhs) return std::nullopt;
    while (accept(TokKind::KwAnd)) {
      auto rhs = parse_unary();
      if (!rhs) return std::nullopt;
      Guard g = Guard::binary(Guard::Kind::And, std::move(*lhs), std::move(*rhs));
      g.span = merge(g.children[0].span, g.children[1].span);
      lhs = std::move(g);
    }
    return lhs;
  }

  std::optional<Guard> parse_unary() {
    if (at(TokKind::KwNot)) {
      SourceSpan start = peek().span;
      consume();
      auto inner = parse_unary();
      if (!inner) return std::nullopt;
      Guard g = Guard::negation(std::move(*inner));
      g.span = merge(start, g.children[0].span);
      return g;
    }
    return parse_guard_atom();
  }

  std::optional<Guard> parse_guard_atom() {
    if (accept(TokKind::LParen)) {
      auto inner = parse_guard();
      if (!inner) return std::nullopt;
      if (!expect(TokKind::RParen, "')'")) return std::nullopt;
      return inner;
    }
    if (at(TokKind::KwTrue) || at(TokKind::KwFalse)) {
      Guard g = Guard::constant_guard(at(TokKind::KwTrue));
      g.span = peek().span;
      consume();
      return g;
    }
    if (at(TokKind::LowerIdent)) {
      std::string name = peek().text;
      SourceSpan start = peek().span;
      consume();
      if (at(TokKind::Relop)) {
        Relop op = peek().relop;
        consume();
        if (!at(TokKind::Number)) {
          error_here("expected a numeric constant after comparison operator");
          return std::nullopt;
        }
        Guard g = Guard::comparison(std::move(name), op, peek().number);
        g.span = merge(start, peek().span);
        consume();
        return g;
      }
      Guard g = Guard::atom(std::move(name));
      g.span = start;
      return g;
    }
    error_here("expected a guard expression");
    return std::nullopt;
  }

  std::string take_event_name() {
    std::string name = peek().text;
    if (name.find('\'') != std::string::npos)
      diags_.push_back({Severity::Error, "bad-name",
                        "the prime character is legal in rule ids only", peek().span});
    consume();
    return name;
  }

  const Token& peek() const { return toks_[idx_]; }
  bool at(TokKind k) const { return peek().kind == k; }
  bool at_word(const char* w) const {
    return at(TokKind::LowerIdent) && peek().text == w;
  }

  void consume() {
    prev_span_ = peek().span;
    if (idx_ + 1 < toks_.size()) ++idx_;
  }

  bool accept(TokKind k) {
    if (at(k)) {
      consume();
      return true;
    }
    return false;
  }

  bool accept_word(const char* w) {
    if (at_word(w)) {
      consume();
      return true;
    }
    return false;
  }

  bool expect(TokKind k, const char* what) {
    if (accept(k)) return true;
    error_here(std::string("expected ") + what);
    return false;
  }

  void error_here(const std::string& msg) {
    diags_.push_back({Severity::Error, "syntax", msg, peek().span});
  }

  static SourceSpan merge(const SourceSpan& a, const SourceSpan& b) {
    SourceSpan s = a;
    if (b.end > s.end) {
      s.end = b.end;
      s.end_line = b.end_line;
      s.end_col = b.end_col;
    }
    return s;
  }

  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  std::size_t idx_ = 0;
  SourceSpan prev_span_;
};

class RulesetParser : public ParserBase {
 public:
  using ParserBase::ParserBase;

  Ruleset run() {
    Ruleset rs;
    while (at(TokKind::KwEvent) || at(TokKind::KwMeasure)) parse_decl(rs);
    while (!at(TokKind::Eof)) {
      if (at(TokKind::KwConcern) || at(TokKind::KwPurpose) || at(TokKind::KwFact)) {
        parse_annotation(rs);
      } else if (at(TokKind::UpperIdent)) {
        parse_rule(rs);
      } else if (at(TokKind::KwEvent) || at(TokKind::KwMeasure)) {
        error_here("declarations must precede rules and annotations");
        resync();
      } else {
        error_here("expected a rule id, 'concern', 'purpose', or 'fact'");
        resync();
      }
    }
    return rs;
  }

 private:
  void parse_decl(Ruleset& rs) {
    CapabilityDecl d;
    SourceSpan start = peek().span;
    if (accept(TokKind::KwEvent)) {
      d.kind = CapabilityKind::Event;
      if (!at(TokKind::UpperIdent)) {
        error_here("expected an event name (capitalised identifier)");
        resync();
        return;
      }
      d.name = take_event_name();
    } else {
      expect(TokKind::KwMeasure, "'measure'");
      d.kind = CapabilityKind::Measure;
      if (!at(TokKind::LowerIdent)) {
        error_here("expected a measure name (lowercase identifier)");
        resync();
        return;
      }
      d.name = peek().text;
      consume();
      if (!expect(TokKind::Colon, "':'")) {
        resync();
        return;
      }
      if (accept(TokKind::KwBoolean)) {
        d.measure_type = MeasureType::Boolean;
      } else if (accept(TokKind::KwNumeric)) {
        d.measure_type = MeasureType::Numeric;
      } else {
        error_here("expected 'boolean' or 'numeric'");
        resync();
        return;
      }
    }
    d.span = merge(start, prev_span_);
    for (const auto& existing : rs.declarations) {
      if (existing.name == d.name) {
        diags_.push_back({Severity::Error, "duplicate-declaration",
                          "duplicate declaration of '" + d.name + "'", d.span});
        return;
      }
    }
    rs.declarations.push_back(std::move(d));
  }

  void parse_rule(Ruleset& rs) {
    Rule r;
    SourceSpan start = peek().span;
    r.id = peek().text;  // primes are legal in ids
    consume();
    if (!expect(TokKind::KwWhen, "'when'")) {
      resync();
      return;
    }
    if (!at(TokKind::UpperIdent)) {
      error_here("expected a trigger event name");
      resync();
      return;
    }
    r.trigger_event = take_event_name();
    if (accept(TokKind::KwAnd)) {
      auto g = parse_guard();
      if (!g) {
        resync();
        return;
      }
      r.trigger_guard = std::move(*g);
    }
    if (!expect(TokKind::KwThen, "'then'")) {
      resync();
      return;
    }
    auto resp = parse_response();
    if (!resp) {
      resync();
      return;
    }
    r.response = std::move(*resp);
    while (accept(TokKind::KwUnless)) {
      Defeater d;
      SourceSpan dstart = prev_span_;
      auto g = parse_guard();
      if (!g) {
        resync();
        return;
      }
      d.guard = std::move(*g);
      if (accept(TokKind::KwThen)) {
        auto dr = parse_response();
        if (!dr) {
          resync();
          return;
        }
        d.response = std::move(*dr);
      }
      d.span = merge(dstart, prev_span_);
      r.defeaters.push_back(std::move(d));
    }
    r.span = merge(start, prev_span_);
    rs.rules.push_back(std::move(r));
  }

  void parse_annotation(Ruleset& rs) {
    Annotation a;
    SourceSpan start = peek().span;
    if (accept(TokKind::KwConcern)) {
      a.kind = AnnotationKind::Concern;
    } else if (accept(TokKind::KwPurpose)) {
      a.kind = AnnotationKind::Purpose;
    } else {
      expect(TokKind::KwFact, "'fact'");
      a.kind = AnnotationKind::Fact;
    }
    if (!at(TokKind::UpperIdent) && !at(TokKind::LowerIdent)) {
      error_here("expected an annotation id");
      resync();
      return;
    }
    a.id = peek().text;
    consume();
    if (a.kind == AnnotationKind::Fact) {
      auto g = parse_guard();
      if (!g) {
        resync();
        return;
      }
      a.fact = std::move(*g);
    } else {
      if (!expect(TokKind::KwWhen, "'when'")) {
        resync();
        return;
      }
      if (!at(TokKind::UpperIdent)) {
        error_here("expected a trigger event name");
        resync();
        return;
      }
      a.trigger_event = take_event_name();
      if (accept(TokKind::KwAnd)) {
        auto g = parse_guard();
        if (!g) {
          resync();
          return;
        }
        a.trigger_guard = std::move(*g);
      }
      if (!expect(TokKind::KwThen, "'then'")) {
        resync();
        return;
      }
      auto resp = parse_response();
      if (!resp) {
        resync();
        return;
      }
      a.response = std::move(*resp);
    }
    a.span = merge(start, prev_span_);
    rs.annotations.push_back(std::move(a));
  }

  std::optional<Response> parse_response() {
    Response r;
    SourceSpan start = peek().span;
    r.negated = accept(TokKind::KwNot);
    if (!at(TokKind::UpperIdent)) {
      error_here("expected a response event name");
      return std::nullopt;
    }
    r.event = take_event_name();
    if (accept(TokKind::KwWithin)) {
      if (!at(TokKind::Number) || !peek().number_is_int) {
        error_here("expected an integer duration");
        return std::nullopt;
      }
      Duration d;
      d.magnitude = peek().int_value;
      consume();
      auto unit = parse_unit();
      if (!unit) return std::nullopt;
      d.unit = *unit;
      r.window = d;
    }
    r.span = merge(start, prev_span_);
    return r;
  }

  std::optional<TimeUnit> parse_unit() {
    if (at(TokKind::LowerIdent)) {
      const std::string& u = peek().text;
      std::optional<TimeUnit> r;
      if (u == "second" || u == "seconds") r = TimeUnit::Seconds;
      if (u == "minute" || u == "minutes") r = TimeUnit::Minutes;
      if (u == "hour" || u == "hours") r = TimeUnit::Hours;
      if (r) {
        consume();
        return r;
      }
    }
    error_here("expected a time unit (seconds, minutes, or hours)");
    return std::nullopt;
  }

  // Statement-level resynchronisation: skip to the next token that can start
  // a declaration, rule, or annotation on a later line.
  void resync() {
    int bad_line = at(TokKind::Eof) ? -1 : peek().span.begin_line;
    while (!at(TokKind::Eof)) {
      const Token& t = peek();
      bool starter = t.kind == TokKind::KwEvent || t.kind == TokKind::KwMeasure ||
                     t.kind == TokKind::KwConcern || t.kind == TokKind::KwPurpose ||
                     t.kind == TokKind::KwFact || t.kind == TokKind::UpperIdent;
      if (starter && t.span.begin_line != bad_line) return;
      consume();
    }
  }
};

inline bool has_error(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::Error) return true;
  return false;
}

}  // namespace detail

inline ParseResult parse_ruleset(std::string_view src) {
  ParseResult result;
  detail::Lexer lexer(src);
  auto tokens = lexer.run(result.diagnostics);
  detail::RulesetParser parser(std::move(tokens), result.diagnostics);
  Ruleset rs = parser.run();
  if (!detail::has_error(result.diagnostics)) {
    auto resolution = resolve_names(rs);
    for (auto& d : resolution) result.diagnostics.push_back(std::move(d));
  }
  if (!detail::has_error(result.diagnostics)) result.ruleset = std::move(rs);
  return result;
}

// Trace files: tokens separated by commas and/or whitespace. `Name` is an
// event occurrence, `name.value` a measure reading, `tock` a time step.
inline TraceParseResult parse_trace(std::string_view src, const Ruleset& rs) {
  TraceParseResult result;
  Trace trace;
  std::size_t pos = 0;
  int line = 1, col = 1;
  auto advance = [&](std::size_t n) {
    for (std::size_t i = 0; i < n && pos < src.size(); ++i) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++pos;
    }
  };
  while (pos < src.size()) {
    char c = src[pos];
    if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && pos + 1 < src.size() && src[pos + 1] == '/') {
      while (pos < src.size() && src[pos] != '\n') advance(1);
      continue;
    }
    std::size_t start = pos;
    int start_line = line, start_col = col;
    while (pos < src.size() && src[pos] != ',' && src[pos] != ' ' && src[pos] != '\t' &&
           src[pos] != '\r' && src[pos] != '\n')
      advance(1);
    std::string_view word = src.substr(start, pos - start);
    SourceSpan span{start, pos, start_line, start_col, line, col};

    if (word == "tock") {
      trace.tokens.push_back(TraceToken::tock());
      continue;
    }
    std::size_t dot = word.find('.');
    if (dot == std::string_view::npos) {
      std::string name(word);
      const CapabilityDecl* decl = rs.find_declaration(name);
      if (!decl || decl->kind != CapabilityKind::Event) {
        result.diagnostics.push_back({Severity::Error, "unknown-name",
                                      "'" + name + "' is not a declared event", span});
        continue;
      }
      trace.tokens.push_back(TraceToken::event(std::move(name)));
      continue;
    }
    std::string name(word.substr(0, dot));
    std::string value_text(word.substr(dot + 1));
    const CapabilityDecl* decl = rs.find_declaration(name);
    if (!decl || decl->kind != CapabilityKind::Measure) {
      result.diagnostics.push_back({Severity::Error, "unknown-name",
                                    "'" + name + "' is not a declared measure", span});
      continue;
    }
    if (value_text == "true" || value_text == "false") {
      if (decl->measure_type != MeasureType::Boolean) {
        result.diagnostics.push_back(
            {Severity::Error, "type-mismatch",
             "measure '" + name + "' is numeric but was given a boolean reading", span});
        continue;
      }
      trace.tokens.push_back(TraceToken::measure(std::move(name), value_text == "true"));
      continue;
    }
    char* endp = nullptr;
    double v = std::strtod(value_text.c_str(), &endp);
    bool numeric = endp && *endp == '\0' && !value_text.empty();
    if (!numeric) {
      result.diagnostics.push_back({Severity::Error, "bad-value",
                                    "cannot read measure value '" + value_text + "'", span});
      continue;
    }
    if (decl->measure_type != MeasureType::Numeric) {
      result.diagnostics.push_back(
          {Severity::Error, "type-mismatch",
           "measure '" + name + "' is boolean but was given a numeric reading", span});
      continue;
    }
    trace.tokens.push_back(TraceToken::measure(std::move(name), v));
  }
  if (!detail::has_error(result.diagnostics)) result.trace = std::move(trace);
  return result;
}

}  // namespace sleec
