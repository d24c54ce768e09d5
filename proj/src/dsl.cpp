#include "cls/dsl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace cls {
namespace dsl {

ParseError::ParseError(SourceSpan span, std::string expected, std::string found)
    : Error("parse error at line " + std::to_string(span.line) + ", column " +
            std::to_string(span.column) + ": expected " + expected + ", found " + found),
      span_(span),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

namespace {

enum class Tok {
  kEnd, kIdent, kInt, kReal, kTermVar, kInfoVar, kNatVar,
  kPipe, kCaret, kDot, kLBrace, kRBrace, kLAngle, kRAngle,
  kLBracket, kRBracket, kLParen, kRParen, kSemi, kColon, kComma,
  kPlus, kMinus, kArrow, kAt,
};

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  SourceSpan span;
};

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) { advance(); }

  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.span = here();
    if (pos_ >= text_.size()) {
      tok_.kind = Tok::kEnd;
      return;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      lex_number();
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      lex_word();
      return;
    }
    switch (c) {
      case '$': lex_var(Tok::kTermVar); return;
      case '@':
        if (pos_ + 1 < text_.size() && ident_char(text_[pos_ + 1])) {
          lex_var(Tok::kInfoVar);
        } else {
          single(Tok::kAt);
        }
        return;
      case '#': lex_var(Tok::kNatVar); return;
      case '|': single(Tok::kPipe); return;
      case '^': single(Tok::kCaret); return;
      case '.': single(Tok::kDot); return;
      case '{': single(Tok::kLBrace); return;
      case '}': single(Tok::kRBrace); return;
      case '<': single(Tok::kLAngle); return;
      case '>': single(Tok::kRAngle); return;
      case '[': single(Tok::kLBracket); return;
      case ']': single(Tok::kRBracket); return;
      case '(': single(Tok::kLParen); return;
      case ')': single(Tok::kRParen); return;
      case ';': single(Tok::kSemi); return;
      case ':': single(Tok::kColon); return;
      case ',': single(Tok::kComma); return;
      case '+': single(Tok::kPlus); return;
      case '-': single(Tok::kMinus); return;
      case '=':
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
          step();
          step();
          tok_.kind = Tok::kArrow;
          tok_.text = "=>";
          tok_.span.end = pos_;
          return;
        }
        throw ParseError(here_span(1), "a token", "'='");
      default:
        throw ParseError(here_span(1), "a token",
                         "'" + std::string(1, c) + "'");
    }
  }

  void lex_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) step();
    bool real = false;
    if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      real = true;
      step();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) step();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      step();
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) step();
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        real = true;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) step();
      } else {
        pos_ = save;  // not an exponent; fall through to word check
      }
    }
    if (!real && pos_ < text_.size() && ident_char(text_[pos_]) && text_[pos_] != '.') {
      // A digit-leading word like "1abc" is an identifier.
      while (pos_ < text_.size() && ident_char(text_[pos_])) step();
      tok_.kind = Tok::kIdent;
    } else {
      tok_.kind = real ? Tok::kReal : Tok::kInt;
    }
    tok_.text = std::string(text_.substr(start, pos_ - start));
    tok_.span.end = pos_;
  }

  void lex_word() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) step();
    tok_.kind = Tok::kIdent;
    tok_.text = std::string(text_.substr(start, pos_ - start));
    tok_.span.end = pos_;
  }

  void lex_var(Tok kind) {
    step();  // sigil
    if (pos_ >= text_.size() || !ident_char(text_[pos_]))
      throw ParseError(here_span(1), "a variable name", "end of token");
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) step();
    tok_.kind = kind;
    tok_.text = std::string(text_.substr(start, pos_ - start));
    tok_.span.end = pos_;
  }

  void single(Tok kind) {
    tok_.kind = kind;
    tok_.text = std::string(1, text_[pos_]);
    step();
    tok_.span.end = pos_;
  }

  void skip_ws() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) step();
      if (pos_ + 1 < text_.size() && text_[pos_] == '-' && text_[pos_ + 1] == '-') {
        while (pos_ < text_.size() && text_[pos_] != '\n') step();
        continue;
      }
      return;
    }
  }

  void step() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceSpan here() const { return SourceSpan{line_, col_, pos_, pos_}; }
  SourceSpan here_span(std::size_t len) const {
    SourceSpan s = here();
    s.end = s.begin + len;
    return s;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
  Token tok_;
};

constexpr int kMaxDepth = 200;

class Parser {
 public:
  Parser(std::string_view text, const RateRegistry* registry)
      : lex_(text), registry_(registry) {}

  Token expect(Tok kind, const char* what) {
    if (lex_.peek().kind != kind) fail(what);
    return lex_.take();
  }

  [[noreturn]] void fail(const std::string& expected) {
    const Token& t = lex_.peek();
    std::string found = t.kind == Tok::kEnd ? "end of input" : "'" + t.text + "'";
    throw ParseError(t.span, expected, found);
  }

  bool at(Tok kind) const { return lex_.peek().kind == kind; }

  std::uint64_t parse_nat(const char* what) {
    Token t = expect(Tok::kInt, what);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc() || p != t.text.data() + t.text.size())
      throw ParseError(t.span, what, "'" + t.text + "' (out of range)");
    return v;
  }

  Value parse_value() {
    bool neg = false;
    if (at(Tok::kMinus)) {
      lex_.take();
      neg = true;
    }
    const Token& t = lex_.peek();
    if (t.kind == Tok::kInt) {
      Token tok = lex_.take();
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
      if (ec != std::errc()) throw ParseError(tok.span, "an integer", "'" + tok.text + "'");
      return Value::integer(neg ? -v : v);
    }
    if (t.kind == Tok::kReal) {
      Token tok = lex_.take();
      double v = std::strtod(tok.text.c_str(), nullptr);
      return Value::real(neg ? -v : v);
    }
    if (neg) fail("a number after '-'");
    if (t.kind == Tok::kIdent) {
      Token tok = lex_.take();
      if (tok.text == "true") return Value::boolean(true);
      if (tok.text == "false") return Value::boolean(false);
      return Value::token(tok.text);
    }
    fail("a value");
  }

  double parse_number(const char* what) {
    bool neg = false;
    if (at(Tok::kMinus)) {
      lex_.take();
      neg = true;
    }
    if (!at(Tok::kInt) && !at(Tok::kReal)) fail(what);
    Token tok = lex_.take();
    double v = std::strtod(tok.text.c_str(), nullptr);
    return neg ? -v : v;
  }

  // info := empty | "@"x | binding (";" binding)* (";" "@"x)?
  InfoPattern parse_info(bool allow_vars) {
    InfoPattern ip;
    std::vector<std::pair<std::string, Value>> bindings;
    if (at(Tok::kRAngle)) return ip;
    for (;;) {
      if (at(Tok::kInfoVar)) {
        Token v = lex_.take();
        if (!allow_vars) throw ParseError(v.span, "a binding (ground term)", "'@" + v.text + "'");
        ip.rest = v.text;
        break;
      }
      Token name = expect(Tok::kIdent, "an info name");
      expect(Tok::kColon, "':'");
      bindings.emplace_back(name.text, parse_value());
      if (at(Tok::kSemi)) {
        lex_.take();
        continue;
      }
      break;
    }
    try {
      ip.literal = EnvInfo::make(std::move(bindings));
    } catch (const Error& e) {
      fail(std::string("distinct info names (") + e.what() + ")");
    }
    return ip;
  }

  Exponent parse_exponent(bool allow_vars) {
    expect(Tok::kCaret, "'^'");
    if (at(Tok::kInt)) {
      Token t = lex_.peek();
      std::uint64_t n = parse_nat("an exponent");
      if (n == 0) throw ParseError(t.span, "a positive exponent", "'0'");
      return Exponent::lit(n);
    }
    if (at(Tok::kNatVar)) {
      Token v = lex_.take();
      if (!allow_vars) throw ParseError(v.span, "a number (ground term)", "'#" + v.text + "'");
      return Exponent::nat(v.text);
    }
    if (at(Tok::kLParen)) {
      lex_.take();
      Token v = expect(Tok::kNatVar, "a nat variable");
      if (!allow_vars) throw ParseError(v.span, "a number (ground term)", "'#" + v.text + "'");
      expect(Tok::kPlus, "'+'");
      std::uint64_t d = parse_nat("an increment");
      expect(Tok::kRParen, "')'");
      return Exponent::nat_plus(v.text, d);
    }
    if (at(Tok::kIdent)) {
      Token name = lex_.take();
      if (!registry_ || !registry_->has_exponent(name.text))
        throw ParseError(name.span, "an exponent", "unknown exponent function '" + name.text + "'");
      expect(Tok::kLParen, "'('");
      std::uint64_t arg = parse_nat("an argument");
      expect(Tok::kRParen, "')'");
      return Exponent::lit(registry_->exponent(name.text, static_cast<std::int64_t>(arg)));
    }
    fail("an exponent");
  }

  PatternItem parse_atom(bool allow_vars) {
    if (++depth_ > kMaxDepth) fail("a shallower term (nesting limit)");
    PatternItem item;
    if (at(Tok::kLBrace)) {
      lex_.take();
      Pattern part = parse_level(/*allow_vars=*/false);
      expect(Tok::kRBrace, "'}'");
      expect(Tok::kLAngle, "'<'");
      InfoPattern info = parse_info(allow_vars);
      expect(Tok::kRAngle, "'>'");
      expect(Tok::kLBracket, "'['");
      Pattern content = parse_level(allow_vars);
      expect(Tok::kRBracket, "']'");
      item.unit = std::make_shared<const PatternLoop>(
          PatternLoop{substitute(part, Instantiation{}), std::move(info), std::move(content)});
    } else if (at(Tok::kIdent) || at(Tok::kInt)) {
      Sequence s;
      for (;;) {
        Token e = lex_.take();
        if (e.text == "eps") {
          if (!s.symbols.empty()) throw ParseError(e.span, "a symbol", "'eps'");
        } else if (e.kind == Tok::kInt && e.text == "0") {
          // "0" is the empty term, never a symbol.
          throw ParseError(e.span, "a symbol", "'0'");
        } else {
          s.symbols.push_back(e.text);
        }
        if (at(Tok::kDot)) {
          lex_.take();
          if (!at(Tok::kIdent) && !at(Tok::kInt)) fail("a symbol after '.'");
          continue;
        }
        break;
      }
      item.unit = std::move(s);
    } else {
      fail("a sequence or '{'");
    }
    if (at(Tok::kCaret)) {
      item.exp = parse_exponent(allow_vars);
    }
    --depth_;
    return item;
  }

  // One parallel level, "0" for the empty level.
  Pattern parse_level(bool allow_vars) {
    Pattern p;
    if (at(Tok::kInt) && lex_.peek().text == "0") {
      Token zero = lex_.take();
      if (at(Tok::kPipe) || at(Tok::kCaret) || at(Tok::kDot))
        throw ParseError(zero.span, "the empty term to stand alone", "'0'");
      return p;
    }
    for (;;) {
      if (at(Tok::kTermVar)) {
        Token v = lex_.take();
        if (!allow_vars) throw ParseError(v.span, "an atom (ground term)", "'$" + v.text + "'");
        if (p.rest) throw ParseError(v.span, "one term variable per level", "'$" + v.text + "'");
        p.rest = v.text;
      } else {
        p.items.push_back(parse_atom(allow_vars));
      }
      if (at(Tok::kPipe)) {
        lex_.take();
        continue;
      }
      return p;
    }
  }

  Term parse_ground_term() {
    Pattern p = parse_level(/*allow_vars=*/false);
    return substitute(p, Instantiation{});
  }

  RateFn parse_rate() {
    if (at(Tok::kInt) || at(Tok::kReal) || at(Tok::kMinus)) {
      double k = parse_number("a rate");
      if (!(k >= 0) || !std::isfinite(k)) fail("a nonnegative finite rate");
      return RateFn::k(k);
    }
    Token name = expect(Tok::kIdent, "a rate");
    expect(Tok::kLParen, "'('");
    std::vector<std::int64_t> args;
    if (!at(Tok::kRParen)) {
      for (;;) {
        bool neg = at(Tok::kMinus);
        if (neg) lex_.take();
        std::int64_t v = static_cast<std::int64_t>(parse_nat("an argument"));
        args.push_back(neg ? -v : v);
        if (at(Tok::kComma)) {
          lex_.take();
          continue;
        }
        break;
      }
    }
    expect(Tok::kRParen, "')'");
    if (!registry_) throw ParseError(name.span, "a numeric rate", "'" + name.text + "'");
    try {
      return registry_->rate(name.text, args);
    } catch (const ModelError& e) {
      throw ParseError(name.span, "a known rate name", e.what());
    }
  }

  RewriteRule parse_rule_stmt() {
    Token kw = expect(Tok::kIdent, "'rule'");
    if (kw.text != "rule") throw ParseError(kw.span, "'rule'", "'" + kw.text + "'");
    Token id = expect(Tok::kIdent, "a rule id");
    Guard guard = Guard::always();
    if (at(Tok::kLBracket)) {
      lex_.take();
      Token v = expect(Tok::kNatVar, "a nat variable");
      expect(Tok::kRAngle, "'>'");
      std::uint64_t t = parse_nat("a threshold");
      expect(Tok::kRBracket, "']'");
      guard = Guard::nat_greater(v.text, t);
    }
    Pattern lhs = parse_level(/*allow_vars=*/true);
    expect(Tok::kArrow, "'=>'");
    Pattern rhs = parse_level(/*allow_vars=*/true);
    expect(Tok::kAt, "'@'");
    RateFn rate = parse_rate();
    expect(Tok::kSemi, "';'");
    try {
      return RewriteRule::make(id.text, std::move(guard), std::move(lhs), std::move(rhs),
                               std::move(rate));
    } catch (const ModelError& e) {
      throw ParseError(id.span, "a well-formed rule", e.what());
    }
  }

  EventList parse_event_list() {
    std::vector<ExternalEvent> events;
    while (!at(Tok::kEnd)) {
      expect(Tok::kLParen, "'('");
      Token name = expect(Tok::kIdent, "an event name");
      expect(Tok::kComma, "','");
      Value value = parse_value();
      expect(Tok::kComma, "','");
      Token tpos = lex_.peek();
      double time = parse_number("a time");
      if (time < 0) throw ParseError(tpos.span, "a nonnegative time", "a negative time");
      expect(Tok::kRParen, "')'");
      events.push_back(
          ExternalEvent{name.text, std::move(value), time, standard_event_priority(name.text)});
    }
    return EventList(std::move(events));
  }

  void expect_end() {
    if (!at(Tok::kEnd)) fail("end of input");
  }

  Lexer lex_;
  const RateRegistry* registry_;
  int depth_ = 0;
};

std::string format_real(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eE") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string serialize_exponent(const Exponent& e) {
  switch (e.kind) {
    case Exponent::Kind::kLiteral:
      return e.literal == 1 ? "" : "^" + std::to_string(e.literal);
    case Exponent::Kind::kVar:
      return "^#" + e.var;
    case Exponent::Kind::kVarPlus:
      return "^(#" + e.var + " + " + std::to_string(e.delta) + ")";
  }
  return "";
}

std::string serialize_seq(const Sequence& s) {
  if (s.symbols.empty()) return "eps";
  std::string out;
  for (std::size_t i = 0; i < s.symbols.size(); ++i) {
    if (i) out += '.';
    out += s.symbols[i];
  }
  return out;
}

std::string serialize_info_pattern(const InfoPattern& ip) {
  std::string out = serialize(ip.literal);
  if (ip.rest) {
    if (!out.empty()) out += "; ";
    out += "@" + *ip.rest;
  }
  return out;
}

std::string serialize_pattern_level(const Pattern& p) {
  if (p.items.empty() && !p.rest) return "0";
  std::string out;
  bool first = true;
  for (const auto& it : p.items) {
    if (!first) out += " | ";
    first = false;
    if (!it.is_loop()) {
      out += serialize_seq(it.seq());
    } else {
      const PatternLoop& pl = it.loop();
      out += "{" + serialize(Term(pl.part)) + "}<" + serialize_info_pattern(pl.info) + ">[" +
             serialize_pattern_level(pl.content) + "]";
    }
    out += serialize_exponent(it.exp);
  }
  if (p.rest) {
    if (!first) out += " | ";
    out += "$" + *p.rest;
  }
  return out;
}

// Engine-level failures inside a parse (e.g. multiplicity overflow) surface
// as ParseError so arbitrary input cannot escape the parser's contract.
template <typename F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(SourceSpan{}, "a representable model", e.what());
  }
}

}  // namespace

Term parse_term(std::string_view text) {
  return guarded([&] {
    Parser p(text, nullptr);
    Term t = p.parse_ground_term();
    p.expect_end();
    return t;
  });
}

Pattern parse_pattern(std::string_view text, const RateRegistry* registry) {
  return guarded([&] {
    Parser p(text, registry);
    Pattern pat = p.parse_level(/*allow_vars=*/true);
    p.expect_end();
    return pat;
  });
}

RewriteRule parse_rule(std::string_view text, const RateRegistry& registry) {
  return guarded([&] {
    Parser p(text, &registry);
    RewriteRule r = p.parse_rule_stmt();
    p.expect_end();
    return r;
  });
}

std::vector<RewriteRule> parse_rules(std::string_view text, const RateRegistry& registry) {
  return guarded([&] {
    Parser p(text, &registry);
    std::vector<RewriteRule> rules;
    while (!p.at(Tok::kEnd)) rules.push_back(p.parse_rule_stmt());
    return rules;
  });
}

EventList parse_events(std::string_view text) {
  return guarded([&] {
    Parser p(text, nullptr);
    return p.parse_event_list();
  });
}

std::string serialize(const Value& v) {
  if (v.is_integer()) return std::to_string(v.as_integer());
  if (v.is_real()) return format_real(v.as_real());
  if (v.is_boolean()) return v.as_boolean() ? "true" : "false";
  return v.as_token();
}

std::string serialize(const EnvInfo& info) {
  std::string out;
  bool first = true;
  for (const auto& [name, value] : info.bindings()) {
    if (!first) out += "; ";
    first = false;
    out += name + ":" + serialize(value);
  }
  return out;
}

std::string serialize(const Term& t) {
  if (t.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& it : t.items()) {
    if (!first) out += " | ";
    first = false;
    if (it.unit.is_seq()) {
      out += serialize_seq(it.unit.seq());
    } else {
      const Loop& l = it.unit.loop();
      out += "{" + serialize(l.part) + "}<" + serialize(l.info) + ">[" + serialize(l.content) + "]";
    }
    if (it.count > 1) out += "^" + std::to_string(it.count);
  }
  return out;
}

std::string serialize(const Pattern& p) {
  return serialize_pattern_level(p);
}

std::string serialize(const RewriteRule& r) {
  std::string out = "rule " + r.id + " ";
  if (r.guard.kind == Guard::Kind::kNatGreater) {
    out += "[#" + r.guard.var + " > " + std::to_string(r.guard.threshold) + "] ";
  }
  out += serialize(r.left) + " => " + serialize(r.right) + " @ ";
  if (r.rate.name.empty()) {
    out += format_real(r.rate.constant);
  } else {
    out += r.rate.name + "(";
    for (std::size_t i = 0; i < r.rate.args.size(); ++i) {
      if (i) out += ", ";
      out += std::to_string(r.rate.args[i]);
    }
    out += ")";
  }
  out += ";";
  return out;
}

std::string serialize(const ExternalEvent& e) {
  return "(" + e.name + ", " + serialize(e.value) + ", " + format_real(e.time) + ")";
}

std::string serialize(const EventList& events) {
  std::string out;
  for (const auto& e : events.pending()) {
    out += serialize(e);
    out += '\n';
  }
  return out;
}

}  // namespace dsl
}  // namespace cls
