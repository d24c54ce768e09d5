#ifndef CLS_DSL_HPP
#define CLS_DSL_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cls/engine.hpp"
#include "cls/error.hpp"
#include "cls/pattern.hpp"
#include "cls/registry.hpp"
#include "cls/rule.hpp"
#include "cls/term.hpp"

// Text syntax for terms, patterns, rules and event lists.
//
//   term     := "0" | item ("|" item)*
//   item     := atom ("^" exponent)?
//   atom     := seq | "{" term "}" "<" info ">" "[" term "]"
//   seq      := "eps" | element ("." element)*
//   info     := (binding (";" binding)*)? (";" "@"IDENT)? | "@"IDENT
//   binding  := IDENT ":" ("-"? NUMBER | "true" | "false" | IDENT)
//   exponent := NAT | "#"IDENT | "(" "#"IDENT "+" NAT ")" | IDENT "(" NAT ")"
//   rule     := "rule" ID ("[" "#"IDENT ">" NAT "]")? P "=>" P "@" rate ";"
//   rate     := NUMBER | IDENT "(" args ")"
//   event    := "(" IDENT "," value "," NUMBER ")"
//
// Patterns additionally allow "$"IDENT items (one term variable per level).
// Whitespace-insensitive; "--" comments to end of line; UTF-8 input.

namespace cls {
namespace dsl {

struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t begin = 0;  // byte offsets
  std::size_t end = 0;
};

class ParseError : public Error {
 public:
  ParseError(SourceSpan span, std::string expected, std::string found);

  const SourceSpan& span() const { return span_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  SourceSpan span_;
  std::string expected_;
  std::string found_;
};

// Ground term; any variable is a ParseError.
Term parse_term(std::string_view text);

// Pattern with variables. Exponent functions resolve through the registry.
Pattern parse_pattern(std::string_view text, const RateRegistry* registry = nullptr);

RewriteRule parse_rule(std::string_view text, const RateRegistry& registry);

// A model file: a sequence of rule statements.
std::vector<RewriteRule> parse_rules(std::string_view text, const RateRegistry& registry);

// Lines of (NAME, VALUE, TIME); accepted in any order and sorted; negative
// times rejected.
EventList parse_events(std::string_view text);

std::string serialize(const Value& v);
std::string serialize(const EnvInfo& info);
std::string serialize(const Term& t);
std::string serialize(const Pattern& p);
std::string serialize(const RewriteRule& r);
std::string serialize(const EventList& events);
std::string serialize(const ExternalEvent& e);

}  // namespace dsl
}  // namespace cls

#endif
