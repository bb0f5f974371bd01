#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dir/model.hpp"

// Read-only SELECT subset over a single relation. The grammar lives in
// docs/sql-subset.ebnf; anything outside it is a ParseError.
namespace dir::sql {

struct Atom {
  std::string column;
  CompareOp op = CompareOp::eq;
  // One literal, except `in` which carries one or more.
  std::vector<Literal> operands;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Predicate {
  enum class Kind { atom, all_of, any_of, negate };

  Kind kind = Kind::atom;
  Atom atom;
  // all_of/any_of: two or more children; negate: exactly one.
  std::vector<Predicate> children;

  static Predicate make_atom(Atom a);
  static Predicate all(std::vector<Predicate> children);
  static Predicate any(std::vector<Predicate> children);
  static Predicate negation(Predicate child);

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct OrderBy {
  std::string column;
  bool descending = false;

  friend bool operator==(const OrderBy&, const OrderBy&) = default;
};

struct QueryAst {
  // Empty means `*`.
  std::vector<std::string> projection;
  std::string source;
  std::optional<Predicate> predicate;
  std::optional<OrderBy> order_by;
  std::optional<std::int64_t> limit;

  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

QueryAst parse_sql(std::string_view sql);
// A bare WHERE-clause condition, e.g. "price < 400 AND color <> 'black'".
Predicate parse_condition(std::string_view condition);

std::string render(const QueryAst& ast);
std::string render(const Predicate& predicate);
std::string render(const Atom& atom);
std::string render_literal(const Literal& literal);
std::string quote_identifier(std::string_view name);

// Atoms reachable from the root through all_of nodes only.
std::vector<Atom> top_level_atoms(const Predicate& predicate);
// Every atom in the tree, depth first.
std::vector<Atom> all_atoms(const Predicate& predicate);

// Atom that relaxes a column in the dialog state: `column LIKE '%'`.
Atom relaxation_atom(std::string column);
bool is_relaxation(const Atom& atom);

// Pulls the first SELECT statement out of an LLM completion (code fences and
// surrounding prose are skipped). Returns nullopt when none is present.
std::optional<std::string> extract_sql_statement(std::string_view completion);

}  // namespace dir::sql
