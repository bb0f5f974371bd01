#include "oracle.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <vector>

namespace dir::testkit {

namespace {

char fold(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool like_at(std::string_view t, std::size_t ti, std::string_view p, std::size_t pi) {
  while (pi < p.size()) {
    if (p[pi] == '%') {
      while (pi < p.size() && p[pi] == '%') ++pi;
      if (pi == p.size()) return true;
      for (std::size_t k = ti; k <= t.size(); ++k)
        if (like_at(t, k, p, pi)) return true;
      return false;
    }
    if (ti >= t.size()) return false;
    if (p[pi] != '_' && fold(p[pi]) != fold(t[ti])) return false;
    ++ti;
    ++pi;
  }
  return ti == t.size();
}

Value literal_value(const Literal& l) {
  return std::visit([](const auto& v) -> Value { return v; }, l);
}

double as_number(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<bool>(v) ? 1.0 : 0.0;
}

bool numeric(const Value& v) {
  return std::holds_alternative<double>(v) || std::holds_alternative<bool>(v);
}

Tri from_bool(bool b) { return b ? Tri::yes : Tri::no; }

Tri eval_atom(const sql::Atom& atom, const ResultSet& view, const Row& row) {
  auto idx = view.column_index(atom.column);
  if (!idx) throw std::runtime_error("oracle: unknown column " + atom.column);
  const Value& cell = row[*idx];
  if (is_null(cell)) return Tri::unknown;
  if (atom.op == CompareOp::like) {
    const auto& pattern = std::get<std::string>(atom.operands.at(0));
    return from_bool(like_match(value_to_text(cell), pattern));
  }
  auto cmp = [&](const Literal& l) {
    Value v = literal_value(l);
    if (numeric(cell) != numeric(v)) throw std::runtime_error("oracle: type mismatch on " + atom.column);
    return compare_values(cell, v);
  };
  switch (atom.op) {
    case CompareOp::eq: return from_bool(cmp(atom.operands.at(0)) == 0);
    case CompareOp::neq: return from_bool(cmp(atom.operands.at(0)) != 0);
    case CompareOp::lt: return from_bool(cmp(atom.operands.at(0)) < 0);
    case CompareOp::lte: return from_bool(cmp(atom.operands.at(0)) <= 0);
    case CompareOp::gt: return from_bool(cmp(atom.operands.at(0)) > 0);
    case CompareOp::gte: return from_bool(cmp(atom.operands.at(0)) >= 0);
    case CompareOp::in:
      return from_bool(std::any_of(atom.operands.begin(), atom.operands.end(),
                                   [&](const Literal& l) { return cmp(l) == 0; }));
    case CompareOp::like: break;
  }
  return Tri::unknown;
}

}  // namespace

bool like_match(std::string_view text, std::string_view pattern) { return like_at(text, 0, pattern, 0); }

int compare_values(const Value& a, const Value& b) {
  auto rank = [](const Value& v) { return is_null(v) ? 0 : numeric(v) ? 1 : 2; };
  if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
  if (rank(a) == 0) return 0;
  if (rank(a) == 1) {
    double x = as_number(a), y = as_number(b);
    return x < y ? -1 : x > y ? 1 : 0;
  }
  int c = std::get<std::string>(a).compare(std::get<std::string>(b));
  return c < 0 ? -1 : c > 0 ? 1 : 0;
}

Tri eval_predicate(const sql::Predicate& p, const ResultSet& view, const Row& row) {
  using K = sql::Predicate::Kind;
  switch (p.kind) {
    case K::atom: return eval_atom(p.atom, view, row);
    case K::negate: {
      auto t = eval_predicate(p.children.at(0), view, row);
      return t == Tri::unknown ? t : t == Tri::yes ? Tri::no : Tri::yes;
    }
    case K::all_of: {
      bool unknown = false;
      for (const auto& c : p.children) {
        auto t = eval_predicate(c, view, row);
        if (t == Tri::no) return Tri::no;
        unknown |= t == Tri::unknown;
      }
      return unknown ? Tri::unknown : Tri::yes;
    }
    case K::any_of: {
      bool unknown = false;
      for (const auto& c : p.children) {
        auto t = eval_predicate(c, view, row);
        if (t == Tri::yes) return Tri::yes;
        unknown |= t == Tri::unknown;
      }
      return unknown ? Tri::unknown : Tri::no;
    }
  }
  return Tri::unknown;
}

ResultSet brute_force(const sql::QueryAst& ast, const ResultSet& view, const std::string& primary_key) {
  std::vector<const Row*> kept;
  for (const auto& row : view.rows)
    if (!ast.predicate || eval_predicate(*ast.predicate, view, row) == Tri::yes) kept.push_back(&row);
  const auto pk = view.column_index(primary_key).value();
  std::optional<std::size_t> order;
  if (ast.order_by) order = view.column_index(ast.order_by->column).value();
  const bool desc = ast.order_by && ast.order_by->descending;
  std::stable_sort(kept.begin(), kept.end(), [&](const Row* a, const Row* b) {
    if (order) {
      int c = compare_values((*a)[*order], (*b)[*order]);
      if (c != 0) return desc ? c > 0 : c < 0;
    }
    return compare_values((*a)[pk], (*b)[pk]) < 0;
  });
  if (ast.limit && kept.size() > static_cast<std::size_t>(*ast.limit)) kept.resize(static_cast<std::size_t>(*ast.limit));

  ResultSet out;
  std::vector<std::size_t> cols;
  if (ast.projection.empty()) {
    for (std::size_t i = 0; i < view.columns.size(); ++i) cols.push_back(i);
  } else {
    for (const auto& name : ast.projection) cols.push_back(view.column_index(name).value());
  }
  for (auto i : cols) out.columns.push_back(view.columns[i]);
  for (const auto* row : kept) {
    Row r;
    for (auto i : cols) r.push_back((*row)[i]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::set<std::string> key_set(const ResultSet& rs, const std::string& primary_key) {
  std::set<std::string> out;
  const auto idx = rs.column_index(primary_key).value();
  for (const auto& row : rs.rows) out.insert(value_to_text(row[idx]));
  return out;
}

}  // namespace dir::testkit
