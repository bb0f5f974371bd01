#include "dir/sql.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir::sql {

namespace {

enum class Tok { ident, keyword, string, number, symbol, end };

struct Token {
  Tok type = Tok::end;
  std::string text;  // keywords uppercased, identifiers lowercased
  std::size_t pos = 0;
  bool quoted = false;
};

constexpr std::array kKeywords = {
    "SELECT", "FROM",  "WHERE",  "AND",    "OR",     "NOT",    "IN",     "LIKE",
    "ORDER",  "BY",    "ASC",    "DESC",   "LIMIT",  "TRUE",   "FALSE",  "NULL",
    "IS",     "JOIN",  "GROUP",  "HAVING", "UNION",  "INSERT", "UPDATE", "DELETE",
    "DROP",   "CREATE", "ALTER", "ATTACH", "DETACH", "PRAGMA", "REPLACE", "WITH",
    "AS",     "ON",    "BETWEEN", "EXISTS", "DISTINCT", "OFFSET", "INTO", "VALUES",
    "SET",    "VACUUM", "BEGIN", "COMMIT", "ROLLBACK", "CASE",  "LEFT",  "INNER",
    "EXPLAIN", "REINDEX", "ANALYZE", "INTERSECT", "EXCEPT", "CROSS", "OUTER", "ESCAPE",
    "COLLATE", "GLOB", "MATCH", "REGEXP"};

constexpr std::array kMutationKeywords = {"INSERT", "UPDATE", "DELETE", "DROP",   "CREATE",
                                          "ALTER",  "ATTACH", "DETACH", "PRAGMA", "REPLACE",
                                          "WITH",   "VACUUM", "BEGIN",  "COMMIT", "ROLLBACK",
                                          "EXPLAIN", "REINDEX", "ANALYZE"};

bool is_keyword(std::string_view upper) {
  return std::find(kKeywords.begin(), kKeywords.end(), upper) != kKeywords.end();
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t b = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
      auto word = s.substr(b, i - b);
      auto upper = to_upper(word);
      if (is_keyword(upper)) {
        t.type = Tok::keyword;
        t.text = upper;
      } else {
        t.type = Tok::ident;
        t.text = text::to_lower(word);
      }
    } else if (c == '"' || c == '`') {
      char close = c;
      std::size_t b = ++i;
      std::string ident;
      while (true) {
        if (i >= s.size()) throw ParseError("unterminated quoted identifier", b - 1);
        if (s[i] == close) {
          if (i + 1 < s.size() && s[i + 1] == close) {
            ident.push_back(close);
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        ident.push_back(s[i++]);
      }
      t.type = Tok::ident;
      t.text = text::to_lower(ident);
      t.quoted = true;
    } else if (c == '\'') {
      std::size_t b = i++;
      std::string str;
      while (true) {
        if (i >= s.size()) throw ParseError("unterminated string literal", b);
        if (s[i] == '\'') {
          if (i + 1 < s.size() && s[i + 1] == '\'') {
            str.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        str.push_back(s[i++]);
      }
      t.type = Tok::string;
      t.text = std::move(str);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t b = i;
      while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
        if (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
          i = j;
          while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        }
      }
      t.type = Tok::number;
      t.text = std::string(s.substr(b, i - b));
    } else {
      static constexpr std::array two = {"<=", ">=", "<>", "!=", "=="};
      std::string sym(1, c);
      if (i + 1 < s.size()) {
        std::string pair{c, s[i + 1]};
        if (std::find(two.begin(), two.end(), pair) != two.end()) sym = pair;
      }
      static constexpr std::string_view singles = "*,()=<>;-.+/|%";
      if (sym.size() == 1 && singles.find(c) == std::string_view::npos)
        throw ParseError(std::string("unexpected character '") + c + "'", i);
      i += sym.size();
      t.type = Tok::symbol;
      t.text = sym == "==" ? "=" : sym;
    }
    toks.push_back(std::move(t));
  }
  Token end;
  end.type = Tok::end;
  end.pos = s.size();
  toks.push_back(end);
  return toks;
}

class Parser {
 public:
  explicit Parser(std::string_view sql) : toks_(lex(sql)) {}

  QueryAst query() {
    if (peek().type == Tok::keyword &&
        std::find(kMutationKeywords.begin(), kMutationKeywords.end(), peek().text) !=
            kMutationKeywords.end())
      unsupported(peek().text + " statements are not supported");
    expect_keyword("SELECT");
    QueryAst ast;
    if (peek_keyword("DISTINCT")) unsupported("DISTINCT is not supported");
    if (peek_symbol("*")) {
      advance();
    } else {
      do {
        ast.projection.push_back(column_ref());
      } while (accept_symbol(","));
    }
    expect_keyword("FROM");
    if (peek_symbol("(")) unsupported("subqueries are not supported");
    ast.source = identifier("table name");
    if (peek_symbol(",") || peek_keyword("JOIN") || peek_keyword("LEFT") ||
        peek_keyword("INNER") || peek_keyword("CROSS"))
      unsupported("joins are not supported");
    if (peek_keyword("AS") || peek().type == Tok::ident) unsupported("table aliases are not supported");
    if (accept_keyword("WHERE")) ast.predicate = or_expr();
    if (peek_keyword("GROUP") || peek_keyword("HAVING")) unsupported("aggregation is not supported");
    if (accept_keyword("ORDER")) {
      expect_keyword("BY");
      OrderBy ob;
      ob.column = column_ref();
      if (accept_keyword("DESC")) ob.descending = true;
      else accept_keyword("ASC");
      if (peek_symbol(",")) unsupported("only one ORDER BY key is supported");
      ast.order_by = ob;
    }
    if (accept_keyword("LIMIT")) {
      const auto& t = peek();
      if (t.type != Tok::number || t.text.find_first_of(".eE") != std::string::npos)
        fail("LIMIT expects a positive integer");
      std::int64_t n = 0;
      try {
        n = std::stoll(t.text);
      } catch (const std::exception&) {
        fail("LIMIT value out of range");
      }
      if (n <= 0) fail("LIMIT expects a positive integer");
      advance();
      ast.limit = n;
      if (peek_keyword("OFFSET") || peek_symbol(",")) unsupported("OFFSET is not supported");
    }
    while (accept_symbol(";")) {
    }
    if (peek().type != Tok::end) {
      if (peek().type == Tok::keyword) unsupported("unexpected " + peek().text);
      fail("unexpected trailing input '" + peek().text + "'");
    }
    return ast;
  }

  Predicate condition() {
    auto p = or_expr();
    while (accept_symbol(";")) {
    }
    if (peek().type != Tok::end) fail("unexpected trailing input '" + peek().text + "'");
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  void advance() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }
  bool peek_keyword(std::string_view kw, std::size_t ahead = 0) const {
    return peek(ahead).type == Tok::keyword && peek(ahead).text == kw;
  }
  bool peek_symbol(std::string_view sym) const {
    return peek().type == Tok::symbol && peek().text == sym;
  }
  bool accept_keyword(std::string_view kw) {
    if (!peek_keyword(kw)) return false;
    advance();
    return true;
  }
  bool accept_symbol(std::string_view sym) {
    if (!peek_symbol(sym)) return false;
    advance();
    return true;
  }
  void expect_keyword(std::string_view kw) {
    if (!accept_keyword(kw)) fail("expected " + std::string(kw));
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }
  [[noreturn]] void unsupported(const std::string& msg) const {
    throw ParseError(msg, peek().pos, true);
  }

  std::string identifier(std::string_view what) {
    if (peek().type != Tok::ident) fail("expected " + std::string(what));
    auto name = peek().text;
    advance();
    if (peek_symbol(".")) unsupported("qualified names are not supported");
    if (peek_symbol("(")) unsupported("function calls are not supported");
    return name;
  }

  std::string column_ref() { return identifier("column name"); }

  Predicate or_expr() {
    std::vector<Predicate> parts{and_expr()};
    while (accept_keyword("OR")) parts.push_back(and_expr());
    return parts.size() == 1 ? std::move(parts.front()) : Predicate::any(std::move(parts));
  }

  Predicate and_expr() {
    std::vector<Predicate> parts{not_expr()};
    while (accept_keyword("AND")) parts.push_back(not_expr());
    return parts.size() == 1 ? std::move(parts.front()) : Predicate::all(std::move(parts));
  }

  Predicate not_expr() {
    if (accept_keyword("NOT")) return Predicate::negation(not_expr());
    return primary();
  }

  Predicate primary() {
    if (accept_symbol("(")) {
      if (peek_keyword("SELECT")) unsupported("subqueries are not supported");
      auto inner = or_expr();
      expect_symbol(")");
      return inner;
    }
    if (peek().type == Tok::number || peek().type == Tok::string)
      unsupported("the left operand of a comparison must be a column");
    if (peek_keyword("EXISTS")) unsupported("EXISTS is not supported");
    Atom atom;
    atom.column = column_ref();
    bool negated = false;
    if (peek_keyword("NOT") && (peek_keyword("IN", 1) || peek_keyword("LIKE", 1))) {
      advance();
      negated = true;
    }
    const auto& t = peek();
    if (t.type == Tok::keyword && t.text == "IN") {
      advance();
      expect_symbol("(");
      if (peek_keyword("SELECT")) unsupported("subqueries are not supported");
      atom.op = CompareOp::in;
      do {
        atom.operands.push_back(literal());
      } while (accept_symbol(","));
      expect_symbol(")");
    } else if (t.type == Tok::keyword && t.text == "LIKE") {
      advance();
      atom.op = CompareOp::like;
      if (peek().type != Tok::string) fail("LIKE expects a string pattern");
      atom.operands.emplace_back(peek().text);
      advance();
      if (peek_keyword("ESCAPE")) unsupported("ESCAPE is not supported");
    } else if (t.type == Tok::keyword &&
               (t.text == "IS" || t.text == "BETWEEN" || t.text == "GLOB" || t.text == "MATCH" ||
                t.text == "REGEXP" || t.text == "COLLATE")) {
      unsupported(t.text + " is not supported");
    } else if (t.type == Tok::symbol) {
      static const std::pair<std::string_view, CompareOp> ops[] = {
          {"=", CompareOp::eq},   {"<>", CompareOp::neq}, {"!=", CompareOp::neq},
          {"<", CompareOp::lt},   {"<=", CompareOp::lte}, {">", CompareOp::gt},
          {">=", CompareOp::gte}};
      auto it = std::find_if(std::begin(ops), std::end(ops),
                             [&](const auto& p) { return p.first == t.text; });
      if (it == std::end(ops)) fail("expected comparison operator");
      advance();
      atom.op = it->second;
      if (peek().type == Tok::ident) unsupported("column-to-column comparisons are not supported");
      atom.operands.push_back(literal());
    } else {
      fail("expected comparison operator");
    }
    auto p = Predicate::make_atom(std::move(atom));
    return negated ? Predicate::negation(std::move(p)) : p;
  }

  Literal literal() {
    const auto& t = peek();
    if (t.type == Tok::string) {
      Literal l{t.text};
      advance();
      return l;
    }
    if (t.type == Tok::keyword && (t.text == "TRUE" || t.text == "FALSE")) {
      Literal l{t.text == "TRUE"};
      advance();
      return l;
    }
    if (t.type == Tok::keyword && t.text == "NULL") unsupported("NULL literals are not supported");
    bool negative = false;
    if (t.type == Tok::symbol && (t.text == "-" || t.text == "+")) {
      negative = t.text == "-";
      advance();
    }
    if (peek().type != Tok::number) fail("expected literal");
    double d;
    if (!text::parse_number(peek().text, d)) fail("malformed number '" + peek().text + "'");
    advance();
    return Literal{negative ? -d : d};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::neq: return "<>";
    case CompareOp::lt: return "<";
    case CompareOp::lte: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::gte: return ">=";
    case CompareOp::in: return "IN";
    case CompareOp::like: return "LIKE";
  }
  return "=";
}

void collect_atoms(const Predicate& p, std::vector<Atom>& out) {
  if (p.kind == Predicate::Kind::atom) {
    out.push_back(p.atom);
    return;
  }
  for (const auto& c : p.children) collect_atoms(c, out);
}

std::string render_child(const Predicate& p) {
  auto s = render(p);
  if (p.kind == Predicate::Kind::all_of || p.kind == Predicate::Kind::any_of) return "(" + s + ")";
  return s;
}

}  // namespace

Predicate Predicate::make_atom(Atom a) {
  Predicate p;
  p.kind = Kind::atom;
  p.atom = std::move(a);
  return p;
}

Predicate Predicate::all(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::all_of;
  p.children = std::move(children);
  return p;
}

Predicate Predicate::any(std::vector<Predicate> children) {
  Predicate p;
  p.kind = Kind::any_of;
  p.children = std::move(children);
  return p;
}

Predicate Predicate::negation(Predicate child) {
  Predicate p;
  p.kind = Kind::negate;
  p.children.push_back(std::move(child));
  return p;
}

QueryAst parse_sql(std::string_view sql) { return Parser(sql).query(); }

Predicate parse_condition(std::string_view condition) { return Parser(condition).condition(); }

std::string quote_identifier(std::string_view name) {
  bool plain = !name.empty() && (std::islower(static_cast<unsigned char>(name[0])) || name[0] == '_');
  for (char c : name)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
          c == '_'))
      plain = false;
  if (plain && !is_keyword(to_upper(name))) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string render_literal(const Literal& literal) {
  if (const auto* d = std::get_if<double>(&literal)) return text::format_number(*d);
  if (const auto* b = std::get_if<bool>(&literal)) return *b ? "TRUE" : "FALSE";
  const auto& s = std::get<std::string>(literal);
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  return out + "'";
}

std::string render(const Atom& atom) {
  std::string out = quote_identifier(atom.column);
  out += ' ';
  out += op_symbol(atom.op);
  out += ' ';
  if (atom.op == CompareOp::in) {
    out += '(';
    for (std::size_t i = 0; i < atom.operands.size(); ++i) {
      if (i) out += ", ";
      out += render_literal(atom.operands[i]);
    }
    out += ')';
  } else if (!atom.operands.empty()) {
    out += render_literal(atom.operands.front());
  }
  return out;
}

std::string render(const Predicate& predicate) {
  switch (predicate.kind) {
    case Predicate::Kind::atom: return render(predicate.atom);
    case Predicate::Kind::negate: return "NOT " + render_child(predicate.children.at(0));
    case Predicate::Kind::all_of:
    case Predicate::Kind::any_of: {
      std::string sep = predicate.kind == Predicate::Kind::all_of ? " AND " : " OR ";
      std::string out;
      for (std::size_t i = 0; i < predicate.children.size(); ++i) {
        if (i) out += sep;
        out += render_child(predicate.children[i]);
      }
      return out;
    }
  }
  return {};
}

std::string render(const QueryAst& ast) {
  std::string out = "SELECT ";
  if (ast.projection.empty()) {
    out += '*';
  } else {
    for (std::size_t i = 0; i < ast.projection.size(); ++i) {
      if (i) out += ", ";
      out += quote_identifier(ast.projection[i]);
    }
  }
  out += " FROM " + quote_identifier(ast.source);
  if (ast.predicate) out += " WHERE " + render(*ast.predicate);
  if (ast.order_by)
    out += " ORDER BY " + quote_identifier(ast.order_by->column) +
           (ast.order_by->descending ? " DESC" : " ASC");
  if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
  return out;
}

std::vector<Atom> top_level_atoms(const Predicate& predicate) {
  std::vector<Atom> out;
  if (predicate.kind == Predicate::Kind::atom) {
    out.push_back(predicate.atom);
  } else if (predicate.kind == Predicate::Kind::all_of) {
    for (const auto& c : predicate.children) {
      auto sub = top_level_atoms(c);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }
  return out;
}

std::vector<Atom> all_atoms(const Predicate& predicate) {
  std::vector<Atom> out;
  collect_atoms(predicate, out);
  return out;
}

Atom relaxation_atom(std::string column) {
  return Atom{std::move(column), CompareOp::like, {Literal{std::string("%")}}};
}

bool is_relaxation(const Atom& atom) {
  return atom.op == CompareOp::like && atom.operands.size() == 1 &&
         std::holds_alternative<std::string>(atom.operands[0]) &&
         std::get<std::string>(atom.operands[0]) == "%";
}

std::optional<std::string> extract_sql_statement(std::string_view completion) {
  std::string_view body = completion;
  // Prefer a fenced block when present.
  auto fence = completion.find("```");
  if (fence != std::string_view::npos) {
    auto start = completion.find('\n', fence);
    if (start != std::string_view::npos) {
      auto close = completion.find("```", start);
      body = completion.substr(start + 1, close == std::string_view::npos ? std::string_view::npos
                                                                        : close - start - 1);
    }
  }
  auto upper = to_upper(body);
  std::size_t at = std::string::npos;
  for (std::size_t p = upper.find("SELECT"); p != std::string::npos; p = upper.find("SELECT", p + 1)) {
    bool left_ok = p == 0 || !std::isalnum(static_cast<unsigned char>(upper[p - 1]));
    bool right_ok = p + 6 >= upper.size() || !std::isalnum(static_cast<unsigned char>(upper[p + 6]));
    if (left_ok && right_ok) {
      at = p;
      break;
    }
  }
  if (at == std::string::npos) return std::nullopt;
  // Statement ends at the first semicolon outside a string literal.
  bool in_string = false;
  std::size_t end = body.size();
  for (std::size_t i = at; i < body.size(); ++i) {
    char c = body[i];
    if (c == '\'') in_string = !in_string;
    else if (c == ';' && !in_string) {
      end = i;
      break;
    } else if (c == '\n' && !in_string && i + 1 < body.size() && body[i + 1] == '\n') {
      end = i;
      break;
    }
  }
  return text::trim(body.substr(at, end - at));
}

}  // namespace dir::sql
