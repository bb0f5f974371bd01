#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include <json.hpp>

#include "dir/error.hpp"
#include "dir/llm.hpp"
#include "dir/sql.hpp"
#include "dir/text_util.hpp"

namespace dir::llm {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string last_nonempty_line(std::string_view s) {
  auto lines = text::split(s, '\n');
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto t = text::trim(*it);
    if (!t.empty()) return t;
  }
  return {};
}

// ---- text-to-SQL compiler -------------------------------------------------

struct PromptColumn {
  std::string name;
  ValueKind kind = ValueKind::text;
  bool primary_key = false;
  bool inferred = false;
};

struct ParsedPrompt {
  std::string table;
  std::vector<PromptColumn> columns;
  std::vector<std::pair<std::string, std::vector<std::string>>> enums;
  std::vector<sql::Atom> state;
  std::string question;
};

std::vector<std::string> section_lines(const std::vector<std::string>& lines, std::size_t from) {
  std::vector<std::string> out;
  for (std::size_t i = from; i < lines.size() && lines[i].rfind("- ", 0) == 0; ++i)
    out.push_back(lines[i].substr(2));
  return out;
}

ParsedPrompt parse_text2sql_prompt(std::string_view prompt) {
  auto lines = text::split(prompt, '\n');
  std::size_t table_line = lines.size();
  for (std::size_t i = lines.size(); i-- > 0;)
    if (lines[i].rfind("Table: ", 0) == 0) {
      table_line = i;
      break;
    }
  if (table_line == lines.size()) throw ProviderError("mock: prompt has no table section", 1);
  ParsedPrompt p;
  p.table = text::trim(lines[table_line].substr(7));
  for (std::size_t i = table_line + 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line == "Columns:") {
      for (const auto& entry : section_lines(lines, i + 1)) {
        PromptColumn col;
        auto paren = entry.find(" (");
        col.name = entry.substr(0, paren);
        auto attrs = paren == std::string::npos ? std::string() : entry.substr(paren + 2);
        if (!attrs.empty() && attrs.back() == ')') attrs.pop_back();
        auto parts = text::split(attrs, ',');
        if (!parts.empty()) col.kind = value_kind_from_string(text::trim(parts[0]));
        for (std::size_t k = 1; k < parts.size(); ++k) {
          auto a = text::trim(parts[k]);
          if (a == "primary key") col.primary_key = true;
          if (a == "inferred") col.inferred = true;
        }
        p.columns.push_back(col);
      }
    } else if (line == "Enumerated values:") {
      for (const auto& entry : section_lines(lines, i + 1)) {
        auto colon = entry.find(": ");
        if (colon == std::string::npos) continue;
        auto values = nlohmann::json::parse(entry.substr(colon + 2)).get<std::vector<std::string>>();
        p.enums.emplace_back(entry.substr(0, colon), std::move(values));
      }
    } else if (line == "Dialog state:") {
      for (const auto& entry : section_lines(lines, i + 1)) {
        auto pred = sql::parse_condition(entry);
        if (pred.kind == sql::Predicate::Kind::atom) p.state.push_back(pred.atom);
      }
    } else if (line.rfind("Question: ", 0) == 0) {
      p.question = line.substr(10);
    }
  }
  return p;
}

struct Token {
  std::string text;
  bool consumed = false;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    bool decimal_point = c == '.' && !cur.empty() && std::isdigit(static_cast<unsigned char>(cur.back())) &&
                         i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if (is_word_char(c) || decimal_point) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back({std::move(cur)});
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back({std::move(cur)});
  return out;
}

bool token_matches(const std::string& question_token, const std::string& value_token, bool last) {
  if (question_token == value_token) return true;
  if (!last) return false;
  return question_token == value_token + "s" || question_token == value_token + "es";
}

bool is_negator(const std::vector<Token>& toks, std::size_t start, std::size_t& negator_len) {
  static const std::vector<std::string> single = {"non", "not", "no", "except", "without", "excluding"};
  if (start >= 1 && !toks[start - 1].consumed &&
      std::find(single.begin(), single.end(), toks[start - 1].text) != single.end()) {
    negator_len = 1;
    return true;
  }
  if (start >= 2 && !toks[start - 2].consumed && !toks[start - 1].consumed) {
    const auto& a = toks[start - 2].text;
    const auto& b = toks[start - 1].text;
    if ((a == "other" && b == "than") || (a == "anything" && b == "but")) {
      negator_len = 2;
      return true;
    }
  }
  return false;
}

std::string column_phrase(const std::string& name) {
  std::string out = name;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

// Explicit "<column> is <value>" clauses and "any <column>" relaxations are
// cut out of the question text before token matching.
struct ExplicitClauses {
  std::vector<std::pair<std::size_t, sql::Atom>> atoms;  // position, atom
  std::string remainder;
};

ExplicitClauses take_explicit_clauses(std::string question, const ParsedPrompt& p) {
  ExplicitClauses out;
  std::string lower = text::to_lower(question);
  std::vector<const PromptColumn*> cols;
  for (const auto& c : p.columns)
    if (!c.primary_key) cols.push_back(&c);
  std::stable_sort(cols.begin(), cols.end(),
                   [](const auto* a, const auto* b) { return a->name.size() > b->name.size(); });
  auto blank = [&](std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) lower[i] = ' ';
  };
  auto bounded = [&](std::size_t at, std::size_t len) {
    return (at == 0 || !is_word_char(lower[at - 1])) &&
           (at + len >= lower.size() || !is_word_char(lower[at + len]));
  };
  for (const auto* col : cols) {
    for (const auto& phrase : {column_phrase(col->name), col->name}) {
      for (const std::string& pattern : {"any " + phrase}) {
        for (auto at = lower.find(pattern); at != std::string::npos; at = lower.find(pattern, at + 1)) {
          if (!bounded(at, pattern.size())) continue;
          out.atoms.emplace_back(at, sql::relaxation_atom(col->name));
          blank(at, at + pattern.size());
        }
      }
      for (std::string_view connector : {" is ", ": ", " = "}) {
        std::string pattern = phrase + std::string(connector);
        for (auto at = lower.find(pattern); at != std::string::npos; at = lower.find(pattern, at + 1)) {
          if (at > 0 && is_word_char(lower[at - 1])) continue;
          std::size_t vstart = at + pattern.size();
          std::size_t vend = lower.size();
          for (std::string_view stop : {",", ";", "?", "!", " and ", " with ", " under ", " over "}) {
            auto s = lower.find(stop, vstart);
            if (s != std::string::npos) vend = std::min(vend, s);
          }
          std::string value = text::trim(lower.substr(vstart, vend - vstart));
          while (!value.empty() && value.back() == '.') value.pop_back();
          if (!value.empty() && (value.front() == '\'' || value.front() == '"') &&
              value.size() >= 2 && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
          if (value.empty()) continue;
          sql::Atom atom{col->name, CompareOp::eq, {}};
          double d;
          if (col->kind == ValueKind::number && text::parse_number(value, d)) atom.operands.emplace_back(d);
          else if (col->kind == ValueKind::boolean && (value == "true" || value == "false"))
            atom.operands.emplace_back(value == "true");
          else atom.operands.emplace_back(value);
          out.atoms.emplace_back(at, std::move(atom));
          blank(at, vend);
        }
      }
    }
  }
  out.remainder = lower;
  return out;
}

const PromptColumn* default_numeric_column(const ParsedPrompt& p) {
  for (const auto& c : p.columns)
    if (c.name == "price" && c.kind == ValueKind::number) return &c;
  for (const auto& c : p.columns)
    if (!c.primary_key && c.kind == ValueKind::number) return &c;
  return nullptr;
}

struct Compiled {
  // position in question, predicate
  std::vector<std::pair<std::size_t, sql::Predicate>> parts;
  std::optional<sql::OrderBy> order_by;
  std::optional<std::int64_t> limit;
};

void match_numeric(std::vector<Token>& toks, const ParsedPrompt& p, Compiled& out) {
  struct Cue {
    std::vector<std::string> words;
    CompareOp op;
  };
  static const std::vector<Cue> cues = {
      {{"no", "more", "than"}, CompareOp::lte}, {{"less", "than"}, CompareOp::lt},
      {{"cheaper", "than"}, CompareOp::lt},      {{"more", "than"}, CompareOp::gt},
      {{"at", "most"}, CompareOp::lte},          {{"up", "to"}, CompareOp::lte},
      {{"at", "least"}, CompareOp::gte},         {{"under"}, CompareOp::lt},
      {{"below"}, CompareOp::lt},                {{"over"}, CompareOp::gt},
      {{"above"}, CompareOp::gt}};
  const auto* column = default_numeric_column(p);
  if (!column) return;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (const auto& cue : cues) {
      std::size_t n = cue.words.size();
      if (i + n >= toks.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k)
        ok = !toks[i + k].consumed && toks[i + k].text == cue.words[k];
      double value;
      if (!ok || toks[i + n].consumed || !text::parse_number(toks[i + n].text, value)) continue;
      for (std::size_t k = 0; k <= n; ++k) toks[i + k].consumed = true;
      out.parts.emplace_back(i, sql::Predicate::make_atom(sql::Atom{column->name, cue.op, {Literal{value}}}));
      break;
    }
  }
  // Ordering and limits.
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].consumed) continue;
    if (toks[i].text == "cheapest") out.order_by = sql::OrderBy{column->name, false};
    if (toks[i].text == "priciest" ||
        (toks[i].text == "expensive" && i > 0 && toks[i - 1].text == "most"))
      out.order_by = sql::OrderBy{column->name, true};
    double n;
    if ((toks[i].text == "top" || toks[i].text == "first") && i + 1 < toks.size() &&
        text::parse_number(toks[i + 1].text, n) && n >= 1 && n == static_cast<double>(static_cast<std::int64_t>(n))) {
      out.limit = static_cast<std::int64_t>(n);
      toks[i].consumed = toks[i + 1].consumed = true;
    }
  }
}

void match_values(std::vector<Token>& toks, const ParsedPrompt& p, Compiled& out) {
  struct Candidate {
    std::size_t start;
    std::size_t len;
    std::size_t column_order;
    std::string column;
    Literal value;
  };
  std::vector<Candidate> candidates;
  std::size_t order = 0;
  for (const auto& [column, values] : p.enums) {
    for (const auto& v : values) {
      auto vt = text::words(v);
      if (vt.empty()) continue;
      for (std::size_t i = 0; i + vt.size() <= toks.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < vt.size() && ok; ++k)
          ok = token_matches(toks[i + k].text, vt[k], k + 1 == vt.size());
        if (ok) candidates.push_back({i, vt.size(), order, column, Literal{v}});
      }
    }
    ++order;
  }
  for (const auto& c : p.columns) {
    if (c.kind != ValueKind::boolean || c.primary_key) continue;
    auto words = text::split(c.name, '_');
    for (std::size_t i = 0; i + words.size() <= toks.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < words.size() && ok; ++k) ok = toks[i + k].text == words[k];
      if (ok) candidates.push_back({i, words.size(), order, c.name, Literal{true}});
    }
    ++order;
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.len != b.len) return a.len > b.len;
    return a.column_order < b.column_order;
  });

  struct Group {
    std::size_t first_pos;
    std::vector<Literal> positive;
    std::vector<Literal> negative;
  };
  std::map<std::string, Group> groups;
  std::vector<std::string> group_order;
  for (const auto& c : candidates) {
    bool free = true;
    for (std::size_t k = 0; k < c.len && free; ++k) free = !toks[c.start + k].consumed;
    if (!free) continue;
    for (std::size_t k = 0; k < c.len; ++k) toks[c.start + k].consumed = true;
    std::size_t neg_len = 0;
    bool negated = is_negator(toks, c.start, neg_len);
    std::size_t pos = c.start;
    if (negated) {
      for (std::size_t k = 1; k <= neg_len; ++k) toks[c.start - k].consumed = true;
      pos = c.start - neg_len;
    }
    auto [it, inserted] = groups.try_emplace(c.column, Group{pos, {}, {}});
    if (inserted) group_order.push_back(c.column);
    auto& g = it->second;
    auto& bucket = negated ? g.negative : g.positive;
    if (std::find(bucket.begin(), bucket.end(), c.value) == bucket.end()) bucket.push_back(c.value);
  }
  for (const auto& column : group_order) {
    const auto& g = groups[column];
    if (g.positive.size() == 1) {
      out.parts.emplace_back(g.first_pos, sql::Predicate::make_atom({column, CompareOp::eq, g.positive}));
    } else if (g.positive.size() > 1) {
      out.parts.emplace_back(g.first_pos, sql::Predicate::make_atom({column, CompareOp::in, g.positive}));
    }
    if (g.negative.size() == 1 && g.positive.empty()) {
      if (std::holds_alternative<bool>(g.negative[0]))
        out.parts.emplace_back(g.first_pos, sql::Predicate::make_atom(
                                                {column, CompareOp::eq, {Literal{false}}}));
      else
        out.parts.emplace_back(g.first_pos, sql::Predicate::make_atom({column, CompareOp::neq, g.negative}));
    } else if (g.negative.size() > 1 && g.positive.empty()) {
      out.parts.emplace_back(g.first_pos, sql::Predicate::negation(sql::Predicate::make_atom(
                                              {column, CompareOp::in, g.negative})));
    }
  }
}

std::optional<std::string> single_column(const sql::Predicate& p) {
  if (p.kind == sql::Predicate::Kind::atom) return p.atom.column;
  if (p.kind == sql::Predicate::Kind::negate) return single_column(p.children[0]);
  return std::nullopt;
}

}  // namespace

std::string mock_discretize_answer(std::string_view text_in, const std::vector<LexiconEntry>& lexicon) {
  auto lower = text::to_lower(text_in);
  struct Match {
    std::size_t start;
    std::size_t len;
    std::size_t entry;
  };
  std::vector<Match> matches;
  for (std::size_t e = 0; e < lexicon.size(); ++e) {
    auto phrase = text::to_lower(lexicon[e].phrase);
    if (phrase.empty()) continue;
    for (auto at = lower.find(phrase); at != std::string::npos; at = lower.find(phrase, at + 1)) {
      bool left = at == 0 || !is_word_char(lower[at - 1]) || !is_word_char(phrase.front());
      auto end = at + phrase.size();
      bool right = end >= lower.size() || !is_word_char(lower[end]) || !is_word_char(phrase.back());
      if (left && right) matches.push_back({at, phrase.size(), e});
    }
  }
  std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.len != b.len) return a.len > b.len;
    return a.entry < b.entry;
  });
  nlohmann::json pairs = nlohmann::json::array();
  std::size_t covered = 0;
  for (const auto& m : matches) {
    if (m.start < covered) continue;
    covered = m.start + m.len;
    pairs.push_back({lexicon[m.entry].key.str(), lexicon[m.entry].value});
  }
  return pairs.dump();
}

std::string mock_text2sql_answer(std::string_view prompt) {
  auto p = parse_text2sql_prompt(prompt);
  auto explicit_clauses = take_explicit_clauses(p.question, p);
  auto toks = tokenize(explicit_clauses.remainder);

  Compiled compiled;
  for (auto& [pos, atom] : explicit_clauses.atoms) {
    // Map raw positions onto token order by counting words before the clause.
    auto before = text::words(explicit_clauses.remainder.substr(0, pos)).size();
    compiled.parts.emplace_back(before, sql::Predicate::make_atom(atom));
  }
  match_numeric(toks, p, compiled);
  match_values(toks, p, compiled);
  std::stable_sort(compiled.parts.begin(), compiled.parts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  // Carry the dialog state forward; a new constraint on a column replaces it.
  std::vector<sql::Predicate> predicates;
  std::vector<std::string> touched;
  for (const auto& [pos, pred] : compiled.parts) {
    (void)pos;
    if (auto col = single_column(pred)) touched.push_back(*col);
  }
  for (const auto& atom : p.state)
    if (std::find(touched.begin(), touched.end(), atom.column) == touched.end())
      predicates.push_back(sql::Predicate::make_atom(atom));
  for (auto& [pos, pred] : compiled.parts) {
    (void)pos;
    predicates.push_back(std::move(pred));
  }

  sql::QueryAst ast;
  ast.source = p.table;
  if (predicates.size() == 1) ast.predicate = std::move(predicates.front());
  else if (predicates.size() > 1) ast.predicate = sql::Predicate::all(std::move(predicates));
  ast.order_by = compiled.order_by;
  ast.limit = compiled.limit;
  return "```sql\n" + sql::render(ast) + "\n```";
}

MockTransport::MockTransport(std::vector<LexiconEntry> lexicon) : lexicon_(std::move(lexicon)) {}

std::string MockTransport::send(std::string_view prompt, const ProviderConfig&) {
  ++calls_;
  auto cue = last_nonempty_line(prompt);
  if (cue == kDiscretizeAnswerCue) {
    auto open = prompt.rfind(kTextOpen);
    if (open == std::string_view::npos) throw ProviderError("mock: discretize prompt has no text", 1);
    auto start = open + kTextOpen.size();
    auto close = prompt.find(kTextClose, start);
    return mock_discretize_answer(prompt.substr(start, close == std::string_view::npos ? std::string_view::npos
                                                                                       : close - start),
                                  lexicon_);
  }
  if (cue == kText2SqlAnswerCue) return mock_text2sql_answer(prompt);
  throw ProviderError("mock: unrecognized prompt", 1);
}

}  // namespace dir::llm
