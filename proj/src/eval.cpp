#include "dir/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>

#include "dir/error.hpp"
#include "dir/serialize.hpp"
#include "dir/sql.hpp"
#include "dir/text2sql.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[pick(rng, i)]);
}

std::string fill(std::string_view pattern, std::string_view value) {
  std::string out(pattern);
  auto at = out.find("{v}");
  if (at != std::string::npos) out.replace(at, 3, value);
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string title_case(std::string_view s) {
  auto parts = text::split(s, ' ');
  for (auto& p : parts) p = capitalize(p);
  return text::join(parts, " ");
}

AttributeValue plain(std::string v) { return AttributeValue{v, {v}}; }

std::vector<AttributeValue> plain_values(std::initializer_list<const char*> vs) {
  std::vector<AttributeValue> out;
  for (const char* v : vs) out.push_back(plain(v));
  return out;
}

const AttributeSpec* find_attribute(const DomainSpec& d, bool distractor) {
  for (const auto& a : d.attributes)
    if (distractor ? a.has_distractors : a.paraphrased) return &a;
  return nullptr;
}

const std::string& text_of(const Literal& l) { return std::get<std::string>(l); }

bool compare(const Literal& have, CompareOp op, const Literal& want) {
  if (have.index() != want.index()) return op == CompareOp::neq;
  switch (op) {
    case CompareOp::eq: return have == want;
    case CompareOp::neq: return have != want;
    case CompareOp::lt: return have < want;
    case CompareOp::lte: return have <= want;
    case CompareOp::gt: return have > want;
    case CompareOp::gte: return have >= want;
    case CompareOp::in:
    case CompareOp::like: break;
  }
  return false;
}

bool satisfies(const GroundTruthRow& row, const IntentConstraint& c) {
  auto it = row.find(c.column);
  if (it == row.end()) return false;
  if (c.op == CompareOp::in)
    return std::any_of(c.values.begin(), c.values.end(), [&](const Literal& v) { return it->second == v; });
  if (c.op == CompareOp::like) throw SpecError("like constraints are not part of the intent language");
  return compare(it->second, c.op, c.values.at(0));
}

std::string literal_phrase(const Literal& l) {
  if (std::holds_alternative<double>(l)) return text::format_number(std::get<double>(l));
  if (std::holds_alternative<bool>(l)) return std::get<bool>(l) ? "true" : "false";
  return text_of(l);
}

std::string describe(const std::vector<IntentConstraint>& constraints) {
  std::vector<std::string> enum_parts;
  std::string price;
  for (const auto& c : constraints) {
    if (c.column == "price") {
      const auto n = "$" + literal_phrase(c.values.at(0));
      switch (c.op) {
        case CompareOp::lt: price = " under " + n; break;
        case CompareOp::lte: price = " at most " + n; break;
        case CompareOp::gt: price = " over " + n; break;
        case CompareOp::gte: price = " at least " + n; break;
        default: throw SpecError("unsupported price operator");
      }
      continue;
    }
    std::vector<std::string> vs;
    for (const auto& v : c.values) vs.push_back(literal_phrase(v));
    switch (c.op) {
      case CompareOp::eq: enum_parts.push_back(vs[0]); break;
      case CompareOp::in: enum_parts.push_back(text::join(vs, " or ")); break;
      case CompareOp::neq:
        enum_parts.push_back(vs[0].find(' ') == std::string::npos ? "non-" + vs[0] : "not " + vs[0]);
        break;
      default: throw SpecError("unsupported constraint operator");
    }
  }
  std::string out = "Show me";
  for (const auto& p : enum_parts) out += " " + p;
  return out + " items" + price;
}

const GroundTruthRow& row_at(const std::map<std::string, GroundTruthRow>& rows, std::size_t i) {
  auto it = rows.begin();
  std::advance(it, static_cast<std::ptrdiff_t>(i));
  return it->second;
}

// Canonical values of `attribute` that occur in the table.
std::vector<std::string> present_values(const std::map<std::string, GroundTruthRow>& rows,
                                        const std::string& attribute) {
  std::set<std::string> seen;
  for (const auto& [k, r] : rows)
    if (auto it = r.find(attribute); it != r.end() && std::holds_alternative<std::string>(it->second))
      seen.insert(text_of(it->second));
  return {seen.begin(), seen.end()};
}

std::optional<std::string> other_value(const std::vector<std::string>& values, const std::string& not_this,
                                       Rng& rng) {
  std::vector<std::string> options;
  for (const auto& v : values)
    if (v != not_this) options.push_back(v);
  if (options.empty()) return std::nullopt;
  return options[pick(rng, options.size())];
}

Literal price_bound(const GroundTruthRow& row) {
  double p = std::get<double>(row.at("price"));
  return Literal{(std::floor(p / 50.0) + 1.0) * 50.0};
}

const ContextTable& context_of(const EvalInputs& in, const std::string& table_id) {
  for (const auto& c : in.contexts)
    if (c.table_id == table_id) return c;
  throw NotFoundError("unknown table '" + table_id + "'");
}

const TableEntry& entry_of(const EvalInputs& in, const std::string& table_id) {
  for (const auto& t : in.tables)
    if (t.table_id == table_id) return t;
  throw NotFoundError("unknown table '" + table_id + "'");
}

std::set<std::string> keys_of(const ResultSet& rs, const std::string& pk) {
  std::set<std::string> out;
  auto idx = rs.column_index(pk);
  if (!idx) throw ContractError("result set lacks the primary key column");
  for (const auto& row : rs.rows) out.insert(value_to_text(row[*idx]));
  return out;
}

}  // namespace

void CorpusSpec::validate() const {
  std::set<std::string> ids;
  for (const auto& d : domains) {
    if (d.domain_id.empty() || !ColumnName::is_normalized(d.domain_id))
      throw SpecError("domain id '" + d.domain_id + "' is not a normalized name");
    if (!ids.insert(d.domain_id).second) throw SpecError("duplicate domain '" + d.domain_id + "'");
    if (d.price_min < 0 || d.price_max < d.price_min) throw SpecError("empty price range in " + d.domain_id);
    std::set<std::string> names;
    for (const auto& a : d.attributes) {
      if (!ColumnName::is_normalized(a.name)) throw SpecError("attribute '" + a.name + "' is not a normalized name");
      if (a.name == "price" || a.name == "title" || a.name == "in_stock" || a.name == "product_id" ||
          a.name == "description")
        throw SpecError("attribute '" + a.name + "' collides with a structured column");
      if (!names.insert(a.name).second) throw SpecError("duplicate attribute '" + a.name + "'");
      if (a.values.empty()) throw SpecError("attribute '" + a.name + "' has no values");
      if (a.phrasings.empty()) throw SpecError("attribute '" + a.name + "' has no phrasings");
      for (const auto& p : a.phrasings)
        if (p.pattern.find("{v}") == std::string::npos)
          throw SpecError("phrasing '" + p.pattern + "' has no {v} slot");
      for (const auto& v : a.values)
        if (std::find(v.surfaces.begin(), v.surfaces.end(), v.canonical) == v.surfaces.end())
          throw SpecError("value '" + v.canonical + "' does not list its canonical spelling");
    }
    for (const auto& s : d.distractors)
      if (s.find("{v}") != std::string::npos && !find_attribute(d, true))
        throw SpecError("distractor in " + d.domain_id + " needs an attribute with distractors");
  }
}

CorpusSpec builtin_corpus_spec(std::size_t rows_per_domain, std::uint64_t seed) {
  CorpusSpec spec;
  spec.rows_per_domain = rows_per_domain;
  spec.seed = seed;

  DomainSpec bp;
  bp.domain_id = "backpacks";
  bp.id_prefix = "bp";
  bp.title_noun = "pack";
  bp.attributes = {
      {"product_type", plain_values({"backpack", "daypack"}),
       {{"this {v} is built for daily carry", ""}, {"a dependable {v} for commuters", ""}}},
      {"color", plain_values({"black", "blue", "red", "green", "grey"}),
       {{"finished in {v}", ""}, {"the {v} colorway", ""}}, true},
      {"product_size",
       {{"15 liter", {"15 liter", "15-liter", "15 litre", "15-litre"}},
        {"22 liter", {"22 liter", "22-liter", "22 litre", "22-litre"}},
        {"30 liter", {"30 liter", "30-liter", "30 litre", "30-litre"}}},
       {{"a {v} main compartment", ""}, {"offers {v} of storage", ""}}, false, true},
      {"handle_type", plain_values({"strap", "top handle", "grab loop"}),
       {{"carried by a padded {v}", ""}, {"comes with a sturdy {v}", ""}}},
      {"product_brand", plain_values({"trailmaster", "northpeak", "urbanfox"}),
       {{"made by {v}", ""}, {"designed by {v}", ""}}},
      {"material", plain_values({"nylon", "canvas", "polyester", "leather"}),
       {{"a {v} shell", ""}, {"sewn from {v}", ""}}},
      {"number_of_pockets", plain_values({"2", "3", "4", "5"}),
       {{"{v} pockets", "no_of_pockets"}, {"{v} zip pockets in total", "number_of_pockets"}}, false, false, false},
  };
  bp.distractors = {"accented with {v} trim", "pairs well with a {v} jacket", "a {v} zipper pull",
                    "tested on mountain trails"};

  DomainSpec pf;
  pf.domain_id = "perfumes";
  pf.id_prefix = "pf";
  pf.title_noun = "fragrance";
  pf.price_min = 25;
  pf.price_max = 300;
  pf.attributes = {
      {"product_type", plain_values({"perfume", "cologne"}),
       {{"this {v} opens softly", ""}, {"a signature {v} for evenings", ""}}},
      {"scent_family", plain_values({"floral", "woody", "citrus", "fresh", "spicy"}),
       {{"a {v} scent profile", ""}, {"belongs to the {v} family", ""}}, true},
      {"volume",
       {{"30 ml", {"30 ml", "30ml", "30 milliliter"}},
        {"50 ml", {"50 ml", "50ml", "50 milliliter"}},
        {"100 ml", {"100 ml", "100ml", "100 milliliter"}}},
       {{"a {v} bottle", ""}, {"sold as a {v} flacon", ""}}, false, true},
      {"concentration", plain_values({"eau de parfum", "eau de toilette", "extrait"}),
       {{"{v} strength", ""}, {"blended as an {v}", ""}}},
      {"brand", plain_values({"maison lune", "verdant", "ambrelle"}),
       {{"created by {v}", ""}, {"from the house of {v}", ""}}},
  };
  pf.distractors = {"without the heavy {v} notes of older blends", "layers well over a {v} body lotion",
                    "a gift box is included"};

  DomainSpec wt;
  wt.domain_id = "watches";
  wt.id_prefix = "wt";
  wt.title_noun = "timepiece";
  wt.price_min = 80;
  wt.price_max = 900;
  wt.attributes = {
      {"product_type", plain_values({"watch", "chronograph"}),
       {{"this {v} keeps accurate time", ""}, {"a classic {v} for any occasion", ""}}},
      {"dial_color", plain_values({"black", "white", "blue", "green", "silver"}),
       {{"a {v} dial", ""}, {"the {v} face", ""}}, true},
      {"strap_material", plain_values({"leather", "steel", "rubber", "nylon"}),
       {{"on a {v} strap", ""}, {"a {v} band", ""}}},
      {"movement", plain_values({"quartz", "automatic", "solar"}),
       {{"{v} movement", ""}, {"powered by a {v} caliber", ""}}},
      {"case_size",
       {{"38 mm", {"38 mm", "38mm", "38-mm"}}, {"40 mm", {"40 mm", "40mm", "40-mm"}},
        {"42 mm", {"42 mm", "42mm", "42-mm"}}},
       {{"a {v} case", ""}, {"a {v} housing", ""}}, false, true},
      {"brand", plain_values({"horologe", "kestrel", "tidewell"}), {{"crafted by {v}", ""}, {"signed {v}", ""}}},
  };
  wt.distractors = {"ships in a {v} gift box", "pairs with a {v} shirt", "water resistant for swimming"};

  spec.domains = {bp, pf, wt};
  return spec;
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus corpus;
  Rng rng(spec.seed);
  for (const auto& d : spec.domains) {
    ContextTable t;
    t.table_id = d.domain_id;
    t.domain_id = d.domain_id;
    t.primary_key = ColumnName::normalize("product_id");
    t.columns = {{ColumnName::normalize("product_id"), ValueKind::text, false},
                 {ColumnName::normalize("title"), ValueKind::text, false},
                 {ColumnName::normalize("price"), ValueKind::number, false},
                 {ColumnName::normalize("in_stock"), ValueKind::boolean, false},
                 {ColumnName::normalize("description"), ValueKind::text, false}};
    auto& truth = corpus.truth[t.table_id];
    const auto* distractor_attr = find_attribute(d, true);
    const AttributeSpec* brand_attr = nullptr;
    for (const auto& a : d.attributes)
      if (a.name.ends_with("brand")) brand_attr = &a;

    for (std::size_t i = 0; i < spec.rows_per_domain; ++i) {
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04zu", d.id_prefix.c_str(), i + 1);
      GroundTruthRow row;
      std::vector<std::string> sentences;
      std::string brand;
      for (const auto& a : d.attributes) {
        const auto& value = a.values[pick(rng, a.values.size())];
        const auto& surface = a.paraphrased ? value.surfaces[pick(rng, value.surfaces.size())] : value.canonical;
        const auto& phrasing = a.phrasings[pick(rng, a.phrasings.size())];
        sentences.push_back(fill(phrasing.pattern, surface));
        row[a.name] = Literal{value.canonical};
        if (&a == brand_attr) brand = value.canonical;
      }
      const double price = d.price_min + static_cast<double>(pick(rng, static_cast<std::size_t>(d.price_max - d.price_min + 1)));
      const bool in_stock = pick(rng, 4) != 0;
      if (!d.distractors.empty()) {
        std::size_t n = pick(rng, 3);
        for (std::size_t k = 0; k < n; ++k) {
          const auto& pattern = d.distractors[pick(rng, d.distractors.size())];
          std::string v = distractor_attr ? distractor_attr->values[pick(rng, distractor_attr->values.size())].canonical
                                          : std::string();
          auto sentence = fill(pattern, v);
          if (std::find(sentences.begin(), sentences.end(), sentence) == sentences.end()) sentences.push_back(sentence);
        }
      }
      shuffle(sentences, rng);
      std::string description;
      for (const auto& s : sentences) description += (description.empty() ? "" : " ") + capitalize(s) + ".";
      std::string title = (brand.empty() ? std::string() : title_case(brand) + " ") + title_case(d.title_noun) +
                          " " + std::to_string(i + 1);

      row["title"] = Literal{title};
      row["price"] = Literal{price};
      row["in_stock"] = Literal{in_stock};
      t.rows.push_back(Row{Value{std::string(id)}, Value{title}, Value{price}, Value{in_stock}, Value{description}});
      truth.emplace(id, std::move(row));
    }
    check_context_table(t);
    corpus.tables.push_back(std::move(t));
  }
  return corpus;
}

std::vector<llm::LexiconEntry> oracle_lexicon(const CorpusSpec& spec) {
  spec.validate();
  std::vector<llm::LexiconEntry> out;
  for (const auto& d : spec.domains)
    for (const auto& a : d.attributes)
      for (const auto& p : a.phrasings) {
        auto key = ColumnName::normalize(p.key.empty() ? a.name : p.key);
        for (const auto& v : a.values)
          for (const auto& s : v.surfaces) out.push_back({fill(p.pattern, s), key, v.canonical});
      }
  return out;
}

std::vector<QueryIntent> generate_suite(const CorpusSpec& spec, const Corpus& corpus, SuiteKind kind,
                                        std::size_t count, std::uint64_t seed) {
  spec.validate();
  if (spec.domains.empty()) throw SpecError("suite generation needs at least one domain");
  Rng rng(seed);
  std::vector<QueryIntent> suite;
  for (std::size_t k = 0; k < count; ++k) {
    const auto& d = spec.domains[k % spec.domains.size()];
    const auto truth_it = corpus.truth.find(d.domain_id);
    if (truth_it == corpus.truth.end() || truth_it->second.empty())
      throw SpecError("domain '" + d.domain_id + "' has no rows to anchor intents");
    const auto& rows = truth_it->second;
    const auto& anchor = row_at(rows, pick(rng, rows.size()));
    QueryIntent intent;
    intent.domain = d.domain_id;

    if (kind == SuiteKind::direct) {
      if (k % 10 == 9) {
        intent.kind = "exploratory";
        const auto& v = text_of(anchor.at("product_type"));
        intent.constraints = {{"product_type", CompareOp::eq, {Literal{v}}}};
        intent.description = "I need a " + v;
        suite.push_back(std::move(intent));
        continue;
      }
      std::vector<const AttributeSpec*> attrs;
      for (const auto& a : d.attributes)
        if (a.queryable) attrs.push_back(&a);
      shuffle(attrs, rng);
      std::size_t eq_count = 1 + pick(rng, 2);
      for (std::size_t i = 0; i < eq_count && i < attrs.size(); ++i)
        intent.constraints.push_back({attrs[i]->name, CompareOp::eq, {anchor.at(attrs[i]->name)}});
      if (attrs.size() > eq_count && pick(rng, 2) == 0) {
        const auto* a = attrs[eq_count];
        if (auto v = other_value(present_values(rows, a->name), text_of(anchor.at(a->name)), rng))
          intent.constraints.insert(intent.constraints.begin(), {a->name, CompareOp::neq, {Literal{*v}}});
      }
      if (pick(rng, 2) == 0) intent.constraints.push_back({"price", CompareOp::lt, {price_bound(anchor)}});
    } else {
      const auto* neg = find_attribute(d, true);
      const auto* para = find_attribute(d, false);
      if (!neg || !para) throw SpecError("domain '" + d.domain_id + "' lacks distractor or paraphrase attributes");
      const std::size_t shape = k % 3;
      if (shape != 2) {
        if (auto v = other_value(present_values(rows, neg->name), text_of(anchor.at(neg->name)), rng))
          intent.constraints.push_back({neg->name, CompareOp::neq, {Literal{*v}}});
      }
      if (shape != 0) intent.constraints.push_back({para->name, CompareOp::eq, {anchor.at(para->name)}});
      if (pick(rng, 3) == 0) intent.constraints.push_back({"price", CompareOp::lt, {price_bound(anchor)}});
    }
    intent.description = describe(intent.constraints);
    suite.push_back(std::move(intent));
  }
  return suite;
}

std::vector<QueryIntent> load_suite(std::istream& in) {
  std::vector<QueryIntent> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<QueryIntent>());
    } catch (const json::exception& e) {
      throw SchemaError("suite line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void save_suite(std::ostream& out, const std::vector<QueryIntent>& suite) {
  for (const auto& q : suite) out << json(q).dump() << "\n";
}

void save_ground_truth(std::ostream& out, const GroundTruth& truth) {
  json doc = json::object();
  for (const auto& [table, rows] : truth) {
    json t = json::object();
    for (const auto& [pk, row] : rows) {
      json r = json::object();
      for (const auto& [attr, v] : row) r[attr] = v;
      t[pk] = r;
    }
    doc[table] = t;
  }
  out << doc.dump() << "\n";
}

GroundTruth load_ground_truth(std::istream& in) {
  GroundTruth truth;
  try {
    auto doc = json::parse(in);
    for (const auto& [table, rows] : doc.items())
      for (const auto& [pk, row] : rows.items())
        for (const auto& [attr, v] : row.items()) truth[table][pk][attr] = v.get<Literal>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("ground truth: ") + e.what());
  }
  return truth;
}

std::set<std::string> oracle_answer(const QueryIntent& intent, const GroundTruth& truth) {
  std::set<std::string> out;
  auto it = truth.find(intent.domain);
  if (it == truth.end()) return out;
  for (const auto& [pk, row] : it->second)
    if (std::all_of(intent.constraints.begin(), intent.constraints.end(),
                    [&](const IntentConstraint& c) { return satisfies(row, c); }))
      out.insert(pk);
  return out;
}

std::string_view to_string(EvalSystem system) {
  switch (system) {
    case EvalSystem::dir: return "dir";
    case EvalSystem::like_baseline: return "like_baseline";
    case EvalSystem::lexical_baseline: return "lexical_baseline";
  }
  return "dir";
}

EvalSystem eval_system_from_string(std::string_view s) {
  if (s == "dir") return EvalSystem::dir;
  if (s == "like" || s == "like_baseline") return EvalSystem::like_baseline;
  if (s == "lexical" || s == "lexical_baseline") return EvalSystem::lexical_baseline;
  throw ConfigError("unknown system '" + std::string(s) + "' (expected dir, like or lexical)");
}

double recall_of(const std::set<std::string>& returned, const std::set<std::string>& truth) {
  if (truth.empty()) return 1.0;
  std::size_t hits = 0;
  for (const auto& k : truth) hits += returned.count(k);
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double precision_of(const std::set<std::string>& returned, const std::set<std::string>& truth) {
  if (returned.empty()) return truth.empty() ? 1.0 : 0.0;
  std::size_t hits = 0;
  for (const auto& k : returned) hits += truth.count(k);
  return static_cast<double>(hits) / static_cast<double>(returned.size());
}

std::set<std::string> dir_answer(const QueryIntent& intent, const EvalInputs& inputs) {
  if (!inputs.gateway) throw PreconditionError("the dir system needs a model gateway");
  const auto& entry = entry_of(inputs, intent.domain);
  auto q = text_to_sql(intent.description, entry.schema, entry.catalog, DialogState{entry.table_id, {}},
                       *inputs.gateway);
  if (!q.executable()) return {};
  return keys_of(execute(q, entry.schema, inputs.store), entry.schema.primary_key.str());
}

std::set<std::string> like_baseline_answer(const QueryIntent& intent, const EvalInputs& inputs) {
  const auto& ctx = context_of(inputs, intent.domain);
  const auto text_cols = ctx.text_columns();
  if (text_cols.empty()) throw PreconditionError("table '" + ctx.table_id + "' has no free-text column");
  auto text_match = [&](const std::string& value) {
    std::vector<sql::Predicate> any;
    for (const auto& c : text_cols)
      any.push_back(sql::Predicate::make_atom({c.str(), CompareOp::like, {Literal{"%" + value + "%"}}}));
    return any.size() == 1 ? any.front() : sql::Predicate::any(std::move(any));
  };
  std::vector<sql::Predicate> parts;
  for (const auto& c : intent.constraints) {
    if (ctx.column_index(ColumnName::normalize(c.column))) {
      parts.push_back(sql::Predicate::make_atom({c.column, c.op, c.values}));
      continue;
    }
    std::vector<sql::Predicate> alternatives;
    for (const auto& v : c.values) alternatives.push_back(text_match(literal_phrase(v)));
    auto p = alternatives.size() == 1 ? alternatives.front() : sql::Predicate::any(std::move(alternatives));
    parts.push_back(c.op == CompareOp::neq ? sql::Predicate::negation(std::move(p)) : std::move(p));
  }
  std::string q = "SELECT " + sql::quote_identifier(ctx.primary_key.str()) + " FROM " +
                  sql::quote_identifier(context_table_name(ctx.table_id));
  if (!parts.empty())
    q += " WHERE " + sql::render(parts.size() == 1 ? parts.front() : sql::Predicate::all(std::move(parts)));
  return keys_of(inputs.store.query_read_only(q), ctx.primary_key.str());
}

std::set<std::string> lexical_baseline_answer(const QueryIntent& intent, const EvalInputs& inputs,
                                              std::size_t k) {
  const auto& ctx = context_of(inputs, intent.domain);
  std::set<std::string> query_tokens;
  for (auto& w : text::content_words(intent.description)) query_tokens.insert(std::move(w));
  std::vector<std::size_t> text_idx;
  for (const auto& c : ctx.text_columns()) text_idx.push_back(*ctx.column_index(c));
  std::vector<std::pair<long, std::string>> ranked;  // (-score, key)
  for (const auto& row : ctx.rows) {
    std::set<std::string> doc;
    for (auto i : text_idx)
      if (!is_null(row[i]))
        for (auto& w : text::words(value_to_text(row[i]))) doc.insert(std::move(w));
    long score = 0;
    for (const auto& t : query_tokens) score += static_cast<long>(doc.count(t));
    ranked.emplace_back(-score, ctx.key_of(row));
  }
  std::sort(ranked.begin(), ranked.end());
  std::set<std::string> out;
  for (std::size_t i = 0; i < k && i < ranked.size(); ++i) out.insert(ranked[i].second);
  return out;
}

EvalReport evaluate(EvalSystem system, const std::vector<QueryIntent>& suite, const EvalInputs& inputs) {
  EvalReport report;
  report.system = std::string(to_string(system));
  double recall_sum = 0, precision_sum = 0;
  for (const auto& intent : suite) {
    const auto truth = oracle_answer(intent, inputs.truth);
    std::set<std::string> returned;
    switch (system) {
      case EvalSystem::dir: returned = dir_answer(intent, inputs); break;
      case EvalSystem::like_baseline: returned = like_baseline_answer(intent, inputs); break;
      case EvalSystem::lexical_baseline: returned = lexical_baseline_answer(intent, inputs, truth.size()); break;
    }
    QueryMetrics m;
    m.description = intent.description;
    m.recall = recall_of(returned, truth);
    m.precision = precision_of(returned, truth);
    m.returned = returned.size();
    m.truth = truth.size();
    for (const auto& key : returned) m.hits += truth.count(key);
    recall_sum += m.recall;
    precision_sum += m.precision;
    report.per_query.push_back(std::move(m));
  }
  if (!suite.empty()) {
    report.macro_recall = recall_sum / static_cast<double>(suite.size());
    report.macro_precision = precision_sum / static_cast<double>(suite.size());
  }
  return report;
}

std::string format_report_table(const std::vector<EvalReport>& reports) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-18s %8s %13s %16s\n", "system", "queries", "macro_recall", "macro_precision");
  out += line;
  for (const auto& r : reports) {
    auto cell = [](const std::optional<double>& v) {
      if (!v) return std::string("-");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", *v);
      return std::string(buf);
    };
    std::snprintf(line, sizeof line, "%-18s %8zu %13s %16s\n", r.system.c_str(), r.per_query.size(),
                  cell(r.macro_recall).c_str(), cell(r.macro_precision).c_str());
    out += line;
  }
  return out;
}

}  // namespace dir
