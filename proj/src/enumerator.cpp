#include "dir/enumerator.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dir/error.hpp"
#include "dir/text_util.hpp"

namespace dir {

namespace {

const std::map<std::string, std::string>& abbreviations() {
  static const std::map<std::string, std::string> table = {
      {"no", "number"}, {"qty", "quantity"}, {"amt", "amount"}};
  return table;
}

std::size_t abbreviation_count(const ColumnName& key) {
  std::size_t n = 0;
  for (const auto& w : key.words()) n += abbreviations().count(w);
  return n;
}

std::vector<std::string> sorted_union(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t support_of(const EnumerationCatalog& c, const ColumnName& key) {
  auto it = c.support.find(key);
  return it == c.support.end() ? 0 : it->second;
}

}  // namespace

void CapPolicy::validate() const {
  if (max_columns < 1) throw ConfigError("max_columns must be >= 1");
  if (!(min_row_support >= 0.0 && min_row_support <= 1.0))
    throw ConfigError("min_row_support must be in [0,1]");
  std::set<ColumnName> distinct(mandatory_keys.begin(), mandatory_keys.end());
  if (distinct.size() > max_columns) throw ConfigError("more mandatory keys than max_columns");
}

EnumerationCatalog enumerate_catalog(const ExtractionSet& extractions) {
  EnumerationCatalog catalog;
  catalog.table_id = extractions.table_id;
  std::map<ColumnName, std::set<std::string>> values;
  for (const auto& [pk, row] : extractions.per_row) {
    (void)pk;
    std::set<ColumnName> seen;
    for (const auto& t : row.tuples) {
      values[t.key].insert(t.value);
      if (seen.insert(t.key).second) ++catalog.support[t.key];
    }
  }
  for (auto& [key, set] : values) {
    catalog.entries.emplace(key, std::vector<std::string>(set.begin(), set.end()));
    catalog.consolidation_map.emplace(key, key);
  }
  return catalog;
}

std::string canonical_key(const ColumnName& key) {
  auto words = key.words();
  for (auto& w : words) {
    auto it = abbreviations().find(w);
    if (it != abbreviations().end()) w = it->second;
  }
  if (!words.empty()) words.back() = text::singular(words.back());
  return text::join(words, "_");
}

EnumerationCatalog consolidate_keys(const EnumerationCatalog& catalog) {
  std::map<std::string, std::vector<ColumnName>> groups;
  for (const auto& [key, values] : catalog.entries) {
    (void)values;
    groups[canonical_key(key)].push_back(key);
  }

  EnumerationCatalog out;
  out.table_id = catalog.table_id;
  out.dropped = catalog.dropped;
  std::map<ColumnName, ColumnName> renamed;  // original -> survivor

  for (auto& [canonical, members] : groups) {
    (void)canonical;
    auto survivor = *std::min_element(members.begin(), members.end(), [&](const auto& a, const auto& b) {
      auto sa = support_of(catalog, a), sb = support_of(catalog, b);
      if (sa != sb) return sa > sb;
      auto aa = abbreviation_count(a), ab = abbreviation_count(b);
      if (aa != ab) return aa < ab;
      return a < b;
    });
    std::vector<std::string> merged;
    std::size_t support = 0;
    for (const auto& m : members) {
      merged = sorted_union(merged, catalog.entries.at(m));
      support += support_of(catalog, m);
      renamed.emplace(m, survivor);
    }
    out.entries.emplace(survivor, std::move(merged));
    if (catalog.support.count(survivor) || support > 0) out.support[survivor] = support;
  }

  // Compose with the existing map so earlier merges follow the new survivor.
  for (const auto& [from, to] : catalog.consolidation_map) {
    auto it = renamed.find(to);
    out.consolidation_map[from] = it == renamed.end() ? to : it->second;
  }
  for (const auto& [from, to] : renamed) out.consolidation_map[from] = to;
  return out;
}

EnumerationCatalog cap_columns(const EnumerationCatalog& catalog, const CapPolicy& policy,
                               std::size_t row_count) {
  policy.validate();
  for (const auto& key : policy.mandatory_keys)
    if (!catalog.entries.count(key))
      throw GroundingError("mandatory key '" + key.str() + "' was not extracted for table '" +
                           catalog.table_id + "'");

  auto mandatory = [&](const ColumnName& key) {
    return std::find(policy.mandatory_keys.begin(), policy.mandatory_keys.end(), key) !=
           policy.mandatory_keys.end();
  };

  EnumerationCatalog out = catalog;
  // Merged synonyms sum their support; a row carrying both spellings counts twice.
  for (auto& [key, s] : out.support) s = std::min(s, row_count);
  auto drop = [&](const ColumnName& key, const std::string& reason) {
    out.entries.erase(key);
    out.dropped.push_back(DroppedColumn{key, reason});
  };

  std::vector<ColumnName> keys;
  for (const auto& [key, values] : out.entries) {
    (void)values;
    keys.push_back(key);
  }
  for (const auto& key : keys)
    if (!mandatory(key) && key.word_count() > policy.max_key_words) drop(key, "name_complexity");

  const double threshold = policy.min_row_support * static_cast<double>(row_count);
  for (const auto& key : keys)
    if (out.entries.count(key) && !mandatory(key) &&
        static_cast<double>(support_of(out, key)) < threshold)
      drop(key, "low_support");

  if (out.entries.size() > policy.max_columns) {
    std::vector<ColumnName> candidates;
    for (const auto& [key, values] : out.entries) {
      (void)values;
      if (!mandatory(key)) candidates.push_back(key);
    }
    // Lowest support first; then more words; then lexicographically larger.
    std::sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
      auto sa = support_of(out, a), sb = support_of(out, b);
      if (sa != sb) return sa < sb;
      if (a.word_count() != b.word_count()) return a.word_count() > b.word_count();
      return a > b;
    });
    for (const auto& key : candidates) {
      if (out.entries.size() <= policy.max_columns) break;
      drop(key, "column_cap");
    }
  }
  for (const auto& d : out.dropped) out.support.erase(d.name);
  return out;
}

EnumerationCatalog build_catalog(const ExtractionSet& extractions, const CapPolicy& policy) {
  return cap_columns(consolidate_keys(enumerate_catalog(extractions)), policy,
                     extractions.per_row.size());
}

}  // namespace dir
