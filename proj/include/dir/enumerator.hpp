#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dir/model.hpp"

namespace dir {

struct CapPolicy {
  std::size_t max_columns = 2048;
  // Underscore-separated words allowed in a column name.
  std::size_t max_key_words = 2;
  // Fraction of rows that must carry a key.
  double min_row_support = 0.05;
  std::vector<ColumnName> mandatory_keys;

  void validate() const;
};

// Sorted distinct values per key, plus per-key row support.
EnumerationCatalog enumerate_catalog(const ExtractionSet& extractions);

// Canonical form used to detect synonymous keys: abbreviations expanded and
// the final token singularized.
std::string canonical_key(const ColumnName& key);

// Merges keys with the same canonical form. Idempotent.
EnumerationCatalog consolidate_keys(const EnumerationCatalog& catalog);

// Drops complex names, then rarely supported keys, then the least supported
// keys until max_columns holds. Mandatory keys are never dropped and must be
// present (GroundingError otherwise).
EnumerationCatalog cap_columns(const EnumerationCatalog& catalog, const CapPolicy& policy,
                               std::size_t row_count);

// enumerate -> consolidate -> cap.
EnumerationCatalog build_catalog(const ExtractionSet& extractions, const CapPolicy& policy);

}  // namespace dir
