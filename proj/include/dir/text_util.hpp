#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dir::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Lowercase alphanumeric words; everything else separates.
std::vector<std::string> words(std::string_view s);

// Crude English singular for snake_case heads and query tokens.
std::string singular(std::string_view word);
// Small English function-word list used by routing and the lexical baseline.
bool is_stopword(std::string_view word);
// words() minus stopwords.
std::vector<std::string> content_words(std::string_view s);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
// Whole-string decimal parse; rejects trailing garbage, inf and nan.
bool parse_number(std::string_view s, double& out);

// Optimal-string-alignment distance (adjacent transpositions cost 1).
std::size_t edit_distance(std::string_view a, std::string_view b);
// edit_distance / max(|a|, |b|); 0 for two empty strings.
double normalized_edit_distance(std::string_view a, std::string_view b);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace dir::text
