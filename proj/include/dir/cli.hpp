#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dir/store.hpp"
#include "dir/text2sql.hpp"

namespace dir {

// Entry point behind the `dir` executable. `args` excludes the program name.
// Returns 0 on success, 1 on user error (bad flags, missing files, invalid
// input), 2 on internal error.
int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

// Tab-separated header and rows, nulls printed as NULL.
std::string format_rows(const ResultSet& rows);
// What `dir query` prints: SQL, status, issues, repairs, then the rows.
std::string format_query(const GeneratedQuery& query, const std::optional<ResultSet>& rows);

}  // namespace dir
