#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace loopkit {

using Cell = std::variant<std::string, double, std::int64_t, bool>;

// Tabular result of one CLI command. CSV output starts with "# key=value"
// header lines (the timestamp line is optional) followed by the column row.
struct Report {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  bool pass = true;
};

/// Shortest decimal string that reads back to the same double; inf, -inf, nan.
std::string format_number(double v);

void write_csv(const Report& report, std::ostream& out, bool timestamp);
/// JSON report; non-finite numbers become the strings "inf", "-inf", "nan".
void write_json(const Report& report, std::ostream& out, bool timestamp);

/// UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

}  // namespace loopkit
