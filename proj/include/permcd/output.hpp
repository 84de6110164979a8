#pragma once

// Deterministic text output: shortest round-trip doubles, LF line endings,
// '.' decimal point regardless of locale.

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace permcd {

/// Shortest representation that parses back to the same double; "nan",
/// "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view s);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
  std::size_t columns_;
};

/// Identifier of the source revision this binary was built from.
std::string_view build_id();

}  // namespace permcd
