#include "permcd/output.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

#ifndef PERMCD_BUILD_ID
#define PERMCD_BUILD_ID "unknown"
#endif

namespace permcd {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header)
    : os_(os), columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) throw std::logic_error("CsvWriter: column count mismatch");
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) os_ << ',';
    os_ << csv_field(fields[k]);
  }
  os_ << '\n';
}

std::string_view build_id() { return PERMCD_BUILD_ID; }

}  // namespace permcd
