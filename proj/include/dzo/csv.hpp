// CSV output helpers. Doubles are printed with shortest round-trip
// formatting so rerunning a configuration reproduces files byte for byte.

#pragma once

#include <charconv>
#include <ostream>
#include <string>
#include <vector>

namespace dzo {

inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline void write_csv_row(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ",";
    out << format_double(values[i]);
  }
  out << "\n";
}

}  // namespace dzo
