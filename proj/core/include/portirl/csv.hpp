#ifndef PORTIRL_CSV_HPP
#define PORTIRL_CSV_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace portirl::csv {

/// Splits one CSV line on commas. Quoting is not supported; none of the
/// formats in this project need it.
std::vector<std::string_view> split(std::string_view line);

/// Reads a line, stripping a trailing '\r'. Returns false at end of input.
bool read_line(std::istream& in, std::string& line);

std::optional<std::int64_t> parse_int(std::string_view field);
std::optional<double> parse_double(std::string_view field);

/// Shortest decimal form that round-trips a double.
std::string format_double(double v);

}  // namespace portirl::csv

#endif  // PORTIRL_CSV_HPP
