#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace activegp::csv {

/// RFC 4180 field quoting.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Rows of fields; accepts quoted fields, embedded quotes and CRLF.
std::vector<std::vector<std::string>> parse(std::string_view text);

/// Shortest representation that round-trips, '.' decimal point regardless
/// of locale.
std::string format_double(double v);
double parse_double(std::string_view s);

} // namespace activegp::csv
