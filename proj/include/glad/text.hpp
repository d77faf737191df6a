#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace glad {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Splits one CSV line. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field if it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

}  // namespace glad
