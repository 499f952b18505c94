#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace edl::csv {

/// Shortest decimal that round-trips through strtod ("nan" for NaN).
std::string format(double v);
std::vector<std::string> split(std::string_view line, char sep = ',');
double parse_double(const std::string& field);

}  // namespace edl::csv
