#pragma once

#include <string>
#include <vector>

namespace fedsciml::csv {

/// Shortest round-trip decimal form of a double (17 significant digits),
/// identical text for identical bits — result CSVs are reproducible byte for
/// byte.
std::string format_double(double v);

std::vector<std::string> split(const std::string& line, char sep = ',');

} // namespace fedsciml::csv
