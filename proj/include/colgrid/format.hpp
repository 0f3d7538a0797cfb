#pragma once

#include <string>

namespace colgrid {

/// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace colgrid
