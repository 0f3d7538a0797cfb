#include "colgrid/format.hpp"

#include <charconv>

namespace colgrid {

std::string format_double(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace colgrid
