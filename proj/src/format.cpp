#include "bop/format.hpp"

#include <charconv>
#include <cmath>

namespace bop {

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace bop
