#pragma once

#include <string>

namespace bop {

// Shortest decimal text that reads back to the same double; NaN prints as NA.
std::string format_number(double v);

}  // namespace bop
