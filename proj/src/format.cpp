#include "cicw/format.hpp"

#include <charconv>
#include <cmath>

namespace cicw {

std::string shortest(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, result.ptr);
}

std::string decimal(double x) {
  std::string s = shortest(x);
  if (std::isfinite(x) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string join(std::span<const double> values, const std::string& sep, bool keep_point) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += keep_point ? decimal(values[i]) : shortest(values[i]);
  }
  return out;
}

}  // namespace cicw
