#pragma once

#include <span>
#include <string>

namespace cicw {

/// Shortest round-trip decimal form ("0.5", "1e-12", "nan", "inf").
std::string shortest(double x);

/// As `shortest`, but integral values keep a trailing ".0" ("1.0", "0.0").
std::string decimal(double x);

std::string join(std::span<const double> values, const std::string& sep, bool keep_point = true);

}  // namespace cicw
