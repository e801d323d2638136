#pragma once

#include <stdexcept>
#include <string>

namespace normest {

// Error categories map onto CLI exit codes: DataError -> 2, NumericError -> 3.
// Precondition violations (bad shapes, bad arguments) use std::invalid_argument.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr double kPi = 3.14159265358979323846;

inline double deg_from_rad(double r) { return r * (180.0 / kPi); }
inline double rad_from_deg(double d) { return d * (kPi / 180.0); }

}  // namespace normest
