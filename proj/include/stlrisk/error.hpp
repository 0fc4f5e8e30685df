#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stlrisk {

/// Coarse failure classes. The CLI maps these onto exit codes.
enum class ErrorCategory {
  Config,      // malformed or inconsistent input data
  Parse,       // formula or LP text could not be parsed
  Horizon,     // trace too short for the formula being evaluated
  Dimension,   // vector/matrix sizes disagree
  Domain,      // parameter outside its admissible range
  Infeasible,  // optimization problem has no solution
  Numeric,     // numerical breakdown (overflow, singular basis, ...)
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t position)
      : Error(ErrorCategory::Parse,
              message + " at offset " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace stlrisk
