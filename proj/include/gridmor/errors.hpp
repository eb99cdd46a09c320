#pragma once

#include <stdexcept>
#include <string>

namespace gridmor {

// Validation problems: bad files, broken invariants, dimension mismatches.
class validation_error : public std::runtime_error {
public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures: singular solves, non-convergence, unstable pencils.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gridmor
