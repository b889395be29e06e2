#pragma once

#include <stdexcept>
#include <string>

namespace dpfpca {

// Invalid or inconsistent input data (grid mismatch, ragged CSV, ...).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (rejection sampler starved, singular system, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dpfpca
