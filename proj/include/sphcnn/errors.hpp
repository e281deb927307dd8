#pragma once

#include <stdexcept>
#include <string>

namespace sphcnn {

/// Invalid argument or violated precondition (bad bandwidth, |m| > l, ...).
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or truncated input data (files, configs, meshes).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or a numerical check that failed at runtime.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sphcnn
