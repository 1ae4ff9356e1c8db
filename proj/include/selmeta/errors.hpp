#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selmeta {

/// Argument outside the mathematical domain of a function (p ∉ (0,1), u ≤ 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Fewer studies than the selection likelihood needs.
class DatasetTooSmall : public std::invalid_argument {
 public:
  explicit DatasetTooSmall(std::size_t n)
      : std::invalid_argument("n ≥ 3 required (got " + std::to_string(n) + " studies)"), n_(n) {}
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
};

/// Malformed optimizer configuration (empty or inverted bounds, bad F/CR, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// CSV input that cannot be mapped to studies. `row()` is 1-based over the file
/// lines, 0 when the problem is not tied to a row.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row = 0) : std::runtime_error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace selmeta
