#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rmt {

/// Input outside an operation's domain (bad dimension, parameter out of range).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical routine failed to meet its own convergence criterion.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unresolvable experiment / ensemble configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// DBM integration could not keep the particles ordered.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, std::size_t left, std::size_t right)
      : std::runtime_error(what), left_(left), right_(right) {}

  std::size_t left_index() const noexcept { return left_; }
  std::size_t right_index() const noexcept { return right_; }

 private:
  std::size_t left_;
  std::size_t right_;
};

}  // namespace rmt
