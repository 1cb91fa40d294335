#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pls {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file: wrong column count, bad number, truncated binary.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
      : Error(row ? what + " (row " + std::to_string(*row) + ")" : what), row_(row) {}

  std::optional<std::size_t> row() const noexcept { return row_; }

private:
  std::optional<std::size_t> row_;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
public:
  ValidationError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
      : Error(row ? what + " (row " + std::to_string(*row) + ")" : what), row_(row) {}

  std::optional<std::size_t> row() const noexcept { return row_; }

private:
  std::optional<std::size_t> row_;
};

/// Iterative solve did not reach the requested residual.
class SolverError : public Error {
public:
  SolverError(const std::string& what, double residual, int iterations)
      : Error(what + " (residual " + std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual), iterations_(iterations) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double residual_;
  int iterations_;
};

}  // namespace pls
