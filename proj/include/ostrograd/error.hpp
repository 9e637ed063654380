#pragma once

#include <stdexcept>
#include <string>

namespace ostrograd {

/// Broad failure classes. They map one-to-one onto the C API status codes.
enum class ErrorKind {
  Parse,       // malformed model or expression text
  Semantic,    // well-formed input that violates a model rule
  Argument,    // bad option or flag value
  Evaluation,  // unbound symbol, missing callback, non-finite value
  Singular,    // operation requires a regular Lagrangian or invertible matrix
  Convergence, // iterative solver did not converge
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ostrograd
