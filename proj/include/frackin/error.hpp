#ifndef FRACKIN_ERROR_HPP
#define FRACKIN_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace frackin {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Result would not be representable as a finite double.
class OverflowError : public Error {
public:
  using Error::Error;
};

/// Grid or field shape is unsuitable (too small, wrong terminal, mismatch).
class GridError : public Error {
public:
  using Error::Error;
};

/// A series or iteration failed to reach its stopping criterion.
class ConvergenceError : public Error {
public:
  using Error::Error;
};

/// A numerical precondition gate (boundary vanishing, cross-form agreement)
/// did not hold.
class GateError : public Error {
public:
  using Error::Error;
};

/// Time stepping aborted: CFL-type bound violated or non-finite state.
class StabilityError : public Error {
public:
  StabilityError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

} // namespace frackin

#endif // FRACKIN_ERROR_HPP
