#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace riskopt {

// Bad argument or precondition violation at an API boundary.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorization or solve that failed even after the jitter policy ran out.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, history or result file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted(const std::string& what, long remaining)
      : std::runtime_error(what), remaining_(remaining) {}
  long remaining() const noexcept { return remaining_; }

 private:
  long remaining_;
};

// External simulator failure; output holds whatever the process wrote.
class SimulatorError : public std::runtime_error {
 public:
  SimulatorError(const std::string& what, std::string output = {})
      : std::runtime_error(what), output_(std::move(output)) {}
  const std::string& output() const noexcept { return output_; }

 private:
  std::string output_;
};

// A response line that does not follow the protocol.
class ProtocolError : public SimulatorError {
 public:
  using SimulatorError::SimulatorError;
};

}  // namespace riskopt
