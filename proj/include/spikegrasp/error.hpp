#pragma once

#include <stdexcept>
#include <string>

namespace spikegrasp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Array dimensions that do not agree with a network or buffer layout.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values propagating through the simulation or the optimizer.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Invalid or unreadable experiment configuration. `line` is 1-based, 0 when
// the problem is not tied to a specific line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace spikegrasp
