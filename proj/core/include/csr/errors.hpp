#pragma once

#include <stdexcept>
#include <string>

namespace csr {

// Base class for every error raised by the library. Each condition named in
// an operation contract gets its own type so callers can dispatch on it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class ChannelMismatch : public ShapeMismatch {
 public:
  using ShapeMismatch::ShapeMismatch;
};

class DegenerateRange : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NotNormalized : public Error {
 public:
  using Error::Error;
};

class ChipTooLarge : public Error {
 public:
  using Error::Error;
};

class CoverageGap : public Error {
 public:
  using Error::Error;
};

class TooSmall : public Error {
 public:
  using Error::Error;
};

class NotSquare : public Error {
 public:
  using Error::Error;
};

class NoTape : public Error {
 public:
  using Error::Error;
};

class NoDELayer : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class DivergedLoss : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Config-file parse failure; carries the 1-based line the parser choked on.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

}  // namespace csr
