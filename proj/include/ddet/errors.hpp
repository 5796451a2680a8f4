#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace ddet {

// Error families map 1:1 onto CLI exit codes (see README).
enum class ErrorClass : int {
  config = 1,    // bad configuration or flag values
  parse = 2,     // input files: missing, unreadable, malformed
  calib = 3,     // projection-matrix estimation / projection failures
  backend = 4,   // classifier backend failures
  internal = 5,  // contract violations inside the pipeline
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& msg) : std::runtime_error(msg), cls_(cls) {}
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  ErrorClass cls_;
};

// -- parse family ------------------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line_no = 0)
      : Error(ErrorClass::parse,
              line_no ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line_(line_no) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(ErrorClass::parse, msg) {}
};

class ValueError : public Error {
 public:
  explicit ValueError(const std::string& msg) : Error(ErrorClass::parse, msg) {}
};

class UnsupportedFormatError : public Error {
 public:
  explicit UnsupportedFormatError(const std::string& msg) : Error(ErrorClass::parse, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorClass::parse, msg) {}
};

// Frame-set mismatches and other bad eval inputs.
class InputError : public Error {
 public:
  explicit InputError(const std::string& msg) : Error(ErrorClass::parse, msg) {}
};

// -- calib family ------------------------------------------------------------

class ArityError : public Error {
 public:
  explicit ArityError(const std::string& msg) : Error(ErrorClass::calib, msg) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& msg) : Error(ErrorClass::calib, msg) {}
};

class BehindCameraError : public Error {
 public:
  explicit BehindCameraError(const std::string& msg) : Error(ErrorClass::calib, msg) {}
};

// -- config family -----------------------------------------------------------

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorClass::config, msg) {}
};

// -- backend family ----------------------------------------------------------

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& msg) : Error(ErrorClass::backend, msg) {}
};

class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& msg) : Error(ErrorClass::backend, msg) {}
};

class TimeoutError : public Error {
 public:
  explicit TimeoutError(const std::string& msg) : Error(ErrorClass::backend, msg) {}
};

// -- internal family ---------------------------------------------------------

class BoundsError : public Error {
 public:
  explicit BoundsError(const std::string& msg) : Error(ErrorClass::internal, msg) {}
};

class PlacementError : public Error {
 public:
  explicit PlacementError(const std::string& msg) : Error(ErrorClass::internal, msg) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& msg) : Error(ErrorClass::internal, msg) {}
};

}  // namespace ddet
