#pragma once

#include <stdexcept>
#include <string>

namespace aatr {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Usage,      // bad command line
  Config,     // malformed or inconsistent configuration
  Io,         // file system failures
  Format,     // a file exists but its content is not valid
  Contract,   // caller broke a precondition (binary input expected, ...)
  Shape,      // mismatched volume dimensions or vector lengths
  NotFound,   // requested label/object does not exist
  Domain,     // numeric argument outside its admissible range
  Training,   // degenerate training data
  Placement,  // phantom object could not be placed
  Undefined,  // metric undefined for the given inputs (e.g. zero threats)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace aatr
