#pragma once

#include <stdexcept>
#include <string>

namespace histoseg {

// Error classes map one-to-one onto CLI exit codes.
enum class ErrorKind {
  InvalidArgument,
  Bracket,
  EmptyHistogram,
  Format,
  Io,
  ScaleUnderflow,
  UnresolvableClusters,
  SearchLimit,
  CountUnreachable,
  DegenerateMixture,
  EmptyCluster,
  DegenerateReferences,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code for an error class; 0 is reserved for success and 1 for
/// unexpected failures.
int exit_code(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace histoseg
