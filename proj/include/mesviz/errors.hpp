#pragma once

#include <stdexcept>
#include <string>

namespace mesviz {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The byte source could not be read (missing file, I/O failure).
class IngestError : public Error {
 public:
  using Error::Error;
};

// The source is readable but not in the canonical log layout (e.g. bad header).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Arguments or configuration outside their valid domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Well-formed request whose data preconditions do not hold
// (no matching history, empty sample, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace mesviz
