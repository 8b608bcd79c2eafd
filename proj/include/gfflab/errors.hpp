#pragma once

#include <stdexcept>
#include <string>

namespace gfflab {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-readable tag used in CLI error reports.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
};

#define GFFLAB_DEFINE_ERROR(Name, tag)                 \
  class Name : public Error {                          \
   public:                                             \
    using Error::Error;                                \
    const char* kind() const noexcept override { return tag; } \
  };

// Bad user input: grid sizes, parameters out of range, malformed config.
GFFLAB_DEFINE_ERROR(ConfigError, "config")
// A shape (mask, circle, ball) does not fit the grid or is degenerate.
GFFLAB_DEFINE_ERROR(GeometryError, "geometry")
// The lattice is too coarse to resolve the requested circle or scale.
GFFLAB_DEFINE_ERROR(ResolutionError, "resolution")
// A linear solve or factorization failed.
GFFLAB_DEFINE_ERROR(NumericalError, "numerical")
// A vertex or set lies outside the domain of the operation.
GFFLAB_DEFINE_ERROR(DomainError, "domain")
// No path exists between the requested endpoints.
GFFLAB_DEFINE_ERROR(NoPathError, "no_path")
// Malformed or truncated file contents.
GFFLAB_DEFINE_ERROR(ParseError, "parse")

#undef GFFLAB_DEFINE_ERROR

}  // namespace gfflab
