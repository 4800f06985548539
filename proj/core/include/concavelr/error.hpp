#pragma once

#include <stdexcept>
#include <string>

namespace concavelr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or malformed input data (bad CSV, unsorted/duplicate abscissas,
/// non-finite values, out-of-domain evaluation, bad parameters).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The numerical engine could not produce a certified answer, e.g. the
/// active-set iteration cap was hit.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A critical-value table could not be found or parsed.
class TableError : public Error {
 public:
  using Error::Error;
};

}  // namespace concavelr
