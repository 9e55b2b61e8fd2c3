#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bintensor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ModeOutOfRange : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// A setting outside its valid range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A slab Y(:, j(mode), :) with no observed cell.
class EmptySlab : public Error {
 public:
  EmptySlab(std::size_t mode, std::size_t index)
      : Error("no observed cell in slab " + std::to_string(index) + " of mode " +
              std::to_string(mode)),
        mode(mode),
        index(index) {}
  std::size_t mode;
  std::size_t index;
};

// X^T W X could not be factorized even after jitter. When raised from a mode
// update, `mode` and `row` identify the failing regression (0-based).
class SingularDesign : public Error {
 public:
  explicit SingularDesign(const std::string& what) : Error(what) {}
  SingularDesign(const std::string& what, std::size_t mode, std::size_t row)
      : Error(what + " (mode " + std::to_string(mode) + ", row " + std::to_string(row) + ")"),
        mode(mode),
        row(row),
        located(true) {}
  std::size_t mode = 0;
  std::size_t row = 0;
  bool located = false;
};

// Every observed Fisher weight underflowed: all cells sit deep in a tail of
// the link, so X^T W X is numerically zero.
class VanishingInformation : public SingularDesign {
 public:
  explicit VanishingInformation(const std::string& what) : SingularDesign(what) {}
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class AllInfeasible : public Error {
 public:
  using Error::Error;
};

class DegenerateColumn : public Error {
 public:
  DegenerateColumn(std::size_t mode, std::size_t column)
      : Error("zero column " + std::to_string(column) + " in mode " + std::to_string(mode)),
        mode(mode),
        column(column) {}
  std::size_t mode;
  std::size_t column;
};

class AllStartsFailed : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

}  // namespace bintensor
