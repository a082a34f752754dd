#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gabp {

using Scalar = double;
using Index = Eigen::Index;
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that could not be read or parsed (bad file, bad JSON, bad matrix dims).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition was violated (non-pd argument, singular block...).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gabp
