// Copyright 2026 The IQSD Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IQSD_ERROR_HPP_
#define IQSD_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iqsd {

// Root of every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters outside their valid domain (e.g. alpha > 2).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature or iterative solver failed to reach its tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double achieved_tolerance)
      : Error(what + " (achieved tolerance " + std::to_string(achieved_tolerance) + ")"),
        achieved_tolerance_(achieved_tolerance) {}

  double achieved_tolerance() const { return achieved_tolerance_; }

 private:
  double achieved_tolerance_;
};

// Input data cannot support the requested estimate (all-equal samples,
// empty lists, too few subjects, no mass inside the histogram range).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Mismatched lengths, edges or dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class SupportError : public Error {
 public:
  using Error::Error;
};

class CodecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed tabular input. Row and column are 1-based; 0 means "whole row"
// or "whole file".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " at row " + std::to_string(row) + ", column " + std::to_string(column)),
        row_(row),
        column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace iqsd

#endif  // IQSD_ERROR_HPP_
