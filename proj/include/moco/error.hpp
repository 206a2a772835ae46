//
// moco - Copyright 2026 The moco authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace moco {

class Error: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Parsing

class SyntaxError: public Error {
public:
  SyntaxError(const std::string &msg, std::size_t pos)
      : Error(msg + " at position " + std::to_string(pos)), pos_(pos) { }

  std::size_t position() const noexcept { return pos_; }

private:
  std::size_t pos_;
};

class UnsupportedFeature: public Error {
public:
  UnsupportedFeature(const std::string &msg, std::size_t pos)
      : Error(msg + " at position " + std::to_string(pos)), pos_(pos) { }

  std::size_t position() const noexcept { return pos_; }

private:
  std::size_t pos_;
};

// Featurization and file ingestion

class AlignmentError: public Error {
  using Error::Error;
};

class FormatError: public Error {
  using Error::Error;
};

class CountMismatch: public FormatError {
  using FormatError::FormatError;
};

// Models

class ShapeError: public Error {
  using Error::Error;
};

class DegenerateGeometry: public Error {
  using Error::Error;
};

class SequenceTooLong: public Error {
  using Error::Error;
};

class EmptyBatch: public Error {
  using Error::Error;
};

class ZeroProjection: public Error {
  using Error::Error;
};

class MissingCheckpoint: public Error {
  using Error::Error;
};

class IncompatibleCheckpoint: public Error {
  using Error::Error;
};

class MissingFusionParams: public Error {
  using Error::Error;
};

// Pipeline

class SingleClass: public Error {
  using Error::Error;
};

class DataError: public Error {
  using Error::Error;
};

class TrainingDiverged: public Error {
  using Error::Error;
};

class ConfigError: public Error {
  using Error::Error;
};

}  // namespace moco
