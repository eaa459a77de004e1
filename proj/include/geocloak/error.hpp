#pragma once

#include <stdexcept>
#include <string>

namespace geocloak {

// Base of every error raised by the library. The CLI maps the three
// families below onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or flags (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bad, missing or inconsistent input data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

class IngestionError : public DataError {
 public:
  using DataError::DataError;
};

class FileNotFoundError : public IngestionError {
 public:
  using IngestionError::IngestionError;
};

class MalformedHeaderError : public IngestionError {
 public:
  using IngestionError::IngestionError;
};

class TruncatedDataError : public IngestionError {
 public:
  using IngestionError::IngestionError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

// Input too small or featureless for the requested computation.
class DegenerateInputError : public DataError {
 public:
  using DataError::DataError;
};

// A metric whose denominator is empty.
class UndefinedMetricError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace geocloak
