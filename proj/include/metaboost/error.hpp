#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace metaboost {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class ImputationError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class BalanceError : public Error {
 public:
  using Error::Error;
};

class NeighborError : public Error {
 public:
  using Error::Error;
};

class ExhaustionError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class SearchError : public Error {
 public:
  using Error::Error;
};

class SummaryError : public Error {
 public:
  using Error::Error;
};

class RiskError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A stage needs an artifact that an earlier stage has not written.
class DependencyError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause, bool partial)
      : Error("stage " + stage + ": " + cause), stage_(std::move(stage)), partial_(partial) {}
  const std::string& stage() const { return stage_; }
  /// True when earlier stages completed and their artifacts are on disk.
  bool partial() const { return partial_; }

 private:
  std::string stage_;
  bool partial_;
};

}  // namespace metaboost
