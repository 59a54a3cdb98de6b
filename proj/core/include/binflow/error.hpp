// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace binflow {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid distribution or model parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Discarded tail mass exceeds the allowed threshold for a support cap.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, int required_cap)
      : Error(what), required_cap_(required_cap) {}
  int required_cap() const noexcept { return required_cap_; }

 private:
  int required_cap_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The posterior over clean data has empty support.
class PosteriorError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Configuration parse or validation failure; `path` is the JSON field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace binflow
