#pragma once

#include <stdexcept>
#include <string>

namespace hihmc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A non-positive pivot was met during Cholesky factorization.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Jitter escalation in repair_to_pd exceeded its ceiling.
class RepairFailed : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVariance : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hihmc
