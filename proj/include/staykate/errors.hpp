#pragma once

#include <stdexcept>
#include <string>

namespace staykate {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, schema violations, inconsistent config.
// The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Replay mode asked for a response that was never recorded. Exit code 3.
class CacheMissError : public Error {
 public:
  explicit CacheMissError(std::string request_key)
      : Error("replay cache miss for request_key " + request_key),
        request_key_(std::move(request_key)) {}

  const std::string& request_key() const noexcept { return request_key_; }

 private:
  std::string request_key_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class AuthenticationError : public TransportError {
 public:
  using TransportError::TransportError;
};

class RateLimitError : public TransportError {
 public:
  using TransportError::TransportError;
};

}  // namespace staykate
