#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gosc {

// Base for every error the library reports. Messages name the offending
// field, line or identifier so the CLI can print them verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Remote scorer could not be reached (connection refused, broken pipe,
// timeout). Retried by the client before surfacing.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Remote scorer answered, but the answer violates the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Non-fatal notes collected while building corpora, tasks or training data.
using Warnings = std::vector<std::string>;

}  // namespace gosc
