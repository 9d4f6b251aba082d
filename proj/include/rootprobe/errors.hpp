#pragma once

#include <stdexcept>
#include <string>

namespace rootprobe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (bad address, label too long, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bytes received from the network could not be parsed as a DNS message.
class MalformedMessage : public Error {
 public:
  using Error::Error;
};

/// Socket creation, bind or send failed. Timeouts are not transport errors.
class TransportError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

/// Requested latency moments cannot be realized by the model family.
class InfeasibleModel : public Error {
 public:
  using Error::Error;
};

/// Profile or campaign file could not be parsed. The message carries line/field context.
class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

class StartupError : public Error {
 public:
  using Error::Error;
};

}  // namespace rootprobe
