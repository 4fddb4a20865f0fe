#pragma once

#include <stdexcept>
#include <string>

namespace latmech {

/// Base class for all latmech exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- network construction ---

class NetworkError : public Error {
 public:
  using Error::Error;
};

class DuplicateBondError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

class SelfLoopError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

class ZeroLengthBondError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

class DisconnectedGraphError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

// --- material law ---

class NonFiniteExtensionError : public Error {
 public:
  using Error::Error;
};

/// Raised by the strict tangent query at an exact regime boundary of an
/// unsmoothed law. The documented convention for assembly is the left-limit
/// slope; see tangent_modulus_left.
class KinkAmbiguityError : public Error {
 public:
  using Error::Error;
};

class SmoothingDisabledError : public Error {
 public:
  using Error::Error;
};

class DegenerateBondError : public Error {
 public:
  using Error::Error;
};

// --- scenario parsing / io ---

class ParseError : public Error {
 public:
  using Error::Error;
};

class UnknownNodeIdError : public ParseError {
 public:
  using ParseError::ParseError;
};

class UnknownLawIdError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A node appears both in the prescribed list and in the loads list.
class ConflictingConstraintError : public ParseError {
 public:
  using ParseError::ParseError;
};

class InvalidGridDimensionsError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace latmech
