#pragma once

#include <stdexcept>
#include <string>

namespace hyperds {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Array/grid shape disagreements.
struct ShapeError : Error {
  using Error::Error;
};

// Coordinate outside the domain rectangle.
struct DomainError : Error {
  using Error::Error;
};

// Bad or inconsistent configuration (unknown key, invalid value, mismatch).
struct ConfigError : Error {
  using Error::Error;
};

// More stations than available sample slots in a pixel.
struct CapacityError : Error {
  using Error::Error;
};

// Variable lacks a normalization spec.
struct SpecError : Error {
  using Error::Error;
};

// A loss over zero valid entries.
struct DegenerateLossError : Error {
  using Error::Error;
};

// Persistence errors, each failure mode distinct.
struct IoError : Error {
  using Error::Error;
};
struct VersionError : IoError {
  using IoError::IoError;
};
struct LengthError : IoError {
  using IoError::IoError;
};
struct MissingFileError : IoError {
  using IoError::IoError;
};
struct BundleSchemaError : IoError {
  using IoError::IoError;
};

}  // namespace hyperds
