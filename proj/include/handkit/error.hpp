#pragma once

#include <cstddef>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>

namespace handkit {

enum class ErrorKind {
  MalformedFile,
  EmptyMesh,
  DegenerateVertex,
  DegenerateGeometry,
  SchemaViolation,
  ZeroReference,
  BoneTooShort,
  Containment,
  GapTooSmall,
  PlacementFailure,
  MalformedTable,
  NonMonotoneStrain,
  GridOutOfRange,
  EmptyOverlap,
  NonConvergence,
  InvalidArgument,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::EmptyMesh: return "EmptyMesh";
    case ErrorKind::DegenerateVertex: return "DegenerateVertex";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::ZeroReference: return "ZeroReference";
    case ErrorKind::BoneTooShort: return "BoneTooShort";
    case ErrorKind::Containment: return "Containment";
    case ErrorKind::GapTooSmall: return "GapTooSmall";
    case ErrorKind::PlacementFailure: return "PlacementFailure";
    case ErrorKind::MalformedTable: return "MalformedTable";
    case ErrorKind::NonMonotoneStrain: return "NonMonotoneStrain";
    case ErrorKind::GridOutOfRange: return "GridOutOfRange";
    case ErrorKind::EmptyOverlap: return "EmptyOverlap";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library. The kind is
/// stable and machine-checkable; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// Parse failure carrying the byte offset (binary input) or 1-based line
/// number (text input) at which the problem was detected.
class MalformedFileError : public Error {
 public:
  MalformedFileError(const std::string& message, std::optional<std::size_t> byte_offset,
                     std::optional<std::size_t> line)
      : Error(ErrorKind::MalformedFile, decorate(message, byte_offset, line)),
        byte_offset_(byte_offset),
        line_(line) {}

  std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  static std::string decorate(const std::string& message, std::optional<std::size_t> byte_offset,
                              std::optional<std::size_t> line) {
    if (line) return message + " (line " + std::to_string(*line) + ")";
    if (byte_offset) return message + " (byte " + std::to_string(*byte_offset) + ")";
    return message;
  }

  std::optional<std::size_t> byte_offset_;
  std::optional<std::size_t> line_;
};

/// Raised when a vertex normal cannot be defined; carries the vertex index.
class DegenerateVertexError : public Error {
 public:
  explicit DegenerateVertexError(std::size_t vertex)
      : Error(ErrorKind::DegenerateVertex,
              "vertex " + std::to_string(vertex) + " has a vanishing normal"),
        vertex_(vertex) {}

  std::size_t vertex() const noexcept { return vertex_; }

 private:
  std::size_t vertex_;
};

namespace detail {

inline std::string format_float(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace detail

}  // namespace handkit
