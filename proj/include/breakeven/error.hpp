#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace breakeven {

enum class ErrorKind {
  NonFinite,
  NoConvergence,
  InvalidK,
  DimensionMismatch,
  InvalidArgument,
  BnBatchStatsUnsupported,
  BnUnsupported,
  ZeroDirection,
  NoBnLayer,
  DegenerateOffset,
  InsufficientData,
  RankDeficient,
  DegenerateProjection,
  InsufficientCheckpoints,
  CsvParse,
  InvalidParams,
  InvalidConfig,
  NeedTwoValues,
  Schema,
  Io,
  UnknownMetric,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised by config validation; carries the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::string reason)
      : Error(ErrorKind::Schema, field + ": " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

}  // namespace breakeven
