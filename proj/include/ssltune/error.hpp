#pragma once

#include <stdexcept>
#include <string>

namespace ssltune {

// Base of every error raised by the library. Callers that only need to
// distinguish "skip this input" from "abort the run" can catch the
// specific subclasses below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SSLTUNE_DEFINE_ERROR(Name)             \
  class Name : public Error {                  \
   public:                                     \
    using Error::Error;                        \
  }

SSLTUNE_DEFINE_ERROR(DecodeError);
SSLTUNE_DEFINE_ERROR(EncodeError);
SSLTUNE_DEFINE_ERROR(InvalidAngle);
SSLTUNE_DEFINE_ERROR(DegenerateImage);
SSLTUNE_DEFINE_ERROR(PointOutOfBounds);
SSLTUNE_DEFINE_ERROR(WindowOutOfBounds);
SSLTUNE_DEFINE_ERROR(RejectionExhausted);
SSLTUNE_DEFINE_ERROR(GrayscaleSource);
SSLTUNE_DEFINE_ERROR(EmptyRegion);
SSLTUNE_DEFINE_ERROR(RegionTooSmall);
SSLTUNE_DEFINE_ERROR(DuplicateId);
SSLTUNE_DEFINE_ERROR(FormatError);
SSLTUNE_DEFINE_ERROR(TemplateError);
SSLTUNE_DEFINE_ERROR(ConfigError);
SSLTUNE_DEFINE_ERROR(IoError);

#undef SSLTUNE_DEFINE_ERROR

// Manifest validation failure. Carries the offending record index (or -1
// for header-level problems) and the field name.
class SchemaError : public Error {
 public:
  SchemaError(long record, std::string field, const std::string& what)
      : Error(format(record, field, what)), record_(record), field_(std::move(field)) {}

  long record() const noexcept { return record_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(long record, const std::string& field, const std::string& what) {
    std::string s = record < 0 ? std::string("header") : "record " + std::to_string(record);
    if (!field.empty()) s += " field '" + field + "'";
    return s + ": " + what;
  }

  long record_;
  std::string field_;
};

}  // namespace ssltune
