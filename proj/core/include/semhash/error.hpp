#pragma once

#include <stdexcept>
#include <string>

namespace semhash {

enum class ErrorKind {
  shape,
  usage,
  config,
  validation,
  parse,
  incompatible,
  numeric,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The kind selects the
/// CLI exit code (see tools/commands.hpp).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SEMHASH_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

SEMHASH_DEFINE_ERROR(ShapeError, shape)
SEMHASH_DEFINE_ERROR(UsageError, usage)
SEMHASH_DEFINE_ERROR(ConfigError, config)
SEMHASH_DEFINE_ERROR(ValidationError, validation)
SEMHASH_DEFINE_ERROR(ParseError, parse)
SEMHASH_DEFINE_ERROR(IncompatibleError, incompatible)
SEMHASH_DEFINE_ERROR(NumericError, numeric)
SEMHASH_DEFINE_ERROR(IoError, io)

#undef SEMHASH_DEFINE_ERROR

}  // namespace semhash
