#pragma once

#include <stdexcept>
#include <string>

namespace sonicforge {

/// Exit-code class carried by every library error. The CLI maps these onto
/// its stable exit codes: 1 for constraint failures, 2 for I/O or format.
enum class ErrorClass { Constraint = 1, Io = 2 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what)
      : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define SONICFORGE_DEFINE_ERROR(Name, Cls)                              \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
  };

SONICFORGE_DEFINE_ERROR(FormatError, Io)
SONICFORGE_DEFINE_ERROR(UnsupportedError, Io)
SONICFORGE_DEFINE_ERROR(IoError, Io)
SONICFORGE_DEFINE_ERROR(IntegrityError, Io)
SONICFORGE_DEFINE_ERROR(ArgumentError, Constraint)
SONICFORGE_DEFINE_ERROR(BelowGateError, Constraint)
SONICFORGE_DEFINE_ERROR(SilenceError, Constraint)
SONICFORGE_DEFINE_ERROR(NoOnsetError, Constraint)
SONICFORGE_DEFINE_ERROR(PackingError, Constraint)
SONICFORGE_DEFINE_ERROR(ConfigError, Constraint)
SONICFORGE_DEFINE_ERROR(PoolExhaustedError, Constraint)
SONICFORGE_DEFINE_ERROR(InputError, Constraint)

#undef SONICFORGE_DEFINE_ERROR

}  // namespace sonicforge
