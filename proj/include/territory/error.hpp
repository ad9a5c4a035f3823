#pragma once

#include <stdexcept>
#include <string>

namespace territory {

/// Base class for every error raised by the toolkit. `kind()` is the
/// machine-readable tag used in CLI error documents.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what, std::string field = {})
      : std::runtime_error(what), kind_(std::move(kind)), field_(std::move(field)) {}

  const std::string& kind() const noexcept { return kind_; }
  /// Name of the offending input field, empty when not applicable.
  const std::string& field() const noexcept { return field_; }

  /// Configuration-class errors map to CLI exit status 2, numerical ones to 1.
  virtual bool is_config_error() const noexcept { return false; }

 private:
  std::string kind_;
  std::string field_;
};

#define TERRITORY_DEFINE_ERROR(Name, IsConfig)                               \
  class Name : public Error {                                                \
   public:                                                                   \
    explicit Name(const std::string& what, std::string field = {})           \
        : Error(#Name, what, std::move(field)) {}                            \
    bool is_config_error() const noexcept override { return IsConfig; }      \
  };

TERRITORY_DEFINE_ERROR(ParamError, true)
TERRITORY_DEFINE_ERROR(GridError, true)
TERRITORY_DEFINE_ERROR(ConfigError, true)
TERRITORY_DEFINE_ERROR(ShapeError, true)
TERRITORY_DEFINE_ERROR(DimensionError, true)
TERRITORY_DEFINE_ERROR(DomainError, true)
TERRITORY_DEFINE_ERROR(InsufficientData, false)
TERRITORY_DEFINE_ERROR(StepError, false)
TERRITORY_DEFINE_ERROR(FitError, false)
TERRITORY_DEFINE_ERROR(SpectrumError, false)
TERRITORY_DEFINE_ERROR(SingularJacobian, false)
TERRITORY_DEFINE_ERROR(NoConvergence, false)
TERRITORY_DEFINE_ERROR(ResonanceError, false)

#undef TERRITORY_DEFINE_ERROR

}  // namespace territory
