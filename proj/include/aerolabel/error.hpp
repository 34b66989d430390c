#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aerolabel {

// Error names double as the `code` field of API error payloads.
enum class ErrorCode {
  DimensionMismatch,
  RegistryInconsistent,
  InvalidArgument,
  UnknownSegmentId,
  DegeneratePolygon,
  EmptyRegistry,
  NonFiniteFeature,
  InvalidStop,
  UnknownClass,
  OutOfProjectionBounds,
  DegenerateControlPoints,
  SingularTransform,
  NotGeoreferenced,
  PartialClassMap,
  IoFailure,
  BadFormat,
  ProjectLocked,
  NotFound,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace aerolabel
