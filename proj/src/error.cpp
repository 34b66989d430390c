#include "aerolabel/error.hpp"

namespace aerolabel {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RegistryInconsistent: return "RegistryInconsistent";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownSegmentId: return "UnknownSegmentId";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::EmptyRegistry: return "EmptyRegistry";
    case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
    case ErrorCode::InvalidStop: return "InvalidStop";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::OutOfProjectionBounds: return "OutOfProjectionBounds";
    case ErrorCode::DegenerateControlPoints: return "DegenerateControlPoints";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::NotGeoreferenced: return "NotGeoreferenced";
    case ErrorCode::PartialClassMap: return "PartialClassMap";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::ProjectLocked: return "ProjectLocked";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

}  // namespace aerolabel
