#include "tcf/error.hpp"

namespace tcf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DegenerateTriangle: return "DegenerateTriangle";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::StageCollapse: return "StageCollapse";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NoTrueInliers: return "NoTrueInliers";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MixedColumnCount: return "MixedColumnCount";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace tcf
