#include "scos/types.hpp"

namespace scos {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::InfeasibleConfig: return "InfeasibleConfig";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace scos
