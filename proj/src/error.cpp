#include "ot2m/error.hpp"

namespace ot2m {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::DegenerateRotation: return "DegenerateRotation";
    case ErrorKind::GimbalDegenerate: return "GimbalDegenerate";
    case ErrorKind::MalformedTrack: return "MalformedTrack";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::FpsMismatch: return "FpsMismatch";
    case ErrorKind::SkeletonMismatch: return "SkeletonMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::EmptyCodebook: return "EmptyCodebook";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ContextOverflow: return "ContextOverflow";
    case ErrorKind::MaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::InsufficientPool: return "InsufficientPool";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::MalformedStream: return "MalformedStream";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "IoError";
  }
  return "Unknown";
}

}  // namespace ot2m
