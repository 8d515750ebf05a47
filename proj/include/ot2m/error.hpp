#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ot2m {

enum class ErrorKind {
  ShapeMismatch,
  DegenerateRotation,
  GimbalDegenerate,
  MalformedTrack,
  TooShort,
  FpsMismatch,
  SkeletonMismatch,
  EmptyInput,
  NonFinite,
  NonFiniteLoss,
  EmptyCodebook,
  IndexOutOfRange,
  ContextOverflow,
  MaxLengthExceeded,
  NotPSD,
  InsufficientPool,
  InsufficientSamples,
  MissingFile,
  MalformedStream,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` carries the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ot2m
