#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tgm {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  UnresolvedReference,
  UnknownSchema,
  UnknownElement,
  HeterogeneousLeaf,
  ArityMismatch,
  UnsupportedConstruct,
  UnknownCorrespondence,
  ConflictingAccept,
  TypeMismatch,
  NonComposable,
  TranslateMiss,
  PolicyFail,
  TargetInvalid,
  UnknownTarget,
  VersionMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

// All engine failures surface as tgm::Error; code() is the stable
// machine-readable part, what() carries the locus.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tgm
