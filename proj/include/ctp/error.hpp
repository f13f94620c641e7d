#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctp {

enum class Errc {
  InvalidDuration,
  InvalidConfig,
  WorkerSpawnFailure,
  AllocationFailure,
  UnevenPartition,
  DirectIoUnsupported,
  FileCreationFailure,
  TargetLaunchFailure,
  TargetNonZeroExit,
  StorageFailure,
  IoFailure,
  ParseFailure,
  VersionMismatch,
  InsufficientData,
  NonFiniteInput,
  NonFiniteLoss,
  NonFiniteOutput,
  EmptyInput,
  ZeroMeasured,
  DegenerateGram,
  NonPositiveTarget,
  SpawnFailure,
  HorizonExceeded,
  UsageError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidDuration: return "InvalidDuration";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::WorkerSpawnFailure: return "WorkerSpawnFailure";
    case Errc::AllocationFailure: return "AllocationFailure";
    case Errc::UnevenPartition: return "UnevenPartition";
    case Errc::DirectIoUnsupported: return "DirectIoUnsupported";
    case Errc::FileCreationFailure: return "FileCreationFailure";
    case Errc::TargetLaunchFailure: return "TargetLaunchFailure";
    case Errc::TargetNonZeroExit: return "TargetNonZeroExit";
    case Errc::StorageFailure: return "StorageFailure";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::NonFiniteInput: return "NonFiniteInput";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::NonFiniteOutput: return "NonFiniteOutput";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ZeroMeasured: return "ZeroMeasured";
    case Errc::DegenerateGram: return "DegenerateGram";
    case Errc::NonPositiveTarget: return "NonPositiveTarget";
    case Errc::SpawnFailure: return "SpawnFailure";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace ctp
