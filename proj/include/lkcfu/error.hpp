#pragma once

#include <stdexcept>
#include <string>

namespace lkcf {

// Mirrors lkcf_status in the C header; values are part of the ABI.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kRejectedInput = 2,
  kContractViolation = 3,
  kIo = 4,
  kFingerprintMismatch = 5,
  kDegenerateMetric = 6,
  kTrainingDiverged = 7,
  kCorruptFile = 8,
  kInternal = 99,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Input is well-formed but cannot be processed as given (e.g. image too small for a kernel).
class RejectedInput : public Error {
 public:
  explicit RejectedInput(const std::string& what) : Error(ErrorCode::kRejectedInput, what) {}
};

/// Caller broke a documented precondition (shape mismatch, wrong channel count).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(ErrorCode::kContractViolation, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::kInvalidArgument, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

class CorruptFile : public Error {
 public:
  explicit CorruptFile(const std::string& what) : Error(ErrorCode::kCorruptFile, what) {}
};

class FingerprintMismatch : public Error {
 public:
  explicit FingerprintMismatch(const std::string& what) : Error(ErrorCode::kFingerprintMismatch, what) {}
};

/// A metric whose definition is undefined for the input (zero-variance correlation, etc.).
class DegenerateMetric : public Error {
 public:
  explicit DegenerateMetric(const std::string& what) : Error(ErrorCode::kDegenerateMetric, what) {}
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, long step, long batch_id)
      : Error(ErrorCode::kTrainingDiverged, what), step_(step), batch_id_(batch_id) {}
  long step() const noexcept { return step_; }
  long batch_id() const noexcept { return batch_id_; }

 private:
  long step_;
  long batch_id_;
};

}  // namespace lkcf
