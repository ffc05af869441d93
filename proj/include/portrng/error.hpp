#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace portrng {

enum class ErrorCode {
  unsupported_engine,
  invalid_range,
  invalid_parameter,
  allocation_failure,
  unknown_buffer,
  unknown_event,
  undeclared_buffer,
  kernel_panic,
  pending_writes,
  empty_samples,
  non_positive_time,
  empty_platform_set,
  config_error,
  schema_mismatch,
  no_overlapping_keys,
  invalid_counts,
  missing_parameterization,
  invalid_parameterization,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::unsupported_engine: return "UnsupportedEngine";
    case ErrorCode::invalid_range: return "InvalidRange";
    case ErrorCode::invalid_parameter: return "InvalidParameter";
    case ErrorCode::allocation_failure: return "AllocationFailure";
    case ErrorCode::unknown_buffer: return "UnknownBuffer";
    case ErrorCode::unknown_event: return "UnknownEvent";
    case ErrorCode::undeclared_buffer: return "UndeclaredBuffer";
    case ErrorCode::kernel_panic: return "KernelPanic";
    case ErrorCode::pending_writes: return "PendingWrites";
    case ErrorCode::empty_samples: return "EmptySamples";
    case ErrorCode::non_positive_time: return "NonPositiveTime";
    case ErrorCode::empty_platform_set: return "EmptyPlatformSet";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::no_overlapping_keys: return "NoOverlappingKeys";
    case ErrorCode::invalid_counts: return "InvalidCounts";
    case ErrorCode::missing_parameterization: return "MissingParameterization";
    case ErrorCode::invalid_parameterization: return "InvalidParameterization";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by TaskGraph::run when a kernel throws; carries the failing task.
class KernelPanic : public Error {
 public:
  KernelPanic(std::uint64_t task_id, const std::string& what)
      : Error(ErrorCode::kernel_panic, "task " + std::to_string(task_id) + ": " + what),
        task_id_(task_id) {}

  std::uint64_t task_id() const noexcept { return task_id_; }

 private:
  std::uint64_t task_id_;
};

}  // namespace portrng
