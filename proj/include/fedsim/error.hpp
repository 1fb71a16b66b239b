#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedsim {

enum class ErrorCode {
  kPastTime,
  kInvalidDistribution,
  kInvalidSize,
  kDuplicateName,
  kNoSuchCluster,
  kNotReady,
  kSelfPeering,
  kAlreadyPeered,
  kInvalidShare,
  kNotPeered,
  kNoSuchNamespace,
  kNoSuchPod,
  kPolicyForbids,
  kInsufficientCapacity,
  kNoSuchService,
  kNoSuchSession,
  kDuplicateLink,
  kSelfLink,
  kNoLink,
  kExhaustedPrefixSpace,
  kUnmappedAddress,
  kUnsupportedTransport,
  kUnresolvable,
  kUnschedulable,
  kPolicyInfeasible,
  kEmptySamples,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the simulator surface as this exception; the
// code identifies the contract violation, the message carries detail (for
// ConfigError it is the offending field path).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail = {});

}  // namespace fedsim
