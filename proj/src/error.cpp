#include "fedsim/error.hpp"

namespace fedsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kPastTime: return "PastTime";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kInvalidSize: return "InvalidSize";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kNoSuchCluster: return "NoSuchCluster";
    case ErrorCode::kNotReady: return "NotReady";
    case ErrorCode::kSelfPeering: return "SelfPeering";
    case ErrorCode::kAlreadyPeered: return "AlreadyPeered";
    case ErrorCode::kInvalidShare: return "InvalidShare";
    case ErrorCode::kNotPeered: return "NotPeered";
    case ErrorCode::kNoSuchNamespace: return "NoSuchNamespace";
    case ErrorCode::kNoSuchPod: return "NoSuchPod";
    case ErrorCode::kPolicyForbids: return "PolicyForbids";
    case ErrorCode::kInsufficientCapacity: return "InsufficientCapacity";
    case ErrorCode::kNoSuchService: return "NoSuchService";
    case ErrorCode::kNoSuchSession: return "NoSuchSession";
    case ErrorCode::kDuplicateLink: return "DuplicateLink";
    case ErrorCode::kSelfLink: return "SelfLink";
    case ErrorCode::kNoLink: return "NoLink";
    case ErrorCode::kExhaustedPrefixSpace: return "ExhaustedPrefixSpace";
    case ErrorCode::kUnmappedAddress: return "UnmappedAddress";
    case ErrorCode::kUnsupportedTransport: return "UnsupportedTransport";
    case ErrorCode::kUnresolvable: return "Unresolvable";
    case ErrorCode::kUnschedulable: return "Unschedulable";
    case ErrorCode::kPolicyInfeasible: return "PolicyInfeasible";
    case ErrorCode::kEmptySamples: return "EmptySamples";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

namespace {
std::string compose(ErrorCode code, const std::string& detail) {
  std::string msg(to_string(code));
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(detail) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace fedsim
