#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eokfair {

/// Failure categories raised by the library. Each public operation documents
/// which of these it can produce.
enum class ErrorKind {
  validation,      // malformed spec or config value
  size,            // too few samples for the requested estimator
  dimension,       // row/column mismatch between inputs
  domain,          // input outside a kernel's admissible domain
  parameter,       // numeric parameter out of range
  stratification,  // an S- or label-group is empty
  empty_cell,      // an (s, y) cell is empty
  normalization,   // witness normalization undefined
  inapplicable,    // a verifier precondition does not hold for this data
  unsupported,     // operation not defined for this kernel family
  training,        // divergence during optimization
  config,          // kernel/config combination rejected
  io               // file read/write failure
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::size: return "size";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::domain: return "domain";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::stratification: return "stratification";
    case ErrorKind::empty_cell: return "empty_cell";
    case ErrorKind::normalization: return "normalization";
    case ErrorKind::inapplicable: return "inapplicable";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::training: return "training";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const char* what) {
  if (!ok) throw Error(kind, what);
}

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace eokfair
