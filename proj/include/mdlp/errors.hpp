#pragma once

#include <stdexcept>
#include <string>

namespace mdlp {

// Error codes shared between the C++ core and the C API. The numeric values
// are part of the shared-library ABI; append new codes at the end only.
enum class Errc : int {
  ok = 0,
  invalid_argument = 1,
  mode_not_guided = 2,
  no_root_found = 3,
  all_zero_coefficients = 4,
  empty_channel_set = 5,
  dimension_mismatch = 6,
  wrong_width = 7,
  all_zero_stack = 8,
  all_zero_image = 9,
  io_error = 10,
  bad_magic = 11,
  version_mismatch = 12,
  truncated_file = 13,
  invariant_violation = 14,
  bad_shape = 15,
  shape_mismatch = 16,
  length_mismatch = 17,
  non_finite_gradient = 18,
  fingerprint_mismatch = 19,
  no_convergence = 20,
  too_few_samples = 21,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::ok: return "Ok";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::mode_not_guided: return "ModeNotGuided";
    case Errc::no_root_found: return "NoRootFound";
    case Errc::all_zero_coefficients: return "AllZeroCoefficients";
    case Errc::empty_channel_set: return "EmptyChannelSet";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::wrong_width: return "WrongWidth";
    case Errc::all_zero_stack: return "AllZeroStack";
    case Errc::all_zero_image: return "AllZeroImage";
    case Errc::io_error: return "IoError";
    case Errc::bad_magic: return "BadMagic";
    case Errc::version_mismatch: return "VersionMismatch";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::bad_shape: return "BadShape";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::non_finite_gradient: return "NonFiniteGradient";
    case Errc::fingerprint_mismatch: return "FingerprintMismatch";
    case Errc::no_convergence: return "NoConvergence";
    case Errc::too_few_samples: return "TooFewSamples";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace mdlp
