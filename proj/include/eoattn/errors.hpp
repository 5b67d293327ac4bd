#pragma once

#include <stdexcept>
#include <string>

namespace eoattn {

// Error categories map to CLI exit codes: ConfigError -> 1, NumericError -> 2.
enum class ErrorCode {
  // curve fitting / calibration
  NonConvergence,
  DegenerateData,
  DegenerateRange,
  DegenerateDomain,
  WindowOutOfRange,
  // activations
  EmptyInput,
  MissingRng,
  // tensor / training
  ShapeMismatch,
  IndexOutOfRange,
  Divergence,
  // signal processing
  NonIntegralSps,
  CutoffAboveNyquist,
  ZeroFactor,
  EmptyWindow,
  LengthMismatch,
  ZeroReference,
  NonUniformSampling,
  // hw model
  UnsupportedN,
  // io / config
  ParseError,
  ConfigError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

  bool is_config_error() const {
    return code_ == ErrorCode::ParseError || code_ == ErrorCode::ConfigError;
  }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::DegenerateDomain: return "DegenerateDomain";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingRng: return "MissingRng";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::NonIntegralSps: return "NonIntegralSps";
    case ErrorCode::CutoffAboveNyquist: return "CutoffAboveNyquist";
    case ErrorCode::ZeroFactor: return "ZeroFactor";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::UnsupportedN: return "UnsupportedN";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace eoattn
