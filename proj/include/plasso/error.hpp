#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plasso {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  NoFailures,
  NonFinite,
  NegativeWeight,
  ConstantColumn,
  AlphaOne,
  FoldWithoutFailures,
  PatternNeedsDims,
  OneClassOnly,
  SchemaMismatch,
  MissingColumn,
  ParseError,
  IoError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NoFailures: return "NoFailures";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::ConstantColumn: return "ConstantColumn";
    case Errc::AlphaOne: return "AlphaOne";
    case Errc::FoldWithoutFailures: return "FoldWithoutFailures";
    case Errc::PatternNeedsDims: return "PatternNeedsDims";
    case Errc::OneClassOnly: return "OneClassOnly";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace plasso
