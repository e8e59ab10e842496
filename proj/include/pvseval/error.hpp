#ifndef PVSEVAL_ERROR_HPP
#define PVSEVAL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace pvseval {

enum class Errc {
  // file format
  TooShort,
  BadHeaderSize,
  BadMagic,
  UnsupportedFormat,
  UnsupportedDimensionality,
  UnsupportedDatatype,
  InconsistentBitpix,
  TruncatedData,
  RangeOverflow,
  IoFailure,
  // geometry
  DimMismatch,
  EmptyMask,
  EmptyShell,
  // numerics and statistics
  EmptyInput,
  LengthMismatch,
  AllZeroDifferences,
  OutOfRange,
  ZeroRankSum,
  NoCommonSubjects,
  // harness
  EmptyManifest,
  TooFewSites,
  MissingFold,
  SchemaViolation,
  // phantom
  InfeasiblePacking,
  BadParameter,
};

constexpr std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::TooShort: return "TooShort";
    case Errc::BadHeaderSize: return "BadHeaderSize";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::UnsupportedDimensionality: return "UnsupportedDimensionality";
    case Errc::UnsupportedDatatype: return "UnsupportedDatatype";
    case Errc::InconsistentBitpix: return "InconsistentBitpix";
    case Errc::TruncatedData: return "TruncatedData";
    case Errc::RangeOverflow: return "RangeOverflow";
    case Errc::IoFailure: return "IoFailure";
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::EmptyShell: return "EmptyShell";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::AllZeroDifferences: return "AllZeroDifferences";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ZeroRankSum: return "ZeroRankSum";
    case Errc::NoCommonSubjects: return "NoCommonSubjects";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::TooFewSites: return "TooFewSites";
    case Errc::MissingFold: return "MissingFold";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::InfeasiblePacking: return "InfeasiblePacking";
    case Errc::BadParameter: return "BadParameter";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace pvseval

#endif  // PVSEVAL_ERROR_HPP
