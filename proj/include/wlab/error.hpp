#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wlab {

enum class ErrorKind {
  NonManifold,
  OpenBoundary,
  DegenerateFace,
  BadIndex,
  NonPositiveVolume,
  RankDeficientFit,
  DomainError,
  GeometryClash,
  CenterOnSurface,
  UmbilicPoint,
  NotNormalized,
  TargetOutOfRange,
  NoBracket,
  ConstantCurvature,
  SupportTouchesForbidden,
  ZeroField,
  DegenerateStep,
  IllConditioned,
  OutOfDomain,
  OriginNotUnique,
  DegeneratePair,
  BandTooWide,
  StitchMismatch,
  GraphSolveFailed,
  NoNegativeExcess,
  BisectionNoBracket,
  MissingBeta,
  ParseError,
  NonTriangleFace,
  IoError,
  InvalidArgument,
};

inline std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::NonManifold: return "NonManifold";
    case ErrorKind::OpenBoundary: return "OpenBoundary";
    case ErrorKind::DegenerateFace: return "DegenerateFace";
    case ErrorKind::BadIndex: return "BadIndex";
    case ErrorKind::NonPositiveVolume: return "NonPositiveVolume";
    case ErrorKind::RankDeficientFit: return "RankDeficientFit";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::GeometryClash: return "GeometryClash";
    case ErrorKind::CenterOnSurface: return "CenterOnSurface";
    case ErrorKind::UmbilicPoint: return "UmbilicPoint";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::TargetOutOfRange: return "TargetOutOfRange";
    case ErrorKind::NoBracket: return "NoBracket";
    case ErrorKind::ConstantCurvature: return "ConstantCurvature";
    case ErrorKind::SupportTouchesForbidden: return "SupportTouchesForbidden";
    case ErrorKind::ZeroField: return "ZeroField";
    case ErrorKind::DegenerateStep: return "DegenerateStep";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::OriginNotUnique: return "OriginNotUnique";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
    case ErrorKind::BandTooWide: return "BandTooWide";
    case ErrorKind::StitchMismatch: return "StitchMismatch";
    case ErrorKind::GraphSolveFailed: return "GraphSolveFailed";
    case ErrorKind::NoNegativeExcess: return "NoNegativeExcess";
    case ErrorKind::BisectionNoBracket: return "BisectionNoBracket";
    case ErrorKind::MissingBeta: return "MissingBeta";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonTriangleFace: return "NonTriangleFace";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Numerical failures map to exit code 3 in the CLI, everything else to 2.
inline bool is_numerical(ErrorKind k) {
  return k == ErrorKind::NoNegativeExcess || k == ErrorKind::BisectionNoBracket ||
         k == ErrorKind::IllConditioned || k == ErrorKind::NoBracket ||
         k == ErrorKind::GraphSolveFailed;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace wlab
