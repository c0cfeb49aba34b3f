#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace topoinv {

enum class ErrorKind {
  GapClosure,
  DimensionMismatch,
  NotInvariant,
  OddRank,
  UnknownModel,
  MissingParameter,
  ParseError,
  SchemaError,
  StepFailure,
  BranchAmbiguity,
  BadBaseBasis,
  SymmetrizationFailure,
  NotTRSFrame,
  NotTRS,
  NotAnExtension,
  BadDims,
  BadConfig,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::GapClosure: return "GapClosure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotInvariant: return "NotInvariant";
    case ErrorKind::OddRank: return "OddRank";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::MissingParameter: return "MissingParameter";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorKind::BadBaseBasis: return "BadBaseBasis";
    case ErrorKind::SymmetrizationFailure: return "SymmetrizationFailure";
    case ErrorKind::NotTRSFrame: return "NotTRSFrame";
    case ErrorKind::NotTRS: return "NotTRS";
    case ErrorKind::NotAnExtension: return "NotAnExtension";
    case ErrorKind::BadDims: return "BadDims";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Base class of every error raised by the library. The kind is stable and is
/// what the CLI maps onto exit codes and JSON error objects.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// The spectral gap at the Fermi level closes (or the occupied rank changes)
/// at the reported momentum.
class GapClosure : public Error {
 public:
  GapClosure(double k1, double k2, double gap)
      : Error(ErrorKind::GapClosure, describe(k1, k2, gap)), k1_(k1), k2_(k2), gap_(gap) {}

  double k1() const noexcept { return k1_; }
  double k2() const noexcept { return k2_; }
  double gap() const noexcept { return gap_; }

 private:
  static std::string describe(double k1, double k2, double gap) {
    std::ostringstream os;
    os << "gap " << gap << " at k = (" << k1 << ", " << k2 << ")";
    return os.str();
  }

  double k1_, k2_, gap_;
};

}  // namespace topoinv
