#include "dgpcg/errors.hpp"

namespace dgpcg {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFiniteRecursion: return "NonFiniteRecursion";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyBank: return "EmptyBank";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::CacheMismatch: return "CacheMismatch";
    case Errc::TooSmall: return "TooSmall";
    case Errc::IoError: return "IoError";
    case Errc::MalformedFile: return "MalformedFile";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace dgpcg
