#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgpcg {

enum class Errc {
  NotSymmetric,
  NotPositiveDefinite,
  DimensionMismatch,
  NonFiniteRecursion,
  EmptyDataset,
  EmptyBank,
  ShapeMismatch,
  CacheMismatch,
  TooSmall,
  IoError,
  MalformedFile,
  InvalidConfig,
};

std::string_view to_string(Errc code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (tests, the CLI) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dgpcg
