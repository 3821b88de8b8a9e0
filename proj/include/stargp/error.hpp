#pragma once

#include <stdexcept>
#include <string>

namespace stargp {

enum class ErrorKind {
  kConfig,     // bad flags, invalid parameter domain
  kData,       // unparseable input, degenerate coordinates, misalignment
  kNumerical,  // Cholesky failure, divergence, non-finite objective
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(const std::string& what) {
  return Error(ErrorKind::kConfig, what);
}
inline Error data_error(const std::string& what) {
  return Error(ErrorKind::kData, what);
}
inline Error numerical_error(const std::string& what) {
  return Error(ErrorKind::kNumerical, what);
}

}  // namespace stargp
