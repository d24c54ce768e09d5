#ifndef CLS_ERROR_HPP
#define CLS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace cls {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidAddressError : Error {
  using Error::Error;
};

struct UnknownInfoError : Error {
  using Error::Error;
};

struct UnboundVariableError : Error {
  using Error::Error;
};

struct StaleMatchError : Error {
  using Error::Error;
};

// Malformed rules, ecosystems or registry lookups.
struct ModelError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace cls

#endif
