#pragma once

#include <stdexcept>
#include <string>

namespace normfield {

/// Base error for invalid input or violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the power-type fit when the modulus vanishes on the fit range.
class DegenerateModulus : public Error {
 public:
  DegenerateModulus() : Error("degenerate modulus") {}
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace normfield
