#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace csync {

/// 8-byte hardware (MAC) address of a node.
struct Address {
  std::uint64_t value = 0;

  constexpr Address() = default;
  constexpr explicit Address(std::uint64_t v) : value(v) {}

  friend constexpr auto operator<=>(const Address&, const Address&) = default;
};

std::string to_string(Address a);

/// True (simulated) time in microseconds.
using SimTime = double;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario or config file could not be accepted.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string field = {})
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// A module invariant broke; the scenario must abort.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// The fault assumptions (quorum, bridge count, connectivity) do not hold.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace csync

template <>
struct std::hash<csync::Address> {
  std::size_t operator()(const csync::Address& a) const noexcept {
    return std::hash<std::uint64_t>{}(a.value);
  }
};
