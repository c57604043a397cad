#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eg2c {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct UnsupportedKind : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct CapacityExceeded : Error {
  using Error::Error;
};

// Instruction field does not fit its bit width.
struct RangeError : Error {
  using Error::Error;
};

struct WindowNotFull : Error {
  using Error::Error;
};

struct InvalidRate : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

enum class FaultCause : uint8_t {
  DecodeError,
  MissingHalt,
  BadProgram,
  CapacityOverflow,
  BufferOverflow,
};

const char* fault_cause_name(FaultCause cause);

// Raised when the simulated engine cannot continue; carries the program
// counter of the offending instruction.
struct Fault : Error {
  Fault(uint32_t pc, FaultCause cause, const std::string& detail);

  uint32_t pc;
  FaultCause cause;
};

}  // namespace eg2c
