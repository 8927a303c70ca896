#pragma once

#include <stdexcept>
#include <string>

namespace street {

// Base for everything this library throws on bad data or bad usage.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape disagreement between operands or against an op's contract.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error("shape: " + msg) {}
};

// NaN or Inf produced by a forward operation.
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& msg) : Error("non-finite: " + msg) {}
};

// Misuse of the differentiation tape (non-scalar loss, missing rule, ...).
class TapeError : public Error {
 public:
  explicit TapeError(const std::string& msg) : Error("tape: " + msg) {}
};

// CTC label cannot be aligned to the available frames.
class InfeasibleLabel : public Error {
 public:
  explicit InfeasibleLabel(const std::string& msg) : Error("infeasible label: " + msg) {}
};

// CTC problem with zero frames.
class EmptyFrames : public Error {
 public:
  explicit EmptyFrames(const std::string& msg) : Error("empty frames: " + msg) {}
};

// Malformed charset file or conflicting entries.
class CharsetError : public Error {
 public:
  explicit CharsetError(const std::string& msg) : Error("charset: " + msg) {}
};

// Text contains a character the charset cannot represent.
class UnencodableChar : public Error {
 public:
  explicit UnencodableChar(const std::string& msg) : Error("unencodable: " + msg) {}
};

// Encoded label longer than the 37-id limit.
class TooLong : public Error {
 public:
  explicit TooLong(const std::string& msg) : Error("too long: " + msg) {}
};

// Record container checksum or framing failure.
class CorruptRecord : public Error {
 public:
  explicit CorruptRecord(const std::string& msg) : Error("corrupt record: " + msg) {}
};

// File could not be opened / read / written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

// Evaluation requested over an empty record set.
class EmptyEvalSet : public Error {
 public:
  explicit EmptyEvalSet(const std::string& msg) : Error("empty eval set: " + msg) {}
};

// Bad configuration value (preset fields, split fractions, style).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

}  // namespace street
