#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgrpo {

enum class ErrorKind {
  kInput,       // malformed arguments, files, or shapes
  kNoSolution,  // puzzle admits no completion
  kNumerical,   // NaN/Inf encountered during training
  kProvenance,  // artifact hashes do not match
  kIo,          // filesystem failures
};

std::string_view error_kind_name(ErrorKind kind);

// Process exit code for the CLI: 2 input, 3 numerical, 4 provenance.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_input(const std::string& message);
[[noreturn]] void throw_numerical(const std::string& message);

}  // namespace sgrpo
