#include "sudoku_grpo/error.hpp"

namespace sgrpo {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput: return "input";
    case ErrorKind::kNoSolution: return "no_solution";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kProvenance: return "provenance";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNumerical: return 3;
    case ErrorKind::kProvenance: return 4;
    case ErrorKind::kInput:
    case ErrorKind::kNoSolution:
    case ErrorKind::kIo: return 2;
  }
  return 1;
}

void throw_input(const std::string& message) { throw Error(ErrorKind::kInput, message); }

void throw_numerical(const std::string& message) {
  throw Error(ErrorKind::kNumerical, message);
}

}  // namespace sgrpo
