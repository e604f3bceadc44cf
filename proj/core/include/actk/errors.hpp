#pragma once

#include <stdexcept>
#include <string>

namespace actk {

/// Machine-readable failure categories; the CLI maps these to exit codes.
enum class ErrorCode {
    EMPTY_SET,
    DEGENERATE_TET,
    NON_MANIFOLD,
    DEGENERATE_INPUT,
    DUPLICATE_POINT,
    OUT_OF_HULL,
    TOO_FEW_ATOMS,
    MESH_VANISHED,
    NO_CONVERGENCE,
    BOUNDARY_NOT_RECOVERED,
    BUDGET_EXCEEDED,
    NO_SUCH_EDGE,
    SWAP_CYCLE,
    CAVITY_FAILED,
    BAD_GEOMETRY,
    INVERTED_DEFORMATION,
    STALE_CORRECTION,
    STALL,
    CONVERGED_OR_DEGENERATE,
    NO_ATOMISTIC_REGION,
    NO_COMMON_REFINEMENT,
    PARSE_ERROR,
    INVALID_ARGUMENT,
    IO_ERROR,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

} // namespace actk
