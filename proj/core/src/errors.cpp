#include <actk/errors.hpp>

namespace actk {

const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EMPTY_SET: return "EMPTY_SET";
        case ErrorCode::DEGENERATE_TET: return "DEGENERATE_TET";
        case ErrorCode::NON_MANIFOLD: return "NON_MANIFOLD";
        case ErrorCode::DEGENERATE_INPUT: return "DEGENERATE_INPUT";
        case ErrorCode::DUPLICATE_POINT: return "DUPLICATE_POINT";
        case ErrorCode::OUT_OF_HULL: return "OUT_OF_HULL";
        case ErrorCode::TOO_FEW_ATOMS: return "TOO_FEW_ATOMS";
        case ErrorCode::MESH_VANISHED: return "MESH_VANISHED";
        case ErrorCode::NO_CONVERGENCE: return "NO_CONVERGENCE";
        case ErrorCode::BOUNDARY_NOT_RECOVERED: return "BOUNDARY_NOT_RECOVERED";
        case ErrorCode::BUDGET_EXCEEDED: return "BUDGET_EXCEEDED";
        case ErrorCode::NO_SUCH_EDGE: return "NO_SUCH_EDGE";
        case ErrorCode::SWAP_CYCLE: return "SWAP_CYCLE";
        case ErrorCode::CAVITY_FAILED: return "CAVITY_FAILED";
        case ErrorCode::BAD_GEOMETRY: return "BAD_GEOMETRY";
        case ErrorCode::INVERTED_DEFORMATION: return "INVERTED_DEFORMATION";
        case ErrorCode::STALE_CORRECTION: return "STALE_CORRECTION";
        case ErrorCode::STALL: return "STALL";
        case ErrorCode::CONVERGED_OR_DEGENERATE: return "CONVERGED_OR_DEGENERATE";
        case ErrorCode::NO_ATOMISTIC_REGION: return "NO_ATOMISTIC_REGION";
        case ErrorCode::NO_COMMON_REFINEMENT: return "NO_COMMON_REFINEMENT";
        case ErrorCode::PARSE_ERROR: return "PARSE_ERROR";
        case ErrorCode::INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case ErrorCode::IO_ERROR: return "IO_ERROR";
    }
    return "UNKNOWN";
}

} // namespace actk
