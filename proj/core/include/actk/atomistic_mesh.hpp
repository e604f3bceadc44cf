#pragma once

#include <actk/mesh.hpp>

#include <span>
#include <vector>

namespace actk {

struct DeletionParams {
    double r_max = 0.0;   // circumradius cap, > 0
    int max_rounds = 1000; // safety bound on peeling rounds
};

/// r_max rule: c_r times the maximum over atoms of the nearest-neighbor
/// distance. Throws TOO_FEW_ATOMS for fewer than two atoms.
double compute_rmax(std::span<const Vec3> atoms, double c_r = 1.05);

struct DeletionRound {
    std::vector<std::array<int, 4>> deleted; // node quadruples removed this round
};

struct DeletionResult {
    TetMesh mesh;
    std::vector<int> orphaned_atoms;  // nodes that lost all incident tets
    std::vector<DeletionRound> audit; // per-round deletions, in order
};

/// Iteratively removes boundary-adjacent tets whose circumradius exceeds
/// r_max until a round deletes nothing. Node coordinates are unchanged;
/// the output tet set is a subset of the input.
DeletionResult delete_elements(const TetMesh& pre, const DeletionParams& params);

} // namespace actk
