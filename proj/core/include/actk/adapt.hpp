#pragma once

#include <actk/mesh.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace actk {

/// Splits tet t at its barycenter into four tets. One child reuses index t,
/// three are appended; other tet indices are unchanged. Returns the four
/// child ids. The new node inherits region/flag defaults (FEM node).
std::array<int, 4> split_barycentric(TetMesh& mesh, int t);

enum class SwapReject {
    NONE,
    QUALITY,          // no configuration beats 1.01 * Q(current)
    PROTECTED_EDGE,   // boundary edge, or touches a non-continuum tet
    UNSUPPORTED_RING, // ring larger than 7
    INFEASIBLE,       // every retetrahedralization inverts an element
};

struct SwapResult {
    bool swapped = false;
    SwapReject reason = SwapReject::NONE;
    std::vector<int> new_tets; // ids of created tets when swapped
};

struct SwapOptions {
    /// Acceptance hysteresis: a configuration B is applied only if
    /// Q(B) > accept_factor * Q(A).
    double accept_factor = 1.01;
    int max_ring = 7;
};

/// Edge swap around edge (a,b): enumerates retetrahedralizations of the
/// kernel ring polygon (optimal min-quality triangulation), applies the best
/// feasible one if it beats the acceptance rule. Throws NO_SUCH_EDGE if
/// (a,b) is not an edge of the mesh.
SwapResult try_edge_swap(TetMesh& mesh, int a, int b, const SwapOptions& opts = {});

struct RefineOptions {
    SwapOptions swap;
    int max_sweeps = 100;
};

struct RefineStats {
    int splits = 0;
    int swaps = 0;
    int sweeps = 0;
};

/// Algorithm: split every marked tet at the barycenter, then run edge-swap
/// sweeps over the newly created elements until the worklist empties.
/// Marked ids must refer to CONTINUUM tets.
RefineStats refine_continuum(TetMesh& mesh, std::span<const int> marked,
                             const RefineOptions& opts = {});

/// Smart Laplacian smoothing: each movable node is pulled toward the average
/// of its edge neighbors; a move is rejected if it would invert an incident
/// tet or lower the minimum incident quality. Returns accepted move count.
int laplacian_smooth(TetMesh& mesh, std::span<const int> movable_nodes, int rounds);

/// Exact-ish separating-axis tet-tet overlap with open interiors: sharing a
/// face, edge or vertex does not count as intersection.
bool tets_overlap(const std::array<Vec3, 4>& A, const std::array<Vec3, 4>& B);

/// Continuum tets of `host` whose interior intersects any tet of `tool`,
/// ascending. Accelerated by bounding-box trees; equals the brute-force
/// all-pairs scan.
std::vector<int> tets_intersecting(const TetMesh& host, const TetMesh& tool);

struct ExtensionRequest {
    std::vector<Vec3> marked_atoms;
    std::vector<std::int64_t> marked_labels;
    int layers = 1;
};

struct ExtendOptions {
    double c_r = 1.05;             // r_max = c_r * max nearest-neighbor distance
    double clearance_factor = 2.2; // continuum nodes stay clearance_factor*r_max from atoms
    int smoothing_rounds = 3;
    int max_expansion_passes = 12;
    std::uint64_t seed = 0;
    /// Region tag for rebuilt lattice tets (ATOMISTIC vs BLEND), from the
    /// tet centroid. Defaults to ATOMISTIC everywhere.
    std::function<Region(const Vec3&)> lattice_region;
};

struct ExtendResult {
    TetMesh mesh;
    std::vector<std::int64_t> ignored_marks; // marked atoms already present
    int expansion_passes = 0;
};

/// Atomistic-region extension: rebuilds the lattice mesh on the union atom
/// set, removes continuum elements that intersect it, meshes the cavity
/// between the surfaces, fuses the sub-meshes and smooths around the fusion
/// band. Atom nodes are identified across meshes by label.
ExtendResult extend_atomistic(const TetMesh& coupled, const ExtensionRequest& request,
                              const ExtendOptions& opts = {});

} // namespace actk
