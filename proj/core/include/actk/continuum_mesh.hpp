#pragma once

#include <actk/mesh.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace actk {

struct DomainSpec {
    enum class Shape { BOX, SPHERE } shape = Shape::BOX;
    Vec3 center{0, 0, 0};
    double half_extent = 10.0; // box half side / sphere radius
    double h_bdry = 4.0;       // target boundary edge length
    double grading = 2.0;      // max size ratio between face-adjacent tets
};

/// Closed triangulated surface of the domain boundary with edge lengths in
/// [h_bdry/2, 2 h_bdry]. Boxes use a structured corner/edge/face grid,
/// spheres a subdivided icosahedron.
SurfaceMesh init_boundary(const DomainSpec& spec);

/// Parity point-in-closed-surface test with exact crossing predicates;
/// degenerate ray hits are re-shot deterministically.
bool point_inside_surface(const Vec3& p, const SurfaceMesh& surf, std::uint64_t seed = 0);

struct MeshBetweenOptions {
    /// Non-surface nodes closer than this to an inner-surface node are
    /// dropped before triangulating; 2.2 * r_max of the inner mesh is the
    /// usual choice. <=0 disables the filter.
    double clearance = 0.0;
    std::uint64_t seed = 0;
    int recovery_passes = 3;
    /// Labels for interior nodes; defaults to sequential ids above the
    /// surface labels.
    std::vector<std::int64_t> interior_labels;
    /// Convex outer surfaces (box, sphere) skip the outside-of-domain carve.
    bool outer_is_convex = true;
    /// When the shell must later fuse face-for-face against kept elements
    /// (cavity remeshing), missing outer faces are reported to the caller.
    bool require_outer_conformity = false;
};

struct MeshBetweenResult {
    TetMesh mesh;                      // CONTINUUM-tagged shell mesh
    std::vector<int> dropped_interior; // interior nodes discarded by the clearance rule
    int recovery_passes_used = 0;
    bool used_minimal_fallback = false;
    /// Outer faces (as label triples) absent from the shell; only populated
    /// when require_outer_conformity is set.
    std::vector<std::array<std::int64_t, 3>> missing_outer;
};

/// Edge-connected component of a closed surface containing the
/// lexicographically extreme vertex; strips interior void components from an
/// atomistic boundary.
SurfaceMesh exterior_component(const SurfaceMesh& surf);

/// Meshes the shell between an enclosing outer surface and the inner
/// atomistic boundary: Delaunay of all nodes, removal of elements inside the
/// inner surface (and outside the outer one), and verification that every
/// inner triangle appears as a face of exactly one shell tet. Failing faces
/// trigger interior-node removal passes and finally a minimal-node-set
/// rebuild; BOUNDARY_NOT_RECOVERED is thrown if even that fails.
MeshBetweenResult mesh_between(const SurfaceMesh& outer, const SurfaceMesh& inner,
                               std::span<const Vec3> interior_nodes,
                               const MeshBetweenOptions& opts = {});

/// Graded interior node cloud for the continuum region: concentric
/// golden-spiral shells starting at `r0` from `center` with spacing growing
/// by `growth` per shell, clipped against the domain with a `margin` from
/// its boundary. Spacing saturates at h_max.
std::vector<Vec3> graded_shell_nodes(const Vec3& center, double r0, double spacing0,
                                     double growth, double h_max, const DomainSpec& domain,
                                     double margin);

struct QmrOptions {
    double q_min = 0.3;
    double grading = 2.0;   // max |T|^(1/3) ratio between face-adjacent tets
    int node_budget = 200000;
    int max_passes = 12;
    double accept_factor = 1.01;
};

struct QmrStats {
    int splits = 0;
    int swaps = 0;
    int smooth_moves = 0;
    int passes = 0;
};

/// Quality refinement of the continuum mesh: edge swaps, barycentric splits
/// and guarded smoothing until every unprotected tet reaches q_min and the
/// size grading bound, leaving interface and domain-boundary faces
/// untouched. Tets touching a non-continuum region or the domain boundary
/// are protected. Throws BUDGET_EXCEEDED when the node budget is hit.
QmrStats qmr_refine(TetMesh& mesh, const QmrOptions& opts = {});

} // namespace actk
