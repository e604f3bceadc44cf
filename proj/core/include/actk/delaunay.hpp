#pragma once

#include <actk/mesh.hpp>
#include <actk/predicates.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace actk {

/// Biased randomized insertion order: points are assigned to rounds of
/// geometrically increasing size (ratio 2, the last round holds about half
/// the points) and sorted along a Hilbert curve within each round.
struct InsertionOrder {
    std::vector<int> permutation;
    std::vector<int> round_offsets; // round r = permutation[offsets[r], offsets[r+1])

    int num_rounds() const { return static_cast<int>(round_offsets.size()) - 1; }
};

InsertionOrder brio_sort(std::span<const Vec3> points, std::uint64_t seed);

/// 63-bit Hilbert curve key of a point within a bounding box.
std::uint64_t hilbert_key(const Vec3& p, const Aabb& box);

struct TriangulateOptions {
    std::uint64_t seed = 0;
    /// Stable per-point ids used by the symbolic perturbation rule; defaults
    /// to the point index. Triangulations built with the same labels resolve
    /// cospherical ties identically regardless of insertion order.
    std::vector<std::int64_t> labels;
    /// Node coincidence tolerance; <=0 selects 1e-8 * bbox diagonal.
    double eps_node = -1.0;
    /// Re-validate the full mesh after every insertion (slow, for tests).
    bool validate_each_insert = false;
};

/// Incremental Delaunay triangulation of a 3D point set. Output nodes are
/// the input points in input order; tets are canonically ordered and cover
/// exactly the convex hull. Cospherical ties are broken by the label-keyed
/// perturbation rule, so the complex is unique for a given label set.
TetMesh triangulate(std::span<const Vec3> points, const TriangulateOptions& opts = {});

/// Bowyer-Watson insertion of one point into an existing Delaunay mesh.
/// Throws DUPLICATE_POINT if p coincides with a node, OUT_OF_HULL if p is
/// not strictly inside the triangulated domain.
void insert_point(TetMesh& mesh, const Vec3& p, double eps_node = -1.0);

} // namespace actk
