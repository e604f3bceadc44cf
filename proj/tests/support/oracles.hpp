#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately avoid the library's algorithmic paths: the hull volume
// comes from an incremental convex hull, interpolation from an O(N*M) scan,
// and so on. Shared exact predicates are the only common infrastructure.

#include <actk/geometry.hpp>
#include <actk/mesh.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace actk::test {

/// Volume of the convex hull via an incremental hull construction.
double convex_hull_volume(const std::vector<Vec3>& points);

/// True if every tet's circumsphere is empty of all other input points
/// (ON-sphere points allowed), checked exhaustively with exact predicates.
bool delaunay_empty_sphere_check(const TetMesh& mesh, const std::vector<Vec3>& points);

/// Sum of tet volumes.
double total_volume(const TetMesh& mesh);

/// Brute-force point-in-tet interpolation over all tets; nearest node value
/// if no tet contains the point. Mirrors Algorithm semantics without trees.
std::vector<Vec3> brute_force_transfer(const TetMesh& src, const std::vector<Vec3>& values,
                                       const std::vector<Vec3>& targets, double eps);

/// Brute-force containment query: lowest tet index containing p with
/// barycentric slack eps_bary, or nullopt.
std::optional<int> brute_force_locate(const TetMesh& mesh, const Vec3& p, double eps_bary);

std::vector<Vec3> random_points(int n, std::uint64_t seed, double lo = 0.0, double hi = 1.0);

/// Random non-degenerate tet with vertices in the unit cube.
std::array<Vec3, 4> random_tet(std::mt19937_64& rng, double min_quality = 1e-4);

} // namespace actk::test
