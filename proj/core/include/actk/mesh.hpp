#pragma once

#include <actk/geometry.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace actk {

enum class Region : std::uint8_t { ATOMISTIC = 0, BLEND = 1, CONTINUUM = 2 };
enum class NodeFlag : std::uint8_t { FEM_NODE = 0, ATOM = 1, DOMAIN_BOUNDARY = 2 };

/// Orientation-independent face key: sorted node index triple.
struct FaceKey {
    std::array<int, 3> n;

    FaceKey(int a, int b, int c) : n{a, b, c} {
        if (n[0] > n[1]) std::swap(n[0], n[1]);
        if (n[1] > n[2]) std::swap(n[1], n[2]);
        if (n[0] > n[1]) std::swap(n[0], n[1]);
    }
    bool operator==(const FaceKey& o) const { return n == o.n; }
};

struct FaceKeyHash {
    size_t operator()(const FaceKey& k) const {
        size_t h = 1469598103934665603ull;
        for (int v : k.n) {
            h ^= static_cast<size_t>(v) + 0x9e3779b97f4a7c15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

/// Incidence of a face: one or two tets (boundary faces have tet[1] == -1).
struct FaceIncidence {
    int tet[2] = {-1, -1};
    int count() const { return tet[1] >= 0 ? 2 : (tet[0] >= 0 ? 1 : 0); }
};

using FaceAdjacency = std::unordered_map<FaceKey, FaceIncidence, FaceKeyHash>;

/// The single tetrahedral mesh representation shared by the atomistic,
/// blend and continuum regions. Tets are stored positively oriented;
/// coordinates are in units of the lattice constant.
struct TetMesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 4>> tets;
    std::vector<Region> region;          // per tet
    std::vector<NodeFlag> node_flags;    // per node
    std::vector<std::int64_t> node_labels; // stable ids, used for fusion and tie-breaking

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_tets() const { return static_cast<int>(tets.size()); }

    std::array<Vec3, 4> tet_points(int t) const {
        const auto& k = tets[t];
        return {nodes[k[0]], nodes[k[1]], nodes[k[2]], nodes[k[3]]};
    }
    Vec3 tet_centroid(int t) const {
        auto p = tet_points(t);
        return 0.25 * (p[0] + p[1] + p[2] + p[3]);
    }
    Aabb bounding_box() const;

    /// Ensures region/node_flags/node_labels are sized; labels default to index.
    void init_defaults();
};

/// Outward-oriented triangle surface extracted from a mesh region.
struct SurfaceMesh {
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 3>> tris;   // indices into `nodes`
    std::vector<int> parent_node;           // surface node -> mesh node index
    std::vector<std::int64_t> node_labels;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_tris() const { return static_cast<int>(tris.size()); }
};

/// Signed volume of the tet (a,b,c,d): one sixth of the triple product of
/// the edge vectors from a.
double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Tetrahedron shape quality q = 72*sqrt(3)*|K| / (sum_i s(e_i)^2)^(3/2),
/// 1 for the regular tet, 0 for degenerate ones.
double element_quality(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
double element_quality(const TetMesh& mesh, int t);

/// Quality of a set of tets: the minimum element quality.
double set_quality(const TetMesh& mesh, std::span<const int> tet_ids);

struct Circumsphere {
    Vec3 center;
    double radius;
};

/// Circumcenter/radius; throws DEGENERATE_TET for flat tets.
Circumsphere circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
Circumsphere circumsphere(const TetMesh& mesh, int t);

/// Circumradius that reports infinity for degenerate tets instead of
/// throwing; used by deletion sweeps that must rank bad elements.
double circumradius_safe(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Face-to-tet incidence for the whole mesh. Throws NON_MANIFOLD if a face
/// is shared by three or more tets.
FaceAdjacency build_adjacency(const TetMesh& mesh);

/// Tets may be filtered by region; pass std::nullopt for the whole mesh.
/// Triangles are oriented away from the filtered region.
SurfaceMesh extract_boundary(const TetMesh& mesh, std::optional<Region> region_filter = {});
SurfaceMesh extract_boundary(const TetMesh& mesh, std::span<const char> tet_in_region);

enum class ViolationKind {
    ORIENTATION,
    DUPLICATE_NODE,
    NON_MANIFOLD,
    BAD_INDEX,
    REGION_SIZE,
    ATOM_FLAG,
};

struct Violation {
    ViolationKind kind;
    int index; // tet or node index, whichever applies
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Structural validation of every TetMesh invariant; pure, never throws.
/// eps_node <= 0 selects the default 1e-8 * bounding box diagonal.
ValidationReport validate(const TetMesh& mesh, double eps_node = -1.0);

struct QualityReport {
    std::array<int, 10> histogram{}; // (0,0.1], ..., (0.9,1.0]; q=0 counts in the first bin
    double min_q = 0.0;
    double fraction_high = 0.0; // share with q in (0.9, 1.0]
    std::vector<double> per_tet_q;
};

QualityReport quality_report(const TetMesh& mesh);

/// Fuses sub-meshes into one mesh, identifying nodes by label (positions of
/// equal labels must coincide). Regions are carried per tet; node flags are
/// merged with precedence ATOM > DOMAIN_BOUNDARY > FEM_NODE.
TetMesh fuse_meshes(std::span<const TetMesh* const> parts);

/// Sub-mesh of the given tets with unreferenced nodes dropped; labels and
/// flags carried over.
TetMesh submesh(const TetMesh& mesh, std::span<const int> tet_ids);

} // namespace actk
