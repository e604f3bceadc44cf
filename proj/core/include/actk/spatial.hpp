#pragma once

#include <actk/mesh.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace actk {

/// Immutable balanced kd-tree over a point set. Queries return exactly the
/// brute-force result.
class KdTree {
  public:
    KdTree() = default;
    explicit KdTree(std::span<const Vec3> points, int leaf_size = 16);

    /// Indices of all points within radius r of q (closed ball), ascending.
    std::vector<int> radius_query(const Vec3& q, double r) const;

    /// Nearest point to q, excluding indices for which `exclude` is true.
    /// Returns -1 on an empty tree.
    int nearest(const Vec3& q, int exclude_index = -1) const;

    int size() const { return static_cast<int>(points_.size()); }

  private:
    struct Node {
        Aabb box;
        int left = -1, right = -1; // children, -1 for leaves
        int begin = 0, end = 0;    // leaf range in order_
    };

    int build(int begin, int end, int depth);
    void radius_rec(int node, const Vec3& q, double r, std::vector<int>& out) const;
    void nearest_rec(int node, const Vec3& q, int exclude, int& best, double& best_d2) const;

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
    int leaf_size_ = 16;
};

/// Immutable AABB tree over the tets of a mesh for point location.
class AabbTree {
  public:
    AabbTree() = default;
    explicit AabbTree(const TetMesh& mesh, int leaf_size = 8);

    /// Tets whose (inflated) bounding box contains p, ascending tet index.
    std::vector<int> candidates(const Vec3& p, double eps = 0.0) const;

    /// Tets whose bounding box overlaps `box`.
    std::vector<int> overlapping(const Aabb& box) const;

    const Aabb& root_box() const { return nodes_[root_].box; }

  private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };

    int build(int begin, int end);

    std::vector<Aabb> boxes_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
    int leaf_size_ = 8;
};

struct Located {
    int tet = -1;
    std::array<double, 4> weights{};
};

/// Barycentric coordinates of p in tet t (may be negative outside).
std::array<double, 4> barycentric(const TetMesh& mesh, int t, const Vec3& p);

/// Find the tet containing p with weight slack eps_bary; ties on shared
/// faces resolve to the lowest tet index. `eps_box` additionally inflates
/// the candidate boxes. Returns nullopt if no tet contains p.
std::optional<Located> locate(const TetMesh& mesh, const AabbTree& tree, const Vec3& p,
                              double eps_box = 0.0, double eps_bary = 1e-12);

struct TransferOptions {
    double eps_coincident = -1.0; // <=0: 1e-8 * source bbox diagonal
    double eps_bary = 1e-12;
};

struct TransferWarning {
    int target_node;
    std::string reason;
};

struct TransferResult {
    std::vector<Vec3> values;
    std::vector<TransferWarning> warnings;
};

/// Nodal field transfer from the source mesh to arbitrary target points:
/// coincident nodes copy the value, everything else is interpolated in the
/// containing tet; points not covered fall back to the nearest node value
/// with a warning.
TransferResult transfer(const TetMesh& src, std::span<const Vec3> values,
                        std::span<const Vec3> targets, const TransferOptions& opts = {});

} // namespace actk
