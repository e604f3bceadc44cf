#include <actk/errors.hpp>
#include <actk/spatial.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace actk {

KdTree::KdTree(std::span<const Vec3> points, int leaf_size)
    : points_(points.begin(), points.end()), leaf_size_(std::max(1, leaf_size)) {
    require(!points_.empty(), ErrorCode::EMPTY_SET, "KdTree over an empty point set");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size() / leaf_size_ + 4);
    root_ = build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::build(int begin, int end, int depth) {
    Node node;
    node.begin = begin;
    node.end = end;
    for (int i = begin; i < end; ++i) node.box.expand(points_[order_[i]]);
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= leaf_size_) return id;

    // Split on the widest axis at the median.
    const Vec3 ext = node.box.hi - node.box.lo;
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > (&ext.x)[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::radius_rec(int node, const Vec3& q, double r, std::vector<int>& out) const {
    const Node& nd = nodes_[node];
    // Quick reject: distance from q to the box exceeds r.
    double d2 = 0;
    for (int ax = 0; ax < 3; ++ax) {
        const double lo = (&nd.box.lo.x)[ax], hi = (&nd.box.hi.x)[ax], v = q[ax];
        if (v < lo) d2 += (lo - v) * (lo - v);
        else if (v > hi) d2 += (v - hi) * (v - hi);
    }
    if (d2 > r * r) return;
    if (nd.left < 0) {
        for (int i = nd.begin; i < nd.end; ++i)
            if (norm2(points_[order_[i]] - q) <= r * r) out.push_back(order_[i]);
        return;
    }
    radius_rec(nd.left, q, r, out);
    radius_rec(nd.right, q, r, out);
}

std::vector<int> KdTree::radius_query(const Vec3& q, double r) const {
    std::vector<int> out;
    if (root_ >= 0 && r >= 0) radius_rec(root_, q, r, out);
    std::sort(out.begin(), out.end());
    return out;
}

void KdTree::nearest_rec(int node, const Vec3& q, int exclude, int& best, double& best_d2) const {
    const Node& nd = nodes_[node];
    double d2 = 0;
    for (int ax = 0; ax < 3; ++ax) {
        const double lo = (&nd.box.lo.x)[ax], hi = (&nd.box.hi.x)[ax], v = q[ax];
        if (v < lo) d2 += (lo - v) * (lo - v);
        else if (v > hi) d2 += (v - hi) * (v - hi);
    }
    if (d2 >= best_d2) return;
    if (nd.left < 0) {
        for (int i = nd.begin; i < nd.end; ++i) {
            const int idx = order_[i];
            if (idx == exclude) continue;
            const double dd = norm2(points_[idx] - q);
            if (dd < best_d2 || (dd == best_d2 && idx < best)) {
                best_d2 = dd;
                best = idx;
            }
        }
        return;
    }
    nearest_rec(nd.left, q, exclude, best, best_d2);
    nearest_rec(nd.right, q, exclude, best, best_d2);
}

int KdTree::nearest(const Vec3& q, int exclude_index) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::max();
    if (root_ >= 0) nearest_rec(root_, q, exclude_index, best, best_d2);
    return best;
}

AabbTree::AabbTree(const TetMesh& mesh, int leaf_size) : leaf_size_(std::max(1, leaf_size)) {
    require(mesh.num_tets() > 0, ErrorCode::EMPTY_SET, "AabbTree over an empty mesh");
    boxes_.resize(mesh.num_tets());
    for (int t = 0; t < mesh.num_tets(); ++t)
        for (const auto& p : mesh.tet_points(t)) boxes_[t].expand(p);
    order_.resize(boxes_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * boxes_.size() / leaf_size_ + 4);
    root_ = build(0, static_cast<int>(boxes_.size()));
}

int AabbTree::build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    for (int i = begin; i < end; ++i) node.box.expand(boxes_[order_[i]]);
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= leaf_size_) return id;

    const Vec3 ext = node.box.hi - node.box.lo;
    int axis = 0;
    if (ext.y > ext.x) axis = 1;
    if (ext.z > (&ext.x)[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const Vec3 ca = boxes_[a].center(), cb = boxes_[b].center();
                         return ca[axis] < cb[axis];
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

std::vector<int> AabbTree::candidates(const Vec3& p, double eps) const {
    std::vector<int> out;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const Node& nd = nodes_[stack.back()];
        stack.pop_back();
        if (!nd.box.contains(p, eps)) continue;
        if (nd.left < 0) {
            for (int i = nd.begin; i < nd.end; ++i)
                if (boxes_[order_[i]].contains(p, eps)) out.push_back(order_[i]);
        } else {
            stack.push_back(nd.left);
            stack.push_back(nd.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> AabbTree::overlapping(const Aabb& box) const {
    std::vector<int> out;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const Node& nd = nodes_[stack.back()];
        stack.pop_back();
        if (!nd.box.overlaps(box)) continue;
        if (nd.left < 0) {
            for (int i = nd.begin; i < nd.end; ++i)
                if (boxes_[order_[i]].overlaps(box)) out.push_back(order_[i]);
        } else {
            stack.push_back(nd.left);
            stack.push_back(nd.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::array<double, 4> barycentric(const TetMesh& mesh, int t, const Vec3& p) {
    const auto tp = mesh.tet_points(t);
    const double v = tet_volume(tp[0], tp[1], tp[2], tp[3]);
    std::array<double, 4> w{};
    if (v == 0.0) {
        w.fill(-std::numeric_limits<double>::max());
        return w;
    }
    w[0] = tet_volume(p, tp[1], tp[2], tp[3]) / v;
    w[1] = tet_volume(tp[0], p, tp[2], tp[3]) / v;
    w[2] = tet_volume(tp[0], tp[1], p, tp[3]) / v;
    w[3] = 1.0 - w[0] - w[1] - w[2];
    return w;
}

std::optional<Located> locate(const TetMesh& mesh, const AabbTree& tree, const Vec3& p,
                              double eps_box, double eps_bary) {
    for (int t : tree.candidates(p, eps_box)) { // ascending: lowest index wins ties
        const auto w = barycentric(mesh, t, p);
        if (w[0] >= -eps_bary && w[1] >= -eps_bary && w[2] >= -eps_bary && w[3] >= -eps_bary)
            return Located{t, w};
    }
    return std::nullopt;
}

TransferResult transfer(const TetMesh& src, std::span<const Vec3> values,
                        std::span<const Vec3> targets, const TransferOptions& opts) {
    require(values.size() == src.nodes.size(), ErrorCode::INVALID_ARGUMENT,
            "transfer: values must be defined on all source nodes");
    const double eps = opts.eps_coincident > 0
                           ? opts.eps_coincident
                           : 1e-8 * std::max(src.bounding_box().diagonal(), 1e-300);

    const KdTree kd(src.nodes);
    const AabbTree aabb(src);

    TransferResult result;
    result.values.resize(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        const Vec3& p = targets[i];
        // Coincident source node: copy its value.
        const auto near = kd.radius_query(p, eps);
        if (!near.empty()) {
            int best = near[0];
            for (int n : near)
                if (dist(src.nodes[n], p) < dist(src.nodes[best], p)) best = n;
            result.values[i] = values[best];
            continue;
        }
        if (auto loc = locate(src, aabb, p, eps, opts.eps_bary)) {
            Vec3 v{0, 0, 0};
            for (int j = 0; j < 4; ++j) v += loc->weights[j] * values[src.tets[loc->tet][j]];
            result.values[i] = v;
            continue;
        }
        const int nearest = kd.nearest(p);
        result.values[i] = values[nearest];
        result.warnings.push_back(
            {static_cast<int>(i), "target outside source mesh; nearest-node fallback"});
    }
    return result;
}

} // namespace actk
