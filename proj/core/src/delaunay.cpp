#include <actk/delaunay.hpp>
#include <actk/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <random>
#include <unordered_set>

namespace actk {

namespace {

// Skilling's transpose form of the Hilbert curve ("Programming the Hilbert
// curve", AIP 2004), 3 axes x `bits` bits.
void axes_to_transpose(std::uint32_t x[3], int bits) {
    std::uint32_t m = 1u << (bits - 1), p, q, t;
    for (q = m; q > 1; q >>= 1) {
        p = q - 1;
        for (int i = 0; i < 3; ++i) {
            if (x[i] & q) {
                x[0] ^= p;
            } else {
                t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
    }
    for (int i = 1; i < 3; ++i) x[i] ^= x[i - 1];
    t = 0;
    for (q = m; q > 1; q >>= 1)
        if (x[2] & q) t ^= q - 1;
    for (int i = 0; i < 3; ++i) x[i] ^= t;
}

constexpr int kHilbertBits = 21;

} // namespace

std::uint64_t hilbert_key(const Vec3& p, const Aabb& box) {
    const double span = std::max({box.hi.x - box.lo.x, box.hi.y - box.lo.y,
                                  box.hi.z - box.lo.z, 1e-300});
    const double scale = ((1u << kHilbertBits) - 1) / span;
    std::uint32_t x[3];
    x[0] = static_cast<std::uint32_t>(std::clamp((p.x - box.lo.x) * scale, 0.0, (double)((1u << kHilbertBits) - 1)));
    x[1] = static_cast<std::uint32_t>(std::clamp((p.y - box.lo.y) * scale, 0.0, (double)((1u << kHilbertBits) - 1)));
    x[2] = static_cast<std::uint32_t>(std::clamp((p.z - box.lo.z) * scale, 0.0, (double)((1u << kHilbertBits) - 1)));
    axes_to_transpose(x, kHilbertBits);
    std::uint64_t key = 0;
    for (int b = kHilbertBits - 1; b >= 0; --b)
        for (int i = 0; i < 3; ++i) key = (key << 1) | ((x[i] >> b) & 1u);
    return key;
}

InsertionOrder brio_sort(std::span<const Vec3> points, std::uint64_t seed) {
    const int n = static_cast<int>(points.size());
    require(n >= 1, ErrorCode::DEGENERATE_INPUT, "brio_sort of an empty point set");

    InsertionOrder order;
    if (n == 1) {
        order.permutation = {0};
        order.round_offsets = {0, 1};
        return order;
    }

    const int rounds = std::max(1, static_cast<int>(std::floor(std::log2(static_cast<double>(n)))));
    std::mt19937_64 rng(seed);
    std::vector<int> round_of(n);
    std::vector<int> count(rounds, 0);
    for (int i = 0; i < n; ++i) {
        // Geometric assignment from the last round backwards: P(last) = 1/2.
        int g = 0;
        while (g < rounds - 1 && (rng() & 1u)) ++g;
        round_of[i] = rounds - 1 - g;
        count[round_of[i]]++;
    }

    Aabb box;
    for (const auto& p : points) box.expand(p);
    std::vector<std::uint64_t> key(n);
    for (int i = 0; i < n; ++i) key[i] = hilbert_key(points[i], box);

    order.round_offsets.resize(rounds + 1, 0);
    for (int r = 0; r < rounds; ++r) order.round_offsets[r + 1] = order.round_offsets[r] + count[r];
    order.permutation.resize(n);
    std::vector<int> cursor(order.round_offsets.begin(), order.round_offsets.end() - 1);
    for (int i = 0; i < n; ++i) order.permutation[cursor[round_of[i]]++] = i;
    for (int r = 0; r < rounds; ++r) {
        auto begin = order.permutation.begin() + order.round_offsets[r];
        auto end = order.permutation.begin() + order.round_offsets[r + 1];
        std::sort(begin, end, [&](int a, int b) {
            // Alternate sweep direction between rounds for locality at round
            // boundaries.
            if (key[a] != key[b]) return (r % 2 == 0) ? key[a] < key[b] : key[a] > key[b];
            return a < b;
        });
    }
    return order;
}

namespace {

constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

/// Incremental Bowyer-Watson triangulator over user points plus four
/// bootstrap vertices at symbolic infinity.
class Builder {
  public:
    Builder(std::span<const Vec3> points, const TriangulateOptions& opts) : opts_(opts) {
        const int n = static_cast<int>(points.size());
        pts_.reserve(n + 4);
        Aabb box;
        for (const auto& p : points) box.expand(p);
        for (int i = 0; i < n; ++i) {
            PredPoint q;
            q.p = points[i];
            q.label = opts.labels.empty() ? i : opts.labels[i];
            pts_.push_back(q);
        }
        eps_node_ = opts.eps_node > 0 ? opts.eps_node : 1e-8 * std::max(box.diagonal(), 1e-300);

        // Bootstrap vertices: center + omega_k * dir_k. The numeric
        // coordinates are only cosmetic; predicates use the symbolic form.
        const Vec3 c = box.center();
        const Vec3 dirs[4] = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
        std::array<int, 4> verts{};
        for (int k = 0; k < 4; ++k) {
            PredPoint q;
            q.p = c; // finite anchor; predicates treat the vertex as c + omega_k * dir
            q.dir = dirs[k];
            q.super_rank = k;
            q.label = std::numeric_limits<std::int64_t>::min() + k;
            pts_.push_back(q);
            verts[k] = n + k;
        }
        if (orient3d_sign(pts_[verts[0]], pts_[verts[1]], pts_[verts[2]], pts_[verts[3]]) < 0)
            std::swap(verts[2], verts[3]);
        Tet t;
        t.v = verts;
        t.nbr = {-1, -1, -1, -1};
        tets_.push_back(t);
        num_user_ = n;
        last_ = 0;
    }

    void insert(int pi) {
        const int seed_tet = locate(pi);
        check_duplicate(seed_tet, pi);
        auto cavity = grow_cavity(seed_tet, pi);
        retriangulate(cavity, pi);
    }

    /// Finite tets in canonical order (vertices sorted, orientation fixed by
    /// swapping the last pair, list sorted lexicographically).
    std::vector<std::array<int, 4>> finite_tets() const {
        std::vector<std::array<int, 4>> out;
        for (const auto& t : tets_) {
            if (!t.alive) continue;
            if (t.v[0] >= num_user_ || t.v[1] >= num_user_ || t.v[2] >= num_user_ ||
                t.v[3] >= num_user_)
                continue;
            std::array<int, 4> v = t.v;
            std::sort(v.begin(), v.end());
            if (orient3d_sign(pts_[v[0]].p, pts_[v[1]].p, pts_[v[2]].p, pts_[v[3]].p) < 0)
                std::swap(v[2], v[3]);
            out.push_back(v);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

  private:
    struct Tet {
        std::array<int, 4> v;
        std::array<int, 4> nbr; // neighbor opposite to corner i, -1 = outside world
        bool alive = true;
    };

    int locate(int pi) const {
        const PredPoint& p = pts_[pi];
        int cur = last_;
        int steps = 0;
        const int max_steps = static_cast<int>(tets_.size()) * 4 + 64;
        int arrived_from = -1;
        while (true) {
            require(++steps <= max_steps, ErrorCode::DEGENERATE_INPUT,
                    "point location walk failed to terminate");
            const Tet& t = tets_[cur];
            int next = -1;
            for (int lf = 0; lf < 4; ++lf) {
                if (t.nbr[lf] == arrived_from && arrived_from >= 0) continue;
                const int o = orient3d_sign(pts_[t.v[kFace[lf][0]]], pts_[t.v[kFace[lf][1]]],
                                            pts_[t.v[kFace[lf][2]]], p);
                if (o > 0) { // p strictly beyond this outward face
                    next = t.nbr[lf];
                    break;
                }
            }
            if (next < 0) return cur;
            arrived_from = cur;
            cur = next;
        }
    }

    void check_duplicate(int tet, int pi) const {
        for (int v : tets_[tet].v) {
            if (v >= num_user_) continue;
            if (dist(pts_[v].p, pts_[pi].p) <= eps_node_)
                throw Error(ErrorCode::DUPLICATE_POINT,
                            "point " + std::to_string(pi) + " coincides with point " +
                                std::to_string(v));
        }
    }

    bool in_sphere(int tet, int pi) const {
        const Tet& t = tets_[tet];
        return insphere_perturbed(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], pts_[t.v[3]],
                                  pts_[pi]) == Side::INSIDE;
    }

    std::vector<int> grow_cavity(int seed_tet, int pi) {
        // The located tet contains p in its closure, but p may sit exactly on
        // its circumsphere; scan outward a step for a strictly-inside seed.
        int seed = -1;
        if (in_sphere(seed_tet, pi)) {
            seed = seed_tet;
        } else {
            for (int lf = 0; lf < 4 && seed < 0; ++lf) {
                int nb = tets_[seed_tet].nbr[lf];
                if (nb >= 0 && in_sphere(nb, pi)) seed = nb;
            }
            for (int lf = 0; lf < 4 && seed < 0; ++lf) {
                int nb = tets_[seed_tet].nbr[lf];
                if (nb < 0) continue;
                for (int lf2 = 0; lf2 < 4 && seed < 0; ++lf2) {
                    int nb2 = tets_[nb].nbr[lf2];
                    if (nb2 >= 0 && in_sphere(nb2, pi)) seed = nb2;
                }
            }
        }
        require(seed >= 0, ErrorCode::DEGENERATE_INPUT, "empty insertion cavity");

        std::vector<int> cavity;
        std::deque<int> queue{seed};
        std::unordered_set<int> visited{seed};
        while (!queue.empty()) {
            int cur = queue.front();
            queue.pop_front();
            cavity.push_back(cur);
            for (int lf = 0; lf < 4; ++lf) {
                int nb = tets_[cur].nbr[lf];
                if (nb < 0 || visited.count(nb)) continue;
                visited.insert(nb);
                if (in_sphere(nb, pi)) queue.push_back(nb);
            }
        }
        return cavity;
    }

    void retriangulate(const std::vector<int>& cavity, int pi) {
        std::unordered_set<int> in_cavity(cavity.begin(), cavity.end());

        struct BoundaryFace {
            std::array<int, 3> verts; // oriented so that (verts, p) is positive
            int outside;              // tet beyond the face, -1 for the world
            int outside_face;         // its local face index
        };
        std::vector<BoundaryFace> boundary;
        for (int ct : cavity) {
            const Tet& t = tets_[ct];
            for (int lf = 0; lf < 4; ++lf) {
                const int nb = t.nbr[lf];
                if (nb >= 0 && in_cavity.count(nb)) continue;
                BoundaryFace bf;
                // kFace is outward; reversed it faces the cavity interior.
                bf.verts = {t.v[kFace[lf][0]], t.v[kFace[lf][2]], t.v[kFace[lf][1]]};
                bf.outside = nb;
                bf.outside_face = -1;
                if (nb >= 0) {
                    for (int nlf = 0; nlf < 4; ++nlf)
                        if (tets_[nb].nbr[nlf] == ct) bf.outside_face = nlf;
                }
                boundary.push_back(bf);
            }
        }

        for (int ct : cavity) tets_[ct].alive = false;

        std::map<std::pair<int, int>, std::pair<int, int>> half_open; // edge -> (tet, face)
        std::vector<int> created;
        created.reserve(boundary.size());
        for (const auto& bf : boundary) {
            Tet nt;
            nt.v = {bf.verts[0], bf.verts[1], bf.verts[2], pi};
            nt.nbr = {-1, -1, -1, -1};
            nt.nbr[3] = bf.outside;
            const int id = alloc(nt);
            created.push_back(id);
            if (bf.outside >= 0 && bf.outside_face >= 0)
                tets_[bf.outside].nbr[bf.outside_face] = id;
            // Side faces: opposite corner i contains p and the boundary edge
            // not using vertex i.
            for (int i = 0; i < 3; ++i) {
                const int a = bf.verts[(i + 1) % 3];
                const int b = bf.verts[(i + 2) % 3];
                const auto key = std::minmax(a, b);
                auto it = half_open.find(key);
                if (it == half_open.end()) {
                    half_open.emplace(key, std::make_pair(id, i));
                } else {
                    tets_[id].nbr[i] = it->second.first;
                    tets_[it->second.first].nbr[it->second.second] = id;
                    half_open.erase(it);
                }
            }
        }
        require(half_open.empty(), ErrorCode::DEGENERATE_INPUT,
                "cavity boundary is not a closed surface");
        last_ = created.empty() ? last_ : created.back();
    }

    int alloc(const Tet& t) {
        if (!free_.empty()) {
            int id = free_.back();
            free_.pop_back();
            tets_[id] = t;
            return id;
        }
        tets_.push_back(t);
        return static_cast<int>(tets_.size()) - 1;
    }

    TriangulateOptions opts_;
    std::vector<PredPoint> pts_;
    std::vector<Tet> tets_;
    std::vector<int> free_;
    int num_user_ = 0;
    int last_ = 0;
    double eps_node_ = 0;
};

} // namespace

TetMesh triangulate(std::span<const Vec3> points, const TriangulateOptions& opts) {
    require(points.size() >= 4, ErrorCode::DEGENERATE_INPUT,
            "triangulate needs at least 4 points");
    require(opts.labels.empty() || opts.labels.size() == points.size(),
            ErrorCode::INVALID_ARGUMENT, "label count does not match point count");

    Builder builder(points, opts);
    const InsertionOrder order = brio_sort(points, opts.seed);
    for (int idx : order.permutation) {
        builder.insert(idx);
        if (opts.validate_each_insert) {
            TetMesh partial;
            partial.nodes.assign(points.begin(), points.end());
            partial.tets = builder.finite_tets();
            partial.init_defaults();
            const auto rep = validate(partial);
            require(rep.ok(), ErrorCode::DEGENERATE_INPUT,
                    "mesh invalid after inserting point " + std::to_string(idx));
        }
    }

    TetMesh mesh;
    mesh.nodes.assign(points.begin(), points.end());
    mesh.tets = builder.finite_tets();
    require(!mesh.tets.empty(), ErrorCode::DEGENERATE_INPUT,
            "input points are coplanar; no tetrahedra produced");
    mesh.init_defaults();
    if (!opts.labels.empty()) mesh.node_labels = opts.labels;
    return mesh;
}

void insert_point(TetMesh& mesh, const Vec3& p, double eps_node) {
    require(!mesh.tets.empty(), ErrorCode::EMPTY_SET, "insert_point into an empty mesh");
    mesh.init_defaults();
    const Aabb box = mesh.bounding_box();
    const double eps = eps_node > 0 ? eps_node : 1e-8 * std::max(box.diagonal(), 1e-300);

    // Neighbor table from face adjacency.
    const int nt = mesh.num_tets();
    std::vector<std::array<int, 4>> nbr(nt, {-1, -1, -1, -1});
    {
        FaceAdjacency adj = build_adjacency(mesh);
        for (int t = 0; t < nt; ++t) {
            for (int lf = 0; lf < 4; ++lf) {
                const auto& k = mesh.tets[t];
                FaceKey key(k[kFace[lf][0]], k[kFace[lf][1]], k[kFace[lf][2]]);
                const FaceIncidence& inc = adj.at(key);
                nbr[t][lf] = (inc.tet[0] == t) ? inc.tet[1] : inc.tet[0];
            }
        }
    }

    auto pp = [&](int n) {
        PredPoint q;
        q.p = mesh.nodes[n];
        q.label = mesh.node_labels[n];
        return q;
    };
    PredPoint ins;
    ins.p = p;
    std::int64_t max_label = 0;
    for (auto l : mesh.node_labels) max_label = std::max(max_label, l);
    ins.label = max_label + 1;

    // Orientation walk from tet 0; crossing a hull face means p is outside.
    int cur = 0, arrived_from = -1, steps = 0;
    while (true) {
        require(++steps <= nt * 4 + 64, ErrorCode::OUT_OF_HULL, "location walk did not terminate");
        int next = -2;
        for (int lf = 0; lf < 4; ++lf) {
            if (arrived_from >= 0 && nbr[cur][lf] == arrived_from) continue;
            const auto& k = mesh.tets[cur];
            const int o = orient3d_sign(mesh.nodes[k[kFace[lf][0]]], mesh.nodes[k[kFace[lf][1]]],
                                        mesh.nodes[k[kFace[lf][2]]], p);
            if (o > 0) {
                next = nbr[cur][lf];
                break;
            }
        }
        if (next == -2) break; // contained
        require(next >= 0, ErrorCode::OUT_OF_HULL, "point lies outside the triangulation");
        arrived_from = cur;
        cur = next;
    }
    for (int v : mesh.tets[cur])
        require(dist(mesh.nodes[v], p) > eps, ErrorCode::DUPLICATE_POINT,
                "point coincides with node " + std::to_string(v));
    // On-hull points are not strictly inside.
    for (int lf = 0; lf < 4; ++lf) {
        if (nbr[cur][lf] >= 0) continue;
        const auto& k = mesh.tets[cur];
        const int o = orient3d_sign(mesh.nodes[k[kFace[lf][0]]], mesh.nodes[k[kFace[lf][1]]],
                                    mesh.nodes[k[kFace[lf][2]]], p);
        require(o != 0, ErrorCode::OUT_OF_HULL, "point lies on the hull boundary");
    }

    auto in_sphere = [&](int t) {
        const auto& k = mesh.tets[t];
        return insphere_perturbed(pp(k[0]), pp(k[1]), pp(k[2]), pp(k[3]), ins) == Side::INSIDE;
    };

    int seed = -1;
    if (in_sphere(cur)) seed = cur;
    for (int lf = 0; lf < 4 && seed < 0; ++lf)
        if (nbr[cur][lf] >= 0 && in_sphere(nbr[cur][lf])) seed = nbr[cur][lf];
    require(seed >= 0, ErrorCode::DEGENERATE_INPUT, "empty insertion cavity");

    std::deque<int> queue{seed};
    std::unordered_set<int> cavity{seed};
    while (!queue.empty()) {
        int t = queue.front();
        queue.pop_front();
        for (int lf = 0; lf < 4; ++lf) {
            int nb = nbr[t][lf];
            if (nb < 0 || cavity.count(nb)) continue;
            if (in_sphere(nb)) {
                cavity.insert(nb);
                queue.push_back(nb);
            }
        }
    }

    // Rebuild: keep non-cavity tets, cone p over the cavity boundary.
    const int new_node = mesh.num_nodes();
    mesh.nodes.push_back(p);
    mesh.node_flags.push_back(NodeFlag::FEM_NODE);
    mesh.node_labels.push_back(ins.label);

    std::vector<std::array<int, 4>> new_tets;
    std::vector<Region> new_region;
    for (int t = 0; t < nt; ++t) {
        if (cavity.count(t)) continue;
        new_tets.push_back(mesh.tets[t]);
        new_region.push_back(t < static_cast<int>(mesh.region.size()) ? mesh.region[t]
                                                                      : Region::CONTINUUM);
    }
    for (int t : cavity) {
        const auto& k = mesh.tets[t];
        const Region reg = t < static_cast<int>(mesh.region.size()) ? mesh.region[t]
                                                                    : Region::CONTINUUM;
        for (int lf = 0; lf < 4; ++lf) {
            const int nb = nbr[t][lf];
            if (nb >= 0 && cavity.count(nb)) continue;
            new_tets.push_back({k[kFace[lf][0]], k[kFace[lf][2]], k[kFace[lf][1]], new_node});
            new_region.push_back(reg);
        }
    }
    mesh.tets = std::move(new_tets);
    mesh.region = std::move(new_region);
}

} // namespace actk
