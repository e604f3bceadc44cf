#include <actk/errors.hpp>
#include <actk/mesh.hpp>
#include <actk/predicates.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace actk {

Aabb TetMesh::bounding_box() const {
    Aabb box;
    for (const auto& p : nodes) box.expand(p);
    return box;
}

void TetMesh::init_defaults() {
    region.resize(tets.size(), Region::CONTINUUM);
    node_flags.resize(nodes.size(), NodeFlag::FEM_NODE);
    if (node_labels.size() != nodes.size()) {
        node_labels.resize(nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i) node_labels[i] = static_cast<std::int64_t>(i);
    }
}

double tet_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    return dot(cross(b - a, c - a), d - a) / 6.0;
}

double element_quality(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const double vol = std::fabs(tet_volume(a, b, c, d));
    if (vol == 0.0) return 0.0;
    const double s2 = norm2(b - a) + norm2(c - a) + norm2(d - a) + norm2(c - b) + norm2(d - b) +
                      norm2(d - c);
    if (s2 <= 0.0) return 0.0;
    const double q = 72.0 * std::sqrt(3.0) * vol / std::pow(s2, 1.5);
    return std::min(q, 1.0);
}

double element_quality(const TetMesh& mesh, int t) {
    auto p = mesh.tet_points(t);
    return element_quality(p[0], p[1], p[2], p[3]);
}

double set_quality(const TetMesh& mesh, std::span<const int> tet_ids) {
    require(!tet_ids.empty(), ErrorCode::EMPTY_SET, "set_quality of an empty tet set");
    double q = 1.0;
    for (int t : tet_ids) q = std::min(q, element_quality(mesh, t));
    return q;
}

Circumsphere circumsphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    // Solve 2 (x_i - a) . c = |x_i - a|^2 for the center offset from a.
    const Vec3 u = b - a, v = c - a, w = d - a;
    Mat3 M;
    M(0, 0) = u.x; M(0, 1) = u.y; M(0, 2) = u.z;
    M(1, 0) = v.x; M(1, 1) = v.y; M(1, 2) = v.z;
    M(2, 0) = w.x; M(2, 1) = w.y; M(2, 2) = w.z;
    const double dt = det(M);
    require(dt != 0.0 && std::isfinite(dt), ErrorCode::DEGENERATE_TET,
            "circumsphere of a degenerate tet");
    const Vec3 rhs{0.5 * norm2(u), 0.5 * norm2(v), 0.5 * norm2(w)};
    const Vec3 off = inverse(M) * rhs;
    return {a + off, norm(off)};
}

Circumsphere circumsphere(const TetMesh& mesh, int t) {
    auto p = mesh.tet_points(t);
    return circumsphere(p[0], p[1], p[2], p[3]);
}

double circumradius_safe(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 u = b - a, v = c - a, w = d - a;
    Mat3 M;
    M(0, 0) = u.x; M(0, 1) = u.y; M(0, 2) = u.z;
    M(1, 0) = v.x; M(1, 1) = v.y; M(1, 2) = v.z;
    M(2, 0) = w.x; M(2, 1) = w.y; M(2, 2) = w.z;
    const double dt = det(M);
    if (dt == 0.0 || !std::isfinite(dt)) return std::numeric_limits<double>::infinity();
    const Vec3 rhs{0.5 * norm2(u), 0.5 * norm2(v), 0.5 * norm2(w)};
    const double r = norm(inverse(M) * rhs);
    return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

FaceAdjacency build_adjacency(const TetMesh& mesh) {
    static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    FaceAdjacency adj;
    adj.reserve(mesh.tets.size() * 2);
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const auto& k = mesh.tets[t];
        for (const auto& f : kFace) {
            FaceKey key(k[f[0]], k[f[1]], k[f[2]]);
            auto& inc = adj[key];
            if (inc.tet[0] < 0) {
                inc.tet[0] = t;
            } else if (inc.tet[1] < 0) {
                inc.tet[1] = t;
            } else {
                throw Error(ErrorCode::NON_MANIFOLD,
                            "face shared by three or more tets near tet " + std::to_string(t));
            }
        }
    }
    return adj;
}

namespace {

// Outward-oriented boundary triangle of tet t opposite to local corner lf.
std::array<int, 3> oriented_face(const TetMesh& mesh, int t, int lf) {
    static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    const auto& k = mesh.tets[t];
    std::array<int, 3> tri{k[kFace[lf][0]], k[kFace[lf][1]], k[kFace[lf][2]]};
    // For a positively oriented tet the faces above point outward already;
    // fall back to a volume test for robustness on unoriented input.
    const Vec3& a = mesh.nodes[tri[0]];
    const Vec3& b = mesh.nodes[tri[1]];
    const Vec3& c = mesh.nodes[tri[2]];
    const Vec3& opp = mesh.nodes[k[lf]];
    if (tet_volume(a, b, c, opp) > 0.0) std::swap(tri[1], tri[2]);
    return tri;
}

} // namespace

SurfaceMesh extract_boundary(const TetMesh& mesh, std::span<const char> tet_in_region) {
    static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    // A face is on the region boundary iff exactly one incident tet is inside
    // the filter.
    std::unordered_map<FaceKey, std::pair<int, int>, FaceKeyHash> faces; // (inside tet, local face)
    std::unordered_map<FaceKey, int, FaceKeyHash> counts;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        if (!tet_in_region[t]) continue;
        const auto& k = mesh.tets[t];
        for (int lf = 0; lf < 4; ++lf) {
            FaceKey key(k[kFace[lf][0]], k[kFace[lf][1]], k[kFace[lf][2]]);
            auto [it, inserted] = counts.emplace(key, 1);
            if (inserted) {
                faces[key] = {t, lf};
            } else {
                it->second++;
            }
        }
    }

    SurfaceMesh surf;
    std::unordered_map<int, int> node_map;
    std::vector<std::array<int, 3>> tris;
    for (const auto& [key, tl] : faces) {
        if (counts[key] != 1) continue; // interior to the region
        tris.push_back(oriented_face(mesh, tl.first, tl.second));
    }
    // Deterministic output order regardless of hash iteration.
    std::sort(tris.begin(), tris.end());
    for (const auto& tri : tris) {
        std::array<int, 3> local{};
        for (int i = 0; i < 3; ++i) {
            auto [it, inserted] = node_map.emplace(tri[i], surf.num_nodes());
            if (inserted) {
                surf.nodes.push_back(mesh.nodes[tri[i]]);
                surf.parent_node.push_back(tri[i]);
                surf.node_labels.push_back(tri[i] < static_cast<int>(mesh.node_labels.size())
                                               ? mesh.node_labels[tri[i]]
                                               : tri[i]);
            }
            local[i] = it->second;
        }
        surf.tris.push_back(local);
    }
    return surf;
}

SurfaceMesh extract_boundary(const TetMesh& mesh, std::optional<Region> region_filter) {
    std::vector<char> in(mesh.num_tets(), 1);
    if (region_filter) {
        for (int t = 0; t < mesh.num_tets(); ++t)
            in[t] = (t < static_cast<int>(mesh.region.size()) && mesh.region[t] == *region_filter)
                        ? 1 : 0;
    }
    return extract_boundary(mesh, std::span<const char>(in));
}

ValidationReport validate(const TetMesh& mesh, double eps_node) {
    ValidationReport rep;
    const int nn = mesh.num_nodes();
    const int nt = mesh.num_tets();

    for (int t = 0; t < nt; ++t) {
        const auto& k = mesh.tets[t];
        bool bad_index = false;
        for (int i = 0; i < 4; ++i)
            if (k[i] < 0 || k[i] >= nn) bad_index = true;
        if (bad_index) {
            rep.violations.push_back({ViolationKind::BAD_INDEX, t, "tet references invalid node"});
            continue;
        }
        auto p = mesh.tet_points(t);
        if (orient3d_sign(p[0], p[1], p[2], p[3]) <= 0)
            rep.violations.push_back(
                {ViolationKind::ORIENTATION, t, "non-positive signed volume"});
    }

    // Duplicate nodes within the coincidence tolerance, found with a uniform
    // grid of cell size eps so only nearby pairs are compared.
    if (nn > 1) {
        Aabb box = mesh.bounding_box();
        double eps = eps_node > 0 ? eps_node : 1e-8 * box.diagonal();
        if (eps > 0) {
            std::map<std::array<long long, 3>, std::vector<int>> grid;
            auto cell_of = [&](const Vec3& p) {
                return std::array<long long, 3>{static_cast<long long>(std::floor(p.x / eps)),
                                                static_cast<long long>(std::floor(p.y / eps)),
                                                static_cast<long long>(std::floor(p.z / eps))};
            };
            for (int i = 0; i < nn; ++i) grid[cell_of(mesh.nodes[i])].push_back(i);
            for (int i = 0; i < nn; ++i) {
                auto c = cell_of(mesh.nodes[i]);
                for (long long dx = -1; dx <= 1; ++dx)
                    for (long long dy = -1; dy <= 1; ++dy)
                        for (long long dz = -1; dz <= 1; ++dz) {
                            auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
                            if (it == grid.end()) continue;
                            for (int j : it->second)
                                if (j > i && dist(mesh.nodes[i], mesh.nodes[j]) <= eps)
                                    rep.violations.push_back({ViolationKind::DUPLICATE_NODE, j,
                                                              "coincides with node " +
                                                                  std::to_string(i)});
                        }
            }
        }
    }

    try {
        build_adjacency(mesh);
    } catch (const Error&) {
        rep.violations.push_back({ViolationKind::NON_MANIFOLD, -1, "face shared by >2 tets"});
    }

    if (!mesh.region.empty() && static_cast<int>(mesh.region.size()) != nt)
        rep.violations.push_back({ViolationKind::REGION_SIZE, -1, "region tags do not cover tets"});

    if (!mesh.region.empty() && !mesh.node_flags.empty()) {
        for (int t = 0; t < nt && t < static_cast<int>(mesh.region.size()); ++t) {
            if (mesh.region[t] != Region::ATOMISTIC) continue;
            for (int i = 0; i < 4; ++i) {
                int n = mesh.tets[t][i];
                if (n >= 0 && n < static_cast<int>(mesh.node_flags.size()) &&
                    mesh.node_flags[n] != NodeFlag::ATOM) {
                    rep.violations.push_back(
                        {ViolationKind::ATOM_FLAG, t, "atomistic tet with non-atom node"});
                    break;
                }
            }
        }
    }
    return rep;
}

TetMesh fuse_meshes(std::span<const TetMesh* const> parts) {
    TetMesh fused;
    std::unordered_map<std::int64_t, int> by_label;
    auto flag_rank = [](NodeFlag f) {
        return f == NodeFlag::ATOM ? 2 : (f == NodeFlag::DOMAIN_BOUNDARY ? 1 : 0);
    };
    for (const TetMesh* part : parts) {
        std::vector<int> remap(part->num_nodes(), -1);
        for (int n = 0; n < part->num_nodes(); ++n) {
            const std::int64_t label = n < static_cast<int>(part->node_labels.size())
                                           ? part->node_labels[n]
                                           : n;
            const NodeFlag flag = n < static_cast<int>(part->node_flags.size())
                                      ? part->node_flags[n]
                                      : NodeFlag::FEM_NODE;
            auto it = by_label.find(label);
            if (it == by_label.end()) {
                const int id = fused.num_nodes();
                fused.nodes.push_back(part->nodes[n]);
                fused.node_labels.push_back(label);
                fused.node_flags.push_back(flag);
                by_label.emplace(label, id);
                remap[n] = id;
            } else {
                remap[n] = it->second;
                if (flag_rank(flag) > flag_rank(fused.node_flags[it->second]))
                    fused.node_flags[it->second] = flag;
            }
        }
        for (int t = 0; t < part->num_tets(); ++t) {
            const auto& k = part->tets[t];
            fused.tets.push_back({remap[k[0]], remap[k[1]], remap[k[2]], remap[k[3]]});
            fused.region.push_back(t < static_cast<int>(part->region.size()) ? part->region[t]
                                                                             : Region::CONTINUUM);
        }
    }
    return fused;
}

TetMesh submesh(const TetMesh& mesh, std::span<const int> tet_ids) {
    TetMesh out;
    std::unordered_map<int, int> remap;
    for (int t : tet_ids) {
        std::array<int, 4> q{};
        for (int i = 0; i < 4; ++i) {
            const int v = mesh.tets[t][i];
            auto [it, inserted] = remap.emplace(v, out.num_nodes());
            if (inserted) {
                out.nodes.push_back(mesh.nodes[v]);
                out.node_labels.push_back(v < static_cast<int>(mesh.node_labels.size())
                                              ? mesh.node_labels[v]
                                              : v);
                out.node_flags.push_back(v < static_cast<int>(mesh.node_flags.size())
                                             ? mesh.node_flags[v]
                                             : NodeFlag::FEM_NODE);
            }
            q[i] = it->second;
        }
        out.tets.push_back(q);
        out.region.push_back(t < static_cast<int>(mesh.region.size()) ? mesh.region[t]
                                                                      : Region::CONTINUUM);
    }
    return out;
}

QualityReport quality_report(const TetMesh& mesh) {
    QualityReport rep;
    rep.per_tet_q.reserve(mesh.tets.size());
    rep.min_q = mesh.tets.empty() ? 0.0 : 1.0;
    int high = 0;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const double q = element_quality(mesh, t);
        rep.per_tet_q.push_back(q);
        rep.min_q = std::min(rep.min_q, q);
        int bin = q <= 0.1 ? 0 : static_cast<int>(std::ceil(q * 10.0)) - 1;
        bin = std::clamp(bin, 0, 9);
        rep.histogram[bin]++;
        if (q > 0.9) ++high;
    }
    rep.fraction_high = mesh.tets.empty() ? 0.0 : static_cast<double>(high) / mesh.num_tets();
    return rep;
}

} // namespace actk
