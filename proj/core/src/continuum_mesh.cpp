#include <actk/adapt.hpp>
#include <actk/continuum_mesh.hpp>
#include <actk/delaunay.hpp>
#include <actk/errors.hpp>
#include <actk/predicates.hpp>
#include <actk/spatial.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace actk {

namespace {

void orient_outward(SurfaceMesh& surf, const Vec3& inside_point) {
    for (auto& tri : surf.tris) {
        const double v = tet_volume(surf.nodes[tri[0]], surf.nodes[tri[1]], surf.nodes[tri[2]],
                                    inside_point);
        if (v > 0) std::swap(tri[1], tri[2]);
    }
}

SurfaceMesh box_boundary(const DomainSpec& spec) {
    const double H = spec.half_extent;
    const int n = std::max(1, static_cast<int>(std::lround(2.0 * H / spec.h_bdry)));
    const double step = 2.0 * H / n;

    SurfaceMesh surf;
    std::map<std::array<int, 3>, int> grid_node;
    auto node_at = [&](int i, int j, int k) {
        auto key = std::array<int, 3>{i, j, k};
        auto it = grid_node.find(key);
        if (it != grid_node.end()) return it->second;
        const int id = surf.num_nodes();
        surf.nodes.push_back(spec.center + Vec3{-H + i * step, -H + j * step, -H + k * step});
        surf.parent_node.push_back(id);
        surf.node_labels.push_back(id);
        grid_node.emplace(key, id);
        return id;
    };

    // Two triangles per face quad; quads enumerated per box side.
    auto emit_quad = [&](int a, int b, int c, int d) {
        surf.tris.push_back({a, b, c});
        surf.tris.push_back({a, c, d});
    };
    for (int fixed = 0; fixed < 3; ++fixed)
        for (int side = 0; side < 2; ++side) {
            const int w = side * n;
            for (int u = 0; u < n; ++u)
                for (int v = 0; v < n; ++v) {
                    std::array<int, 3> c00{}, c10{}, c11{}, c01{};
                    c00[fixed] = w;
                    c00[(fixed + 1) % 3] = u;
                    c00[(fixed + 2) % 3] = v;
                    c10 = c00;
                    c10[(fixed + 1) % 3] = u + 1;
                    c11 = c10;
                    c11[(fixed + 2) % 3] = v + 1;
                    c01 = c00;
                    c01[(fixed + 2) % 3] = v + 1;
                    emit_quad(node_at(c00[0], c00[1], c00[2]), node_at(c10[0], c10[1], c10[2]),
                              node_at(c11[0], c11[1], c11[2]), node_at(c01[0], c01[1], c01[2]));
                }
        }
    orient_outward(surf, spec.center);
    return surf;
}

SurfaceMesh sphere_boundary(const DomainSpec& spec) {
    // Icosahedron subdivided until edges fit under h_bdry, then projected.
    const double R = spec.half_extent;
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> nodes = {{-1, phi, 0}, {1, phi, 0},   {-1, -phi, 0}, {1, -phi, 0},
                               {0, -1, phi}, {0, 1, phi},   {0, -1, -phi}, {0, 1, -phi},
                               {phi, 0, -1}, {phi, 0, 1},   {-phi, 0, -1}, {-phi, 0, 1}};
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (auto& p : nodes) p = p / norm(p);

    // Unit icosahedron edge length is ~1.0515; halve until R*edge <= h.
    double edge = dist(nodes[0], nodes[11]);
    while (R * edge > spec.h_bdry) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = 0.5 * (nodes[a] + nodes[b]);
            m = m / norm(m);
            nodes.push_back(m);
            const int id = static_cast<int>(nodes.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
        edge *= 0.5;
    }

    SurfaceMesh surf;
    surf.nodes.reserve(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        surf.nodes.push_back(spec.center + R * nodes[i]);
        surf.parent_node.push_back(static_cast<int>(i));
        surf.node_labels.push_back(static_cast<int>(i));
    }
    surf.tris = std::move(tris);
    orient_outward(surf, spec.center);
    return surf;
}

} // namespace

SurfaceMesh init_boundary(const DomainSpec& spec) {
    require(spec.h_bdry > 0, ErrorCode::INVALID_ARGUMENT, "h_bdry must be positive");
    require(spec.half_extent > 0, ErrorCode::INVALID_ARGUMENT, "domain extent must be positive");
    return spec.shape == DomainSpec::Shape::BOX ? box_boundary(spec) : sphere_boundary(spec);
}

bool point_inside_surface(const Vec3& p, const SurfaceMesh& surf, std::uint64_t seed) {
    Aabb box;
    for (const auto& q : surf.nodes) box.expand(q);
    if (!box.contains(p, 0.0)) return false;
    const double reach = 10.0 * std::max(box.diagonal(), 1.0);

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x2545F4914F6CDD1Dull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vec3 dir{u(rng), u(rng), u(rng)};
        if (norm(dir) < 1e-3) continue;
        const Vec3 far = p + (reach / norm(dir)) * dir;
        Aabb seg;
        seg.expand(p);
        seg.expand(far);

        int crossings = 0;
        bool degenerate = false;
        for (const auto& tri : surf.tris) {
            const Vec3 &a = surf.nodes[tri[0]], &b = surf.nodes[tri[1]], &c = surf.nodes[tri[2]];
            Aabb tb;
            tb.expand(a);
            tb.expand(b);
            tb.expand(c);
            if (!seg.overlaps(tb)) continue;
            const int oq = orient3d_sign(a, b, c, p);
            if (oq == 0) {
                if (coplanar_point_in_triangle(p, a, b, c)) return true; // on the surface
                continue; // coplanar but outside the triangle: no crossing at the start point
            }
            const int of = orient3d_sign(a, b, c, far);
            if (of == 0) {
                degenerate = true;
                break;
            }
            if (oq == of) continue;
            const int s1 = orient3d_sign(p, far, a, b);
            const int s2 = orient3d_sign(p, far, b, c);
            const int s3 = orient3d_sign(p, far, c, a);
            if (s1 == 0 || s2 == 0 || s3 == 0) {
                degenerate = true;
                break;
            }
            if (s1 == s2 && s2 == s3) ++crossings;
        }
        if (!degenerate) return (crossings % 2) == 1;
    }
    throw Error(ErrorCode::BAD_GEOMETRY, "parity test failed to find a non-degenerate ray");
}

SurfaceMesh exterior_component(const SurfaceMesh& surf) {
    if (surf.tris.empty()) return surf;
    // Union components over shared edges.
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (int t = 0; t < surf.num_tris(); ++t)
        for (int e = 0; e < 3; ++e) {
            auto key = std::minmax(surf.tris[t][e], surf.tris[t][(e + 1) % 3]);
            edge_tris[key].push_back(t);
        }
    std::vector<int> comp(surf.num_tris(), -1);
    int ncomp = 0;
    for (int t = 0; t < surf.num_tris(); ++t) {
        if (comp[t] >= 0) continue;
        std::vector<int> stack{t};
        comp[t] = ncomp;
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            for (int e = 0; e < 3; ++e) {
                auto key = std::minmax(surf.tris[cur][e], surf.tris[cur][(e + 1) % 3]);
                for (int nb : edge_tris[key])
                    if (comp[nb] < 0) {
                        comp[nb] = ncomp;
                        stack.push_back(nb);
                    }
            }
        }
        ncomp++;
    }
    if (ncomp == 1) return surf;

    // The exterior component owns the lexicographically extreme vertex.
    int extreme = 0;
    for (int n = 1; n < surf.num_nodes(); ++n) {
        const Vec3 &a = surf.nodes[n], &b = surf.nodes[extreme];
        if (std::tie(a.x, a.y, a.z) > std::tie(b.x, b.y, b.z)) extreme = n;
    }
    int keep = -1;
    for (int t = 0; t < surf.num_tris() && keep < 0; ++t)
        for (int i = 0; i < 3; ++i)
            if (surf.tris[t][i] == extreme) keep = comp[t];

    SurfaceMesh out;
    std::unordered_map<int, int> remap;
    for (int t = 0; t < surf.num_tris(); ++t) {
        if (comp[t] != keep) continue;
        std::array<int, 3> tri{};
        for (int i = 0; i < 3; ++i) {
            const int v = surf.tris[t][i];
            auto [it, inserted] = remap.emplace(v, out.num_nodes());
            if (inserted) {
                out.nodes.push_back(surf.nodes[v]);
                out.parent_node.push_back(surf.parent_node[v]);
                out.node_labels.push_back(surf.node_labels[v]);
            }
            tri[i] = it->second;
        }
        out.tris.push_back(tri);
    }
    return out;
}

namespace {

struct ShellNodes {
    std::vector<Vec3> points;
    std::vector<std::int64_t> labels;
    std::vector<int> origin; // 0 outer, 1 inner, 2 interior
};

ShellNodes assemble_nodes(const SurfaceMesh& outer, const SurfaceMesh& inner,
                          std::span<const Vec3> interior,
                          std::span<const std::int64_t> interior_labels, double clearance,
                          std::vector<int>& dropped) {
    ShellNodes out;
    std::unordered_set<std::int64_t> seen;
    for (int i = 0; i < outer.num_nodes(); ++i) {
        if (!seen.insert(outer.node_labels[i]).second) continue;
        out.points.push_back(outer.nodes[i]);
        out.labels.push_back(outer.node_labels[i]);
        out.origin.push_back(0);
    }
    for (int i = 0; i < inner.num_nodes(); ++i) {
        if (!seen.insert(inner.node_labels[i]).second) continue;
        out.points.push_back(inner.nodes[i]);
        out.labels.push_back(inner.node_labels[i]);
        out.origin.push_back(1);
    }
    std::optional<KdTree> inner_tree;
    if (inner.num_nodes() > 0 && clearance > 0) inner_tree.emplace(inner.nodes);
    for (size_t i = 0; i < interior.size(); ++i) {
        if (inner_tree) {
            const int nb = inner_tree->nearest(interior[i]);
            if (nb >= 0 && dist(inner.nodes[nb], interior[i]) < clearance) {
                dropped.push_back(static_cast<int>(i));
                continue;
            }
        }
        if (!seen.insert(interior_labels[i]).second) {
            dropped.push_back(static_cast<int>(i));
            continue;
        }
        out.points.push_back(interior[i]);
        out.labels.push_back(interior_labels[i]);
        out.origin.push_back(2);
    }
    return out;
}

} // namespace

MeshBetweenResult mesh_between(const SurfaceMesh& outer, const SurfaceMesh& inner,
                               std::span<const Vec3> interior_nodes,
                               const MeshBetweenOptions& opts) {
    require(outer.num_tris() > 0, ErrorCode::INVALID_ARGUMENT, "outer surface is empty");

    // Outer must enclose inner.
    if (inner.num_nodes() > 0) {
        Aabb ob, ib;
        for (const auto& p : outer.nodes) ob.expand(p);
        for (const auto& p : inner.nodes) ib.expand(p);
        require(ob.contains(ib.lo) && ob.contains(ib.hi), ErrorCode::BAD_GEOMETRY,
                "outer surface does not enclose the inner surface");
    }

    std::vector<std::int64_t> ilabels(interior_nodes.size());
    if (!opts.interior_labels.empty()) {
        require(opts.interior_labels.size() == interior_nodes.size(), ErrorCode::INVALID_ARGUMENT,
                "interior label count mismatch");
        ilabels = opts.interior_labels;
    } else {
        std::int64_t base = 0;
        for (auto l : outer.node_labels) base = std::max(base, l + 1);
        for (auto l : inner.node_labels) base = std::max(base, l + 1);
        for (size_t i = 0; i < ilabels.size(); ++i) ilabels[i] = base + static_cast<std::int64_t>(i);
    }

    // Faces shared by both surfaces (zero-gap contact) are not expected in
    // the shell.
    std::set<std::array<std::int64_t, 3>> shared;
    {
        std::set<std::array<std::int64_t, 3>> outer_faces;
        auto key_of = [](const SurfaceMesh& s, const std::array<int, 3>& t) {
            std::array<std::int64_t, 3> k{s.node_labels[t[0]], s.node_labels[t[1]],
                                          s.node_labels[t[2]]};
            std::sort(k.begin(), k.end());
            return k;
        };
        for (const auto& t : outer.tris) outer_faces.insert(key_of(outer, t));
        for (const auto& t : inner.tris)
            if (outer_faces.count(key_of(inner, t))) shared.insert(key_of(inner, t));
    }

    MeshBetweenResult result;
    std::vector<Vec3> interior(interior_nodes.begin(), interior_nodes.end());
    std::vector<std::int64_t> labels = ilabels;

    for (int pass = 0; pass <= opts.recovery_passes + 1; ++pass) {
        const bool minimal = pass > opts.recovery_passes;
        if (minimal) {
            interior.clear();
            labels.clear();
            result.used_minimal_fallback = true;
        }
        std::vector<int> dropped;
        ShellNodes nodes = assemble_nodes(outer, inner, interior, labels, opts.clearance, dropped);
        for (int d : dropped) result.dropped_interior.push_back(d);

        TriangulateOptions topt;
        topt.labels = nodes.labels;
        topt.seed = opts.seed;
        TetMesh dt = triangulate(nodes.points, topt);

        // Carve: drop tets inside the inner surface (and outside a
        // non-convex outer).
        std::vector<std::array<int, 4>> kept;
        for (int t = 0; t < dt.num_tets(); ++t) {
            const Vec3 c = dt.tet_centroid(t);
            if (inner.num_tris() > 0 && point_inside_surface(c, inner, opts.seed)) continue;
            if (!opts.outer_is_convex && !point_inside_surface(c, outer, opts.seed)) continue;
            kept.push_back(dt.tets[t]);
        }
        dt.tets = std::move(kept);
        dt.region.assign(dt.tets.size(), Region::CONTINUUM);

        // Inner conformity: every non-shared inner face must bound exactly
        // one shell tet.
        std::unordered_map<std::int64_t, int> by_label;
        for (int n = 0; n < dt.num_nodes(); ++n) by_label[dt.node_labels[n]] = n;
        std::unordered_map<FaceKey, int, FaceKeyHash> face_count;
        static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
        for (const auto& k : dt.tets)
            for (const auto& f : kFace) face_count[FaceKey(k[f[0]], k[f[1]], k[f[2]])]++;

        auto face_key = [&](const SurfaceMesh& s, const std::array<int, 3>& tri) {
            return FaceKey(by_label.at(s.node_labels[tri[0]]), by_label.at(s.node_labels[tri[1]]),
                           by_label.at(s.node_labels[tri[2]]));
        };
        std::vector<int> missing;
        for (int ft = 0; ft < inner.num_tris(); ++ft) {
            std::array<std::int64_t, 3> lk{inner.node_labels[inner.tris[ft][0]],
                                           inner.node_labels[inner.tris[ft][1]],
                                           inner.node_labels[inner.tris[ft][2]]};
            std::sort(lk.begin(), lk.end());
            if (shared.count(lk)) continue;
            auto it = face_count.find(face_key(inner, inner.tris[ft]));
            if (it == face_count.end() || it->second != 1) missing.push_back(ft);
        }

        if (!missing.empty()) {
            if (minimal)
                throw Error(ErrorCode::BOUNDARY_NOT_RECOVERED,
                            std::to_string(missing.size()) + " inner faces unrecovered");
            // Recovery: drop interior nodes near the missing faces and retry.
            result.recovery_passes_used = pass + 1;
            std::vector<char> drop(interior.size(), 0);
            for (int ft : missing) {
                const auto& tri = inner.tris[ft];
                const Vec3 c =
                    (inner.nodes[tri[0]] + inner.nodes[tri[1]] + inner.nodes[tri[2]]) / 3.0;
                double r = 0;
                for (int i = 0; i < 3; ++i) r = std::max(r, dist(inner.nodes[tri[i]], c));
                for (size_t i = 0; i < interior.size(); ++i)
                    if (dist(interior[i], c) < 2.5 * r) drop[i] = 1;
            }
            std::vector<Vec3> ni;
            std::vector<std::int64_t> nl;
            for (size_t i = 0; i < interior.size(); ++i)
                if (!drop[i]) {
                    ni.push_back(interior[i]);
                    nl.push_back(labels[i]);
                }
            if (ni.size() == interior.size()) {
                // Nothing left to drop near the faces; go minimal next.
                interior.clear();
                labels.clear();
            } else {
                interior = std::move(ni);
                labels = std::move(nl);
            }
            continue;
        }

        if (opts.require_outer_conformity) {
            for (int ft = 0; ft < outer.num_tris(); ++ft) {
                std::array<std::int64_t, 3> lk{outer.node_labels[outer.tris[ft][0]],
                                               outer.node_labels[outer.tris[ft][1]],
                                               outer.node_labels[outer.tris[ft][2]]};
                std::sort(lk.begin(), lk.end());
                if (shared.count(lk)) continue;
                auto it = face_count.find(face_key(outer, outer.tris[ft]));
                if (it == face_count.end() || it->second != 1) result.missing_outer.push_back(lk);
            }
        }

        dt.node_flags.assign(dt.num_nodes(), NodeFlag::FEM_NODE);
        result.mesh = std::move(dt);
        return result;
    }
    throw Error(ErrorCode::BOUNDARY_NOT_RECOVERED, "mesh_between failed unexpectedly");
}

QmrStats qmr_refine(TetMesh& mesh, const QmrOptions& opts) {
    mesh.init_defaults();
    QmrStats stats;
    if (opts.q_min <= 0 && opts.grading <= 0) return stats;

    auto protected_tet = [&](int t) {
        // Interface-touching tets keep the moat geometry; boundary-touching
        // tets may still be split but their faces never move.
        for (int v : mesh.tets[t])
            if (mesh.node_flags[v] == NodeFlag::ATOM) return true;
        return false;
    };

    for (int pass = 0; pass < opts.max_passes; ++pass) {
        stats.passes = pass + 1;
        require(mesh.num_nodes() <= opts.node_budget, ErrorCode::BUDGET_EXCEEDED,
                "qmr_refine exceeded the node budget");

        // Movable nodes: interior FEM nodes (not on any boundary face, not
        // flagged atom or domain boundary).
        std::vector<char> on_boundary(mesh.num_nodes(), 0);
        {
            const SurfaceMesh bnd = extract_boundary(mesh);
            for (int pn : bnd.parent_node) on_boundary[pn] = 1;
        }
        std::vector<int> movable;
        for (int n = 0; n < mesh.num_nodes(); ++n)
            if (!on_boundary[n] && mesh.node_flags[n] == NodeFlag::FEM_NODE) movable.push_back(n);
        stats.smooth_moves += laplacian_smooth(mesh, movable, 1);

        // Quality sweep: swap first, split as a fallback.
        int changed = 0;
        std::vector<int> bad;
        for (int t = 0; t < mesh.num_tets(); ++t)
            if (!protected_tet(t) && element_quality(mesh, t) < opts.q_min) bad.push_back(t);
        std::sort(bad.begin(), bad.end(), [&](int a, int b) {
            return element_quality(mesh, a) < element_quality(mesh, b);
        });
        std::unordered_set<int> stale;
        std::vector<int> to_split;
        for (int t : bad) {
            if (stale.count(t)) continue;
            const auto k = mesh.tets[t];
            static constexpr int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
            bool swapped = false;
            for (const auto& e : kEdges) {
                SwapOptions sopt;
                sopt.accept_factor = opts.accept_factor;
                auto res = try_edge_swap(mesh, k[e[0]], k[e[1]], sopt);
                if (res.swapped) {
                    swapped = true;
                    stats.swaps++;
                    ++changed;
                    stale.clear(); // indices shifted; restart bookkeeping
                    for (int tt : bad) stale.insert(tt);
                    break;
                }
            }
            if (!swapped) to_split.push_back(t);
        }
        // Split what swapping could not fix (ids stay valid while splitting).
        for (int t : to_split) {
            if (stale.count(t)) continue;
            if (t >= mesh.num_tets() || element_quality(mesh, t) >= opts.q_min) continue;
            split_barycentric(mesh, t);
            stats.splits++;
            ++changed;
        }

        // Grading: split the larger of face-adjacent tets whose size ratio
        // exceeds the bound.
        if (opts.grading > 0) {
            const FaceAdjacency adj = build_adjacency(mesh);
            std::vector<char> oversize(mesh.num_tets(), 0);
            for (const auto& [key, inc] : adj) {
                if (inc.count() != 2) continue;
                const int t0 = inc.tet[0], t1 = inc.tet[1];
                auto size_of = [&](int t) {
                    const auto p = mesh.tet_points(t);
                    return std::cbrt(std::fabs(tet_volume(p[0], p[1], p[2], p[3])));
                };
                const double s0 = size_of(t0), s1 = size_of(t1);
                if (s0 > opts.grading * s1 && !protected_tet(t0)) oversize[t0] = 1;
                if (s1 > opts.grading * s0 && !protected_tet(t1)) oversize[t1] = 1;
            }
            for (int t = mesh.num_tets() - 1; t >= 0; --t)
                if (oversize[t]) {
                    split_barycentric(mesh, t);
                    stats.splits++;
                    ++changed;
                }
        }

        if (changed == 0) break;
    }
    return stats;
}

} // namespace actk
