#include <actk/adapt.hpp>
#include <actk/atomistic_mesh.hpp>
#include <actk/continuum_mesh.hpp>
#include <actk/delaunay.hpp>
#include <actk/errors.hpp>
#include <actk/predicates.hpp>
#include <actk/spatial.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace actk {

namespace {

constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

std::int64_t next_label(const TetMesh& mesh) {
    std::int64_t m = 0;
    for (auto l : mesh.node_labels) m = std::max(m, l);
    return m + 1;
}

} // namespace

std::array<int, 4> split_barycentric(TetMesh& mesh, int t) {
    mesh.init_defaults();
    const auto k = mesh.tets[t];
    const Vec3 bary = mesh.tet_centroid(t);
    const int nb = mesh.num_nodes();
    mesh.nodes.push_back(bary);
    mesh.node_flags.push_back(NodeFlag::FEM_NODE);
    mesh.node_labels.push_back(next_label(mesh));

    const Region reg = mesh.region[t];
    std::array<int, 4> children{};
    // Child opposite corner i replaces that corner with the barycenter; this
    // preserves orientation.
    std::array<std::array<int, 4>, 4> quads = {{{nb, k[1], k[2], k[3]},
                                                {k[0], nb, k[2], k[3]},
                                                {k[0], k[1], nb, k[3]},
                                                {k[0], k[1], k[2], nb}}};
    mesh.tets[t] = quads[0];
    children[0] = t;
    for (int i = 1; i < 4; ++i) {
        children[i] = mesh.num_tets();
        mesh.tets.push_back(quads[i]);
        mesh.region.push_back(reg);
    }
    return children;
}

namespace {

// ---- edge swap machinery -------------------------------------------------

struct Ring {
    std::vector<int> tets;  // tets around the edge
    std::vector<int> verts; // ring vertices, cyclic
    bool closed = false;
    bool all_continuum = true;
    bool usable = true;
};

// Ring of tets around edge (a,b) from an incidence list; open rings mark
// boundary edges.
Ring build_ring(const TetMesh& mesh, int a, int b, std::span<const int> incident) {
    Ring ring;
    std::vector<std::array<int, 2>> sides;
    std::vector<int> tets;
    for (int t : incident) {
        const auto& k = mesh.tets[t];
        std::array<int, 2> other{-1, -1};
        int n = 0;
        bool has_a = false, has_b = false;
        for (int v : k) {
            if (v == a) has_a = true;
            else if (v == b) has_b = true;
            else if (n < 2) other[n++] = v;
        }
        if (!has_a || !has_b || n != 2) continue;
        tets.push_back(t);
        sides.push_back(other);
        if (!mesh.region.empty() && mesh.region[t] != Region::CONTINUUM)
            ring.all_continuum = false;
    }
    if (tets.empty()) {
        ring.usable = false;
        return ring;
    }

    std::map<int, std::vector<int>> by_vert; // side vertex -> positions in `tets`
    for (size_t i = 0; i < tets.size(); ++i) {
        by_vert[sides[i][0]].push_back(static_cast<int>(i));
        by_vert[sides[i][1]].push_back(static_cast<int>(i));
    }
    for (const auto& [v, lst] : by_vert)
        if (lst.size() > 2) {
            ring.usable = false; // non-manifold fan
            return ring;
        }

    std::vector<char> used(tets.size(), 0);
    int cur = 0;
    int enter = sides[0][0];
    ring.tets.push_back(tets[0]);
    ring.verts.push_back(enter);
    used[0] = 1;
    while (true) {
        const int exit = (sides[cur][0] == enter) ? sides[cur][1] : sides[cur][0];
        ring.verts.push_back(exit);
        int nxt = -1;
        for (int cand : by_vert[exit])
            if (!used[cand]) nxt = cand;
        if (nxt < 0) {
            ring.closed = (exit == ring.verts.front() &&
                           ring.tets.size() == tets.size());
            if (ring.closed) ring.verts.pop_back(); // last equals first
            return ring;
        }
        used[nxt] = 1;
        ring.tets.push_back(tets[nxt]);
        enter = exit;
        cur = nxt;
    }
}

double tet_quality_oriented(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
    if (orient3d_sign(p0, p1, p2, p3) <= 0) return -1.0;
    return element_quality(p0, p1, p2, p3);
}

// Interval DP over the ring polygon maximizing the minimum quality of the
// two cone tets per ring triangle.
struct RingDp {
    const TetMesh& mesh;
    int a, b;
    const std::vector<int>& v;
    std::vector<std::vector<double>> best;
    std::vector<std::vector<int>> choice;

    RingDp(const TetMesh& m, int a_, int b_, const std::vector<int>& verts)
        : mesh(m), a(a_), b(b_), v(verts) {
        const int n = static_cast<int>(v.size());
        best.assign(n, std::vector<double>(n, 2.0));
        choice.assign(n, std::vector<int>(n, -1));
        for (int len = 2; len < n; ++len)
            for (int i = 0; i + len < n; ++i) {
                const int j = i + len;
                double bq = -1.0;
                int bk = -1;
                for (int k = i + 1; k < j; ++k) {
                    const double q =
                        std::min({best[i][k], best[k][j], tri_quality(v[i], v[k], v[j])});
                    if (q > bq) {
                        bq = q;
                        bk = k;
                    }
                }
                best[i][j] = bq;
                choice[i][j] = bk;
            }
    }

    double tri_quality(int vi, int vk, int vj) const {
        const Vec3 &pi = mesh.nodes[vi], &pk = mesh.nodes[vk], &pj = mesh.nodes[vj];
        const double qb = tet_quality_oriented(pi, pk, pj, mesh.nodes[b]);
        if (qb < 0) return -1.0;
        const double qa = tet_quality_oriented(pi, pj, pk, mesh.nodes[a]);
        if (qa < 0) return -1.0;
        return std::min(qa, qb);
    }

    void collect(int i, int j, std::vector<std::array<int, 3>>& tris) const {
        if (j - i < 2) return;
        const int k = choice[i][j];
        tris.push_back({v[i], v[k], v[j]});
        collect(i, k, tris);
        collect(k, j, tris);
    }
};

// Append-only swap: retired ring tets are reported through `removed_out` and
// left in place for the caller to mask or compact; new tets are appended.
SwapResult swap_with_incidence(TetMesh& mesh, int a, int b, std::span<const int> incident,
                               const SwapOptions& opts, std::vector<int>& removed_out) {
    SwapResult result;
    Ring ring = build_ring(mesh, a, b, incident);
    require(ring.usable && !ring.tets.empty(), ErrorCode::NO_SUCH_EDGE,
            "edge (" + std::to_string(a) + "," + std::to_string(b) + ") unusable");

    if (!ring.closed || !ring.all_continuum) {
        result.reason = SwapReject::PROTECTED_EDGE;
        return result;
    }
    const int m = static_cast<int>(ring.verts.size());
    if (m < 3 || m > opts.max_ring) {
        result.reason = SwapReject::UNSUPPORTED_RING;
        return result;
    }

    // Orient the ring so the existing tets (a,b,v_i,v_i+1) are positive.
    {
        const int v0 = ring.verts[0], v1 = ring.verts[1];
        if (orient3d_sign(mesh.nodes[a], mesh.nodes[b], mesh.nodes[v0], mesh.nodes[v1]) < 0)
            std::reverse(ring.verts.begin(), ring.verts.end());
    }

    double q_old = 1.0;
    double vol_old = 0.0;
    for (int t : ring.tets) {
        q_old = std::min(q_old, element_quality(mesh, t));
        const auto p = mesh.tet_points(t);
        vol_old += std::fabs(tet_volume(p[0], p[1], p[2], p[3]));
    }

    const RingDp dp(mesh, a, b, ring.verts);
    const double q_new = dp.best[0][m - 1];
    if (q_new < 0) {
        result.reason = SwapReject::INFEASIBLE;
        return result;
    }
    if (q_new <= opts.accept_factor * q_old) {
        result.reason = SwapReject::QUALITY;
        return result;
    }

    std::vector<std::array<int, 3>> tris;
    dp.collect(0, m - 1, tris);

    double vol_new = 0.0;
    std::vector<std::array<int, 4>> created;
    for (const auto& tr : tris) {
        created.push_back({tr[0], tr[1], tr[2], b});
        created.push_back({tr[0], tr[2], tr[1], a});
    }
    for (const auto& k : created) {
        const double v = tet_volume(mesh.nodes[k[0]], mesh.nodes[k[1]], mesh.nodes[k[2]],
                                    mesh.nodes[k[3]]);
        require(v > 0, ErrorCode::DEGENERATE_TET, "edge swap produced a non-positive tet");
        vol_new += v;
    }
    require(std::fabs(vol_new - vol_old) <= 1e-9 * std::max(vol_old, 1e-300),
            ErrorCode::DEGENERATE_TET, "edge swap does not preserve the kernel volume");

    for (const auto& k : created) {
        result.new_tets.push_back(mesh.num_tets());
        mesh.tets.push_back(k);
        mesh.region.push_back(Region::CONTINUUM);
    }
    removed_out.assign(ring.tets.begin(), ring.tets.end());
    std::sort(removed_out.begin(), removed_out.end());
    result.swapped = true;
    return result;
}

void compact_tets(TetMesh& mesh, std::vector<int> dead) {
    std::sort(dead.rbegin(), dead.rend());
    dead.erase(std::unique(dead.begin(), dead.end()), dead.end());
    for (int t : dead) {
        mesh.tets.erase(mesh.tets.begin() + t);
        if (!mesh.region.empty()) mesh.region.erase(mesh.region.begin() + t);
    }
}

} // namespace

SwapResult try_edge_swap(TetMesh& mesh, int a, int b, const SwapOptions& opts) {
    mesh.init_defaults();
    std::vector<int> incident;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const auto& k = mesh.tets[t];
        bool has_a = false, has_b = false;
        for (int v : k) {
            has_a |= (v == a);
            has_b |= (v == b);
        }
        if (has_a && has_b) incident.push_back(t);
    }
    require(!incident.empty(), ErrorCode::NO_SUCH_EDGE,
            "edge (" + std::to_string(a) + "," + std::to_string(b) + ") not found");
    std::vector<int> removed;
    auto res = swap_with_incidence(mesh, a, b, incident, opts, removed);
    if (res.swapped) {
        // All retired slots precede the appended tets, so the new ids shift
        // down uniformly after compaction.
        compact_tets(mesh, removed);
        for (int& t : res.new_tets) t -= static_cast<int>(removed.size());
    }
    return res;
}

namespace {

/// Node -> tets incidence maintained across splits and swaps.
class IncidenceIndex {
  public:
    explicit IncidenceIndex(const TetMesh& mesh) {
        inc_.resize(mesh.nodes.size());
        for (int t = 0; t < mesh.num_tets(); ++t) add(mesh, t);
    }
    void add(const TetMesh& mesh, int t) {
        for (int v : mesh.tets[t]) {
            if (v >= static_cast<int>(inc_.size())) inc_.resize(v + 1);
            inc_[v].push_back(t);
        }
    }
    void remove(const TetMesh& mesh, int t) {
        for (int v : mesh.tets[t]) {
            auto& lst = inc_[v];
            lst.erase(std::remove(lst.begin(), lst.end(), t), lst.end());
        }
    }
    std::vector<int> edge_tets(const TetMesh& mesh, int a, int b) const {
        std::vector<int> out;
        if (a >= static_cast<int>(inc_.size())) return out;
        for (int t : inc_[a]) {
            const auto& k = mesh.tets[t];
            if (std::find(k.begin(), k.end(), b) != k.end()) out.push_back(t);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    const std::vector<int>& tets_of(int v) const { return inc_[v]; }

  private:
    std::vector<std::vector<int>> inc_;
};

} // namespace

RefineStats refine_continuum(TetMesh& mesh, std::span<const int> marked,
                             const RefineOptions& opts) {
    mesh.init_defaults();
    RefineStats stats;
    for (int t : marked)
        require(t >= 0 && t < mesh.num_tets() && mesh.region[t] == Region::CONTINUUM,
                ErrorCode::INVALID_ARGUMENT, "refine_continuum: marked tet not in the continuum");

    std::vector<int> worklist;
    {
        std::vector<int> todo(marked.begin(), marked.end());
        std::sort(todo.begin(), todo.end());
        todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
        for (int t : todo) {
            const auto children = split_barycentric(mesh, t);
            stats.splits++;
            worklist.insert(worklist.end(), children.begin(), children.end());
        }
    }
    if (worklist.empty()) return stats;

    IncidenceIndex index(mesh);
    std::vector<char> alive(mesh.num_tets(), 1);
    std::vector<int> dead;

    std::vector<int> current = worklist;
    while (!current.empty()) {
        require(stats.sweeps < opts.max_sweeps, ErrorCode::SWAP_CYCLE,
                "edge-swap sweeps exceeded the iteration cap");
        stats.sweeps++;
        std::vector<int> next;
        for (int t : current) {
            if (t >= static_cast<int>(alive.size()) || !alive[t]) continue; // "if K exists"
            const auto k = mesh.tets[t];
            static constexpr int kEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
            for (const auto& e : kEdges) {
                const int a = k[e[0]], b = k[e[1]];
                auto incident = index.edge_tets(mesh, a, b);
                incident.erase(std::remove_if(incident.begin(), incident.end(),
                                              [&](int it) { return !alive[it]; }),
                               incident.end());
                if (incident.empty()) continue;
                std::vector<int> removed;
                auto res = swap_with_incidence(mesh, a, b, incident, opts.swap, removed);
                if (!res.swapped) continue;
                stats.swaps++;
                alive.resize(mesh.num_tets(), 1);
                for (int rt : removed) {
                    alive[rt] = 0;
                    index.remove(mesh, rt);
                    dead.push_back(rt);
                }
                for (int nt : res.new_tets) {
                    index.add(mesh, nt);
                    next.push_back(nt);
                }
                break; // one swap per element per sweep
            }
        }
        current = std::move(next);
    }

    compact_tets(mesh, std::move(dead));
    return stats;
}

int laplacian_smooth(TetMesh& mesh, std::span<const int> movable_nodes, int rounds) {
    mesh.init_defaults();
    // Edge neighbors and node->tet incidence.
    std::vector<std::set<int>> nbrs(mesh.num_nodes());
    std::vector<std::vector<int>> inc(mesh.num_nodes());
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const auto& k = mesh.tets[t];
        for (int i = 0; i < 4; ++i) {
            inc[k[i]].push_back(t);
            for (int j = 0; j < 4; ++j)
                if (i != j) nbrs[k[i]].insert(k[j]);
        }
    }

    int accepted = 0;
    for (int round = 0; round < rounds; ++round) {
        for (int n : movable_nodes) {
            if (n < 0 || n >= mesh.num_nodes() || nbrs[n].empty()) continue;
            Vec3 avg{0, 0, 0};
            for (int m : nbrs[n]) avg += mesh.nodes[m];
            avg = avg / static_cast<double>(nbrs[n].size());
            if (norm(avg - mesh.nodes[n]) == 0.0) continue;

            double floor_q = 1.0;
            for (int t : inc[n]) floor_q = std::min(floor_q, element_quality(mesh, t));

            const Vec3 old = mesh.nodes[n];
            mesh.nodes[n] = avg;
            bool ok = true;
            double new_min = 1.0;
            for (int t : inc[n]) {
                const auto p = mesh.tet_points(t);
                if (orient3d_sign(p[0], p[1], p[2], p[3]) <= 0) {
                    ok = false;
                    break;
                }
                new_min = std::min(new_min, element_quality(mesh, t));
            }
            if (!ok || new_min < floor_q) {
                mesh.nodes[n] = old; // guarded: reject inverting/degrading moves
            } else {
                ++accepted;
            }
        }
    }
    return accepted;
}

// ---- tet-tet intersection -------------------------------------------------

namespace {

// Open-interior separating axis test: a zero-width gap counts as separated,
// so meshes that merely share faces or nodes do not intersect.
bool separated_on_axis(const std::array<Vec3, 4>& A, const std::array<Vec3, 4>& B,
                       const Vec3& axis) {
    const double eps = 1e-12;
    if (norm2(axis) < 1e-30) return false;
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const auto& p : A) {
        const double d = dot(p, axis);
        amin = std::min(amin, d);
        amax = std::max(amax, d);
    }
    for (const auto& p : B) {
        const double d = dot(p, axis);
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
    }
    const double scale = std::max({std::fabs(amin), std::fabs(amax), std::fabs(bmin),
                                   std::fabs(bmax), 1.0});
    return amax <= bmin + eps * scale || bmax <= amin + eps * scale;
}

} // namespace

bool tets_overlap(const std::array<Vec3, 4>& A, const std::array<Vec3, 4>& B) {
    static constexpr int kTri[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    for (const auto& f : kTri) {
        if (separated_on_axis(A, B, cross(A[f[1]] - A[f[0]], A[f[2]] - A[f[0]]))) return false;
        if (separated_on_axis(A, B, cross(B[f[1]] - B[f[0]], B[f[2]] - B[f[0]]))) return false;
    }
    static constexpr int kEdge[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& ea : kEdge)
        for (const auto& eb : kEdge) {
            const Vec3 axis = cross(A[ea[1]] - A[ea[0]], B[eb[1]] - B[eb[0]]);
            if (separated_on_axis(A, B, axis)) return false;
        }
    return true;
}

std::vector<int> tets_intersecting(const TetMesh& host, const TetMesh& tool) {
    std::vector<int> out;
    if (host.num_tets() == 0 || tool.num_tets() == 0) return out;
    const AabbTree tool_tree(tool);
    for (int t = 0; t < host.num_tets(); ++t) {
        const auto A = host.tet_points(t);
        Aabb box;
        for (const auto& p : A) box.expand(p);
        bool hit = false;
        for (int s : tool_tree.overlapping(box)) {
            if (tets_overlap(A, tool.tet_points(s))) {
                hit = true;
                break;
            }
        }
        if (hit) out.push_back(t);
    }
    return out;
}

// ---- atomistic extension ---------------------------------------------------

namespace {

struct LabeledPoint {
    Vec3 p;
    std::int64_t label;
};

} // namespace

ExtendResult extend_atomistic(const TetMesh& coupled, const ExtensionRequest& request,
                              const ExtendOptions& opts) {
    require(request.marked_atoms.size() == request.marked_labels.size(),
            ErrorCode::INVALID_ARGUMENT, "marked atom positions/labels mismatch");
    ExtendResult result;

    TetMesh mesh = coupled;
    mesh.init_defaults();

    // Current atom set.
    std::vector<LabeledPoint> atoms;
    std::unordered_set<std::int64_t> atom_labels;
    for (int n = 0; n < mesh.num_nodes(); ++n)
        if (mesh.node_flags[n] == NodeFlag::ATOM) {
            atoms.push_back({mesh.nodes[n], mesh.node_labels[n]});
            atom_labels.insert(mesh.node_labels[n]);
        }
    require(!atoms.empty(), ErrorCode::NO_ATOMISTIC_REGION, "coupled mesh has no atoms");

    int added = 0;
    std::vector<Vec3> marked_kept;
    for (size_t i = 0; i < request.marked_atoms.size(); ++i) {
        if (atom_labels.count(request.marked_labels[i])) {
            result.ignored_marks.push_back(request.marked_labels[i]);
            continue; // already part of the atomistic region
        }
        atoms.push_back({request.marked_atoms[i], request.marked_labels[i]});
        atom_labels.insert(request.marked_labels[i]);
        marked_kept.push_back(request.marked_atoms[i]);
        ++added;
    }
    if (added == 0) {
        result.mesh = std::move(mesh);
        return result;
    }

    // Rebuild the canonical atomistic mesh on the union atom set.
    std::vector<Vec3> positions(atoms.size());
    std::vector<std::int64_t> labels(atoms.size());
    for (size_t i = 0; i < atoms.size(); ++i) {
        positions[i] = atoms[i].p;
        labels[i] = atoms[i].label;
    }
    const double r_max = compute_rmax(positions, opts.c_r);
    TriangulateOptions topt;
    topt.labels = labels;
    topt.seed = opts.seed;
    TetMesh atom_mesh = delete_elements(triangulate(positions, topt), {r_max, 1000}).mesh;
    atom_mesh.node_flags.assign(atom_mesh.num_nodes(), NodeFlag::ATOM);
    for (int t = 0; t < atom_mesh.num_tets(); ++t)
        atom_mesh.region[t] = opts.lattice_region ? opts.lattice_region(atom_mesh.tet_centroid(t))
                                                  : Region::ATOMISTIC;

    const double clearance = opts.clearance_factor * r_max;
    const KdTree marked_tree(marked_kept);

    // The replaced region starts as all lattice tets plus continuum tets
    // intersecting the new atomistic mesh or violating the clearance rule,
    // and grows if the cavity fails to conform.
    std::vector<char> replaced(mesh.num_tets(), 0);
    std::vector<int> continuum_ids;
    TetMesh continuum_part; // continuum sub-mesh, for the intersection query
    std::vector<int> cont_to_mesh;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        if (mesh.region[t] != Region::CONTINUUM) {
            replaced[t] = 1;
        } else {
            cont_to_mesh.push_back(t);
            continuum_part.tets.push_back(mesh.tets[t]);
        }
    }
    continuum_part.nodes = mesh.nodes;
    continuum_part.init_defaults();
    for (int local : tets_intersecting(continuum_part, atom_mesh))
        replaced[cont_to_mesh[local]] = 1;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        if (replaced[t]) continue;
        for (int v : mesh.tets[t]) {
            if (mesh.node_flags[v] == NodeFlag::ATOM) continue;
            const int near = marked_tree.nearest(mesh.nodes[v]);
            if (near >= 0 && dist(marked_kept[near], mesh.nodes[v]) < clearance) {
                replaced[t] = 1;
                break;
            }
        }
    }

    const SurfaceMesh atom_boundary = extract_boundary(atom_mesh);
    const SurfaceMesh atom_exterior = exterior_component(atom_boundary);

    for (int pass = 0;; ++pass) {
        require(pass < opts.max_expansion_passes, ErrorCode::CAVITY_FAILED,
                "cavity meshing failed to conform after expansion passes");
        result.expansion_passes = pass;

        SurfaceMesh removed_surface = extract_boundary(mesh, std::span<const char>(replaced));

        // Interior orphans of the replaced region: nodes used only by
        // replaced tets and off the surface; keep non-atom ones that respect
        // the clearance rule.
        std::vector<Vec3> orphan_pos;
        std::vector<std::int64_t> orphan_labels;
        {
            std::vector<char> on_surface(mesh.num_nodes(), 0);
            for (int pn : removed_surface.parent_node) on_surface[pn] = 1;
            std::vector<char> in_kept(mesh.num_nodes(), 0);
            for (int t = 0; t < mesh.num_tets(); ++t)
                if (!replaced[t])
                    for (int v : mesh.tets[t]) in_kept[v] = 1;
            for (int t = 0; t < mesh.num_tets(); ++t) {
                if (!replaced[t]) continue;
                for (int v : mesh.tets[t]) {
                    if (in_kept[v] || on_surface[v]) continue;
                    if (mesh.node_flags[v] == NodeFlag::ATOM) continue;
                    in_kept[v] = 1; // visit once
                    const int near = marked_tree.nearest(mesh.nodes[v]);
                    if (near >= 0 && dist(marked_kept[near], mesh.nodes[v]) < clearance) continue;
                    if (point_inside_surface(mesh.nodes[v], atom_exterior, opts.seed)) continue;
                    orphan_pos.push_back(mesh.nodes[v]);
                    orphan_labels.push_back(mesh.node_labels[v]);
                }
            }
        }

        MeshBetweenOptions mopt;
        mopt.clearance = clearance;
        mopt.seed = opts.seed;
        mopt.interior_labels = orphan_labels;
        mopt.outer_is_convex = false;
        mopt.require_outer_conformity = true;
        MeshBetweenResult cavity;
        bool cavity_ok = true;
        try {
            cavity = mesh_between(removed_surface, atom_exterior, orphan_pos, mopt);
        } catch (const Error&) {
            cavity_ok = false;
        }

        if (cavity_ok && cavity.missing_outer.empty()) {
            std::vector<int> kept_ids;
            for (int t = 0; t < mesh.num_tets(); ++t)
                if (!replaced[t]) kept_ids.push_back(t);
            const TetMesh kept_part = submesh(mesh, kept_ids);
            const TetMesh* parts[3] = {&kept_part, &cavity.mesh, &atom_mesh};
            TetMesh fused = fuse_meshes(parts);

            // Gap detector: a boundary face with continuum-side nodes that is
            // not on the domain boundary means the cavity failed to mate.
            bool gap = false;
            if (!validate(fused).ok()) {
                gap = true;
            } else {
                const SurfaceMesh bnd = extract_boundary(fused);
                for (const auto& tri : bnd.tris) {
                    bool all_atom = true, all_domain = true;
                    for (int i = 0; i < 3; ++i) {
                        const NodeFlag f = fused.node_flags[bnd.parent_node[tri[i]]];
                        all_atom &= (f == NodeFlag::ATOM);
                        all_domain &= (f == NodeFlag::DOMAIN_BOUNDARY);
                    }
                    if (!all_atom && !all_domain) {
                        gap = true;
                        break;
                    }
                }
            }
            if (!gap) {
                // Smooth the fusion band: continuum nodes of cavity tets and
                // their edge neighbors.
                std::unordered_set<std::int64_t> cavity_labels;
                for (const auto& l : cavity.mesh.node_labels) cavity_labels.insert(l);
                std::vector<std::set<int>> nb(fused.num_nodes());
                for (const auto& k : fused.tets)
                    for (int i = 0; i < 4; ++i)
                        for (int j = 0; j < 4; ++j)
                            if (i != j) nb[k[i]].insert(k[j]);
                std::set<int> band;
                for (int n = 0; n < fused.num_nodes(); ++n)
                    if (cavity_labels.count(fused.node_labels[n])) {
                        band.insert(n);
                        for (int m2 : nb[n]) band.insert(m2);
                    }
                std::vector<int> movable;
                for (int n : band)
                    if (fused.node_flags[n] == NodeFlag::FEM_NODE) movable.push_back(n);
                laplacian_smooth(fused, movable, opts.smoothing_rounds);

                const auto rep = validate(fused);
                require(rep.ok(), ErrorCode::CAVITY_FAILED,
                        "fused mesh failed validation after extension");
                result.mesh = std::move(fused);
                return result;
            }
        }

        // Expand the replaced region: pull in kept continuum tets adjacent to
        // the current cavity boundary and retry.
        int grown = 0;
        {
            const FaceAdjacency adj = build_adjacency(mesh);
            for (const auto& [key, inc] : adj) {
                if (inc.count() != 2) continue;
                const int t0 = inc.tet[0], t1 = inc.tet[1];
                if (replaced[t0] != replaced[t1]) {
                    const int kept = replaced[t0] ? t1 : t0;
                    if (mesh.region[kept] == Region::CONTINUUM && !replaced[kept]) {
                        replaced[kept] = 1;
                        ++grown;
                    }
                }
            }
        }
        require(grown > 0, ErrorCode::CAVITY_FAILED,
                "cavity cannot be expanded further");
    }
}

} // namespace actk
