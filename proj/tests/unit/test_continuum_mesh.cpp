#include <actk/atomistic_mesh.hpp>
#include <actk/continuum_mesh.hpp>
#include <actk/delaunay.hpp>
#include <actk/errors.hpp>

#include <doctest.h>
#include <oracles.hpp>

#include <cmath>
#include <map>
#include <set>

using namespace actk;

namespace {

std::vector<Vec3> fcc_ball(double radius, double a = 1.0) {
    std::vector<Vec3> pts;
    const int n = static_cast<int>(std::ceil(radius / a)) + 1;
    for (int i = -n; i <= n; ++i)
        for (int j = -n; j <= n; ++j)
            for (int k = -n; k <= n; ++k) {
                const Vec3 base = a * Vec3{double(i), double(j), double(k)};
                for (const Vec3& off :
                     {Vec3{0, 0, 0}, Vec3{0.5, 0.5, 0}, Vec3{0.5, 0, 0.5}, Vec3{0, 0.5, 0.5}}) {
                    const Vec3 p = base + a * off;
                    if (norm(p) <= radius) pts.push_back(p);
                }
            }
    return pts;
}

// Every surface edge of a closed surface has exactly two incident triangles.
bool surface_closed(const SurfaceMesh& surf) {
    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : surf.tris)
        for (int e = 0; e < 3; ++e) edge_count[std::minmax(t[e], t[(e + 1) % 3])]++;
    for (const auto& [e, c] : edge_count)
        if (c != 2) return false;
    return true;
}

} // namespace

TEST_CASE("init_boundary box node/tri counts") {
    DomainSpec spec;
    spec.half_extent = 1.0;
    spec.h_bdry = 2.0; // one quad per face
    auto surf = init_boundary(spec);
    CHECK(surf.num_nodes() == 8);
    CHECK(surf.num_tris() == 12);
    CHECK(surface_closed(surf));

    spec.h_bdry = 1.0; // corners + edge midpoints + face centers
    surf = init_boundary(spec);
    CHECK(surf.num_nodes() == 26);
    CHECK(surf.num_tris() == 48);
    CHECK(surface_closed(surf));

    // Edge lengths in [h/2, 2h].
    for (const auto& t : surf.tris)
        for (int e = 0; e < 3; ++e) {
            const double len = dist(surf.nodes[t[e]], surf.nodes[t[(e + 1) % 3]]);
            CHECK(len >= spec.h_bdry / 2);
            CHECK(len <= 2 * spec.h_bdry);
        }

    // Outward orientation.
    for (const auto& t : surf.tris)
        CHECK(tet_volume(surf.nodes[t[0]], surf.nodes[t[1]], surf.nodes[t[2]], spec.center) < 0);
}

TEST_CASE("init_boundary sphere topology") {
    DomainSpec spec;
    spec.shape = DomainSpec::Shape::SPHERE;
    spec.half_extent = 5.0;
    spec.h_bdry = 2.0;
    auto surf = init_boundary(spec);
    CHECK(surface_closed(surf));
    //

    // Euler characteristic V - E + F = 2.
    std::set<std::pair<int, int>> edges;
    for (const auto& t : surf.tris)
        for (int e = 0; e < 3; ++e) edges.insert(std::minmax(t[e], t[(e + 1) % 3]));
    CHECK(surf.num_nodes() - static_cast<int>(edges.size()) + surf.num_tris() == 2);
    for (const auto& p : surf.nodes)
        CHECK(dist(p, spec.center) == doctest::Approx(5.0).epsilon(1e-12));
    for (const auto& t : surf.tris)
        for (int e = 0; e < 3; ++e)
            CHECK(dist(surf.nodes[t[e]], surf.nodes[t[(e + 1) % 3]]) <= 2 * spec.h_bdry);
}

TEST_CASE("point_inside_surface") {
    DomainSpec spec;
    spec.half_extent = 1.0;
    spec.h_bdry = 1.0;
    auto surf = init_boundary(spec);
    CHECK(point_inside_surface({0, 0, 0}, surf));
    CHECK(point_inside_surface({0.9, -0.8, 0.7}, surf));
    CHECK(!point_inside_surface({1.5, 0, 0}, surf));
    CHECK(!point_inside_surface({-2, -2, -2}, surf));
    // On the surface counts as inside.
    CHECK(point_inside_surface({1.0, 0.25, 0.25}, surf));
}

TEST_CASE("exterior_component strips voids") {
    // Atomistic ball with a central void: the boundary has two components.
    auto pts = fcc_ball(3.0);
    std::vector<Vec3> kept;
    for (const auto& p : pts)
        if (norm(p) > 1.4) kept.push_back(p);
    auto mesh = delete_elements(triangulate(kept), {compute_rmax(kept, 1.05), 1000}).mesh;
    auto bnd = extract_boundary(mesh);
    auto ext = exterior_component(bnd);
    CHECK(ext.num_tris() < bnd.num_tris());
    CHECK(surface_closed(ext));
    // The void surface is gone: no exterior node close to the void radius.
    double min_r = 1e300;
    for (const auto& p : ext.nodes) min_r = std::min(min_r, norm(p));
    CHECK(min_r > 2.0);
}

TEST_CASE("mesh_between: single tet inner surface inside a box") {
    TetMesh inner_tet;
    inner_tet.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    inner_tet.tets = {{0, 1, 2, 3}};
    inner_tet.init_defaults();
    for (auto& l : inner_tet.node_labels) l += 1000; // distinct label space
    auto inner = extract_boundary(inner_tet);

    DomainSpec spec;
    spec.center = {0.25, 0.25, 0.25};
    spec.half_extent = 4.0;
    spec.h_bdry = 4.0;
    auto outer = init_boundary(spec);

    MeshBetweenOptions opts;
    auto res = mesh_between(outer, inner, {}, opts);
    CHECK(validate(res.mesh).ok());
    CHECK(!res.used_minimal_fallback);

    // Each inner triangle appears as a face of exactly one shell tet, and no
    // shell tet sits inside the inner surface.
    std::unordered_map<FaceKey, int, FaceKeyHash> count;
    static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    std::map<std::int64_t, int> by_label;
    for (int n = 0; n < res.mesh.num_nodes(); ++n) by_label[res.mesh.node_labels[n]] = n;
    for (const auto& k : res.mesh.tets)
        for (const auto& f : kFace) count[FaceKey(k[f[0]], k[f[1]], k[f[2]])]++;
    for (const auto& t : inner.tris) {
        FaceKey key(by_label.at(inner.node_labels[t[0]]), by_label.at(inner.node_labels[t[1]]),
                    by_label.at(inner.node_labels[t[2]]));
        CHECK(count[key] == 1);
    }
    for (int t = 0; t < res.mesh.num_tets(); ++t)
        CHECK(!point_inside_surface(res.mesh.tet_centroid(t), inner));

    // Volume closes: shell + inner tet = box.
    const double got = test::total_volume(res.mesh) + 1.0 / 6.0;
    CHECK(got == doctest::Approx(std::pow(8.0, 3)).epsilon(1e-9));
}

TEST_CASE("mesh_between: empty inner gives a full box mesh") {
    DomainSpec spec;
    spec.half_extent = 2.0;
    spec.h_bdry = 2.0;
    auto outer = init_boundary(spec);
    SurfaceMesh inner; // empty
    auto res = mesh_between(outer, inner, {}, {});
    CHECK(validate(res.mesh).ok());
    CHECK(test::total_volume(res.mesh) == doctest::Approx(64.0).epsilon(1e-9));
}

TEST_CASE("mesh_between: non-enclosing outer is rejected") {
    TetMesh inner_tet;
    inner_tet.nodes = {{10, 10, 10}, {11, 10, 10}, {10, 11, 10}, {10, 10, 11}};
    inner_tet.tets = {{0, 1, 2, 3}};
    inner_tet.init_defaults();
    auto inner = extract_boundary(inner_tet);
    DomainSpec spec;
    spec.half_extent = 2.0;
    spec.h_bdry = 2.0;
    auto outer = init_boundary(spec);
    CHECK_THROWS_AS(mesh_between(outer, inner, {}, {}), Error);
}

TEST_CASE("mesh_between around an atomistic ball, with fusion") {
    auto pts = fcc_ball(2.5);
    REQUIRE(pts.size() > 100);
    TriangulateOptions topt;
    std::vector<std::int64_t> labels(pts.size());
    for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::int64_t>(i);
    topt.labels = labels;
    const double r_max = compute_rmax(pts, 1.05);
    auto atom_mesh = delete_elements(triangulate(pts, topt), {r_max, 1000}).mesh;
    for (auto& f : atom_mesh.node_flags) f = NodeFlag::ATOM;
    for (auto& r : atom_mesh.region) r = Region::ATOMISTIC;
    auto inner = exterior_component(extract_boundary(atom_mesh));

    DomainSpec spec;
    spec.half_extent = 10.0;
    spec.h_bdry = 5.0;
    auto outer = init_boundary(spec);
    for (auto& l : outer.node_labels) l += 1000000; // driver-style label spacing

    // A few graded interior shells.
    std::vector<Vec3> interior;
    for (double r : {4.5, 7.0}) {
        for (int i = 0; i < 40; ++i) {
            const double th = std::acos(1 - 2 * (i + 0.5) / 40.0);
            const double ph = 2.39996322972865 * i; // golden-angle spiral
            interior.push_back(r * Vec3{std::sin(th) * std::cos(ph),
                                        std::sin(th) * std::sin(ph), std::cos(th)});
        }
    }

    MeshBetweenOptions opts;
    opts.clearance = 2.2 * r_max;
    auto res = mesh_between(outer, inner, interior, opts);
    CHECK(validate(res.mesh).ok());
    CHECK(!res.used_minimal_fallback);

    // Conformity: fusing shell and atomistic mesh yields a valid mesh whose
    // boundary is exactly the box surface.
    const TetMesh* parts[2] = {&atom_mesh, &res.mesh};
    TetMesh fused = fuse_meshes(parts);
    CHECK(validate(fused).ok());
    auto bnd = extract_boundary(fused);
    Aabb bb;
    for (const auto& p : bnd.nodes) bb.expand(p);
    CHECK(bb.lo.x == doctest::Approx(-10.0));
    CHECK(bb.hi.x == doctest::Approx(10.0));
    for (const auto& p : bnd.nodes) {
        const double m = std::max({std::fabs(p.x), std::fabs(p.y), std::fabs(p.z)});
        CHECK(m == doctest::Approx(10.0).epsilon(1e-9)); // all boundary nodes on the box
    }

    // Smooth size transition within the shell after quality refinement.
    QmrOptions qopt;
    qopt.q_min = 0.25;
    qopt.grading = 2.5;
    TetMesh shell = res.mesh;
    // Mark interface nodes as atoms so refinement protects them.
    std::map<std::int64_t, int> by_label;
    for (int n = 0; n < shell.num_nodes(); ++n) by_label[shell.node_labels[n]] = n;
    for (auto l : inner.node_labels)
        if (by_label.count(l)) shell.node_flags[by_label[l]] = NodeFlag::ATOM;
    auto stats = qmr_refine(shell, qopt);
    CHECK(validate(shell).ok());
    int bad = 0;
    for (int t = 0; t < shell.num_tets(); ++t) {
        bool prot = false;
        for (int v : shell.tets[t]) prot |= (shell.node_flags[v] == NodeFlag::ATOM);
        if (!prot && element_quality(shell, t) < qopt.q_min) ++bad;
    }
    CHECK(bad == 0);
    (void)stats;
}

TEST_CASE("qmr_refine: q_min = 0 is the identity") {
    auto pts = test::random_points(60, 99);
    auto mesh = triangulate(pts);
    auto before = mesh.tets;
    QmrOptions opts;
    opts.q_min = 0.0;
    opts.grading = 0.0;
    qmr_refine(mesh, opts);
    CHECK(mesh.tets == before);
}
