#include <actk/errors.hpp>
#include <actk/mesh.hpp>

#include <doctest.h>

#include <cmath>
#include <random>

using namespace actk;

namespace {

// Regular tetrahedron with the given edge length.
std::array<Vec3, 4> regular_tet(double edge) {
    const double s = edge / std::sqrt(2.0);
    return {Vec3{s, s, s} * 0.5, Vec3{s, -s, -s} * 0.5, Vec3{-s, s, -s} * 0.5,
            Vec3{-s, -s, s} * 0.5};
}

TetMesh single_tet_mesh() {
    TetMesh m;
    m.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    m.tets = {{0, 1, 2, 3}};
    m.init_defaults();
    return m;
}

} // namespace

TEST_CASE("tet_volume") {
    CHECK(tet_volume({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}) == doctest::Approx(1.0 / 6.0));
    CHECK(tet_volume({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.7, 0.2, 0}) == 0.0);
    // Swapping two vertices negates the result.
    CHECK(tet_volume({1, 0, 0}, {0, 0, 0}, {0, 1, 0}, {0, 0, 1}) ==
          doctest::Approx(-1.0 / 6.0));
}

TEST_CASE("element_quality reference values") {
    auto r = regular_tet(1.0);
    CHECK(element_quality(r[0], r[1], r[2], r[3]) == doctest::Approx(1.0).epsilon(1e-12));
    auto r7 = regular_tet(7.3);
    CHECK(element_quality(r7[0], r7[1], r7[2], r7[3]) == doctest::Approx(1.0).epsilon(1e-12));
    // Unit corner tet: |K| = 1/6, sum of squared edges = 3*1 + 3*2 = 9.
    const double q = element_quality({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    CHECK(q == doctest::Approx(4.0 * std::sqrt(3.0) / 9.0).epsilon(1e-12));
    CHECK(element_quality({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.3, 0.3, 0}) == 0.0);
}

TEST_CASE("element_quality scale and permutation invariance") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0, 1);
    std::uniform_real_distribution<double> sc(0.01, 100.0);
    for (int i = 0; i < 10000; ++i) {
        std::array<Vec3, 4> t;
        for (auto& p : t) p = {dist(rng), dist(rng), dist(rng)};
        const double q = element_quality(t[0], t[1], t[2], t[3]);
        CHECK(q >= 0.0);
        CHECK(q <= 1.0);
        const double s = sc(rng);
        CHECK(element_quality(s * t[0], s * t[1], s * t[2], s * t[3]) ==
              doctest::Approx(q).epsilon(1e-9));
        CHECK(element_quality(t[2], t[0], t[3], t[1]) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("quality of one means regular") {
    // q within 1e-9 of 1 implies normalized edge-length variance near zero.
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0, 1);
    auto edge_var = [](const std::array<Vec3, 4>& t) {
        double e[6] = {norm(t[1] - t[0]), norm(t[2] - t[0]), norm(t[3] - t[0]),
                       norm(t[2] - t[1]), norm(t[3] - t[1]), norm(t[3] - t[2])};
        double mean = 0;
        for (double v : e) mean += v / 6;
        double var = 0;
        for (double v : e) var += (v - mean) * (v - mean) / 6;
        return var / (mean * mean);
    };
    auto r = regular_tet(2.0);
    CHECK(edge_var(r) < 1e-16);
    for (int i = 0; i < 10000; ++i) {
        std::array<Vec3, 4> t;
        for (auto& p : t) p = {dist(rng), dist(rng), dist(rng)};
        if (element_quality(t[0], t[1], t[2], t[3]) > 1.0 - 1e-9) CHECK(edge_var(t) < 1e-6);
    }
}

TEST_CASE("set_quality") {
    TetMesh m;
    auto r = regular_tet(1.0);
    m.nodes = {r[0], r[1], r[2], r[3], {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    m.tets = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    m.init_defaults();
    const int both[] = {0, 1};
    const int reg[] = {0};
    CHECK(set_quality(m, std::span<const int>(reg, 1)) == doctest::Approx(1.0));
    CHECK(set_quality(m, std::span<const int>(both, 2)) ==
          doctest::Approx(4.0 * std::sqrt(3.0) / 9.0));
    CHECK_THROWS_AS(set_quality(m, {}), Error);
}

TEST_CASE("circumsphere") {
    auto r = regular_tet(1.0);
    auto cs = circumsphere(r[0], r[1], r[2], r[3]);
    CHECK(cs.radius == doctest::Approx(std::sqrt(3.0 / 8.0)).epsilon(1e-12));

    auto corner = circumsphere({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    CHECK(corner.center.x == doctest::Approx(0.5));
    CHECK(corner.center.y == doctest::Approx(0.5));
    CHECK(corner.center.z == doctest::Approx(0.5));
    CHECK(corner.radius == doctest::Approx(std::sqrt(3.0) / 2.0));

    CHECK_THROWS_AS(circumsphere({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 0}), Error);

    // Vertices sampled on the unit sphere: center ~ origin, radius ~ 1, and
    // the equidistance residual is tiny.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(-1, 1);
    for (int i = 0; i < 200; ++i) {
        std::array<Vec3, 4> t;
        for (auto& p : t) {
            Vec3 v{dist(rng), dist(rng), dist(rng)};
            p = v / norm(v);
        }
        if (element_quality(t[0], t[1], t[2], t[3]) < 1e-3) continue;
        auto s = circumsphere(t[0], t[1], t[2], t[3]);
        CHECK(norm(s.center) < 1e-6);
        CHECK(s.radius == doctest::Approx(1.0).epsilon(1e-6));
        for (const auto& p : t)
            CHECK(std::fabs(norm2(p - s.center) - s.radius * s.radius) < 1e-10 * s.radius * s.radius);
    }
}

TEST_CASE("circumsphere residual on random tets") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> dist(0, 1);
    for (int i = 0; i < 2000; ++i) {
        std::array<Vec3, 4> t;
        for (auto& p : t) p = {dist(rng), dist(rng), dist(rng)};
        if (element_quality(t[0], t[1], t[2], t[3]) < 1e-2) continue;
        auto s = circumsphere(t[0], t[1], t[2], t[3]);
        for (const auto& p : t)
            CHECK(std::fabs(norm(p - s.center) - s.radius) < 1e-10 * s.radius);
    }
}

TEST_CASE("build_adjacency") {
    TetMesh m = single_tet_mesh();
    auto adj = build_adjacency(m);
    CHECK(adj.size() == 4);
    for (const auto& [k, inc] : adj) CHECK(inc.count() == 1);

    // Two tets glued on a face.
    m.nodes.push_back({1, 1, 1});
    m.tets.push_back({1, 2, 3, 4});
    m.init_defaults();
    adj = build_adjacency(m);
    CHECK(adj.size() == 7);
    int interior = 0, bdry = 0;
    for (const auto& [k, inc] : adj) (inc.count() == 2 ? interior : bdry)++;
    CHECK(interior == 1);
    CHECK(bdry == 6);

    // Duplicated tet: non-manifold.
    m.tets.push_back({0, 1, 2, 3});
    CHECK_THROWS_AS(build_adjacency(m), Error);
}

TEST_CASE("extract_boundary") {
    TetMesh m = single_tet_mesh();
    auto surf = extract_boundary(m);
    CHECK(surf.num_tris() == 4);
    CHECK(surf.num_nodes() == 4);
    // Outward orientation: volume of (tri, centroid) is negative.
    const Vec3 c = m.tet_centroid(0);
    for (const auto& tri : surf.tris)
        CHECK(tet_volume(surf.nodes[tri[0]], surf.nodes[tri[1]], surf.nodes[tri[2]], c) < 0);
}

TEST_CASE("validate") {
    TetMesh m = single_tet_mesh();
    CHECK(validate(m).ok());

    TetMesh inverted = m;
    std::swap(inverted.tets[0][0], inverted.tets[0][1]);
    auto rep = validate(inverted);
    CHECK(!rep.ok());
    CHECK(rep.violations[0].kind == ViolationKind::ORIENTATION);
    CHECK(rep.violations[0].index == 0);

    TetMesh dup = m;
    dup.nodes.push_back(dup.nodes[2] + Vec3{1e-12, 0, 0});
    dup.node_flags.push_back(NodeFlag::FEM_NODE);
    dup.node_labels.push_back(99);
    bool found = false;
    for (const auto& v : validate(dup).violations)
        if (v.kind == ViolationKind::DUPLICATE_NODE) found = true;
    CHECK(found);
}

TEST_CASE("quality_report") {
    TetMesh m;
    auto r = regular_tet(1.0);
    m.nodes = {r[0], r[1], r[2], r[3], {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    m.tets = {{0, 1, 2, 3}, {4, 5, 6, 7}};
    m.init_defaults();
    auto rep = quality_report(m);
    int total = 0;
    for (int c : rep.histogram) total += c;
    CHECK(total == 2);
    CHECK(rep.min_q == doctest::Approx(4.0 * std::sqrt(3.0) / 9.0));
    CHECK(rep.fraction_high == doctest::Approx(0.5));
    CHECK(rep.histogram[9] == 1); // the regular tet
    CHECK(rep.histogram[7] == 1); // q ~ 0.7698
}
