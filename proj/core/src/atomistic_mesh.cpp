#include <actk/atomistic_mesh.hpp>
#include <actk/errors.hpp>
#include <actk/spatial.hpp>

#include <algorithm>

namespace actk {

double compute_rmax(std::span<const Vec3> atoms, double c_r) {
    require(atoms.size() >= 2, ErrorCode::TOO_FEW_ATOMS, "compute_rmax needs at least 2 atoms");
    const KdTree tree(atoms);
    double max_nn = 0.0;
    for (int i = 0; i < static_cast<int>(atoms.size()); ++i) {
        const int j = tree.nearest(atoms[i], i);
        max_nn = std::max(max_nn, dist(atoms[i], atoms[j]));
    }
    return c_r * max_nn;
}

DeletionResult delete_elements(const TetMesh& pre, const DeletionParams& params) {
    require(params.r_max > 0.0, ErrorCode::INVALID_ARGUMENT, "r_max must be positive");

    DeletionResult result;
    result.mesh = pre;
    result.mesh.init_defaults();
    TetMesh& mesh = result.mesh;

    std::vector<double> radius(mesh.num_tets());
    for (int t = 0; t < mesh.num_tets(); ++t) {
        const auto p = mesh.tet_points(t);
        radius[t] = circumradius_safe(p[0], p[1], p[2], p[3]);
    }
    std::vector<char> alive(mesh.num_tets(), 1);

    static constexpr int kFace[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
    for (int round = 0;; ++round) {
        require(round < params.max_rounds, ErrorCode::NO_CONVERGENCE,
                "element deletion exceeded max_rounds");

        // Faces of the current sub-mesh with exactly one incident live tet.
        std::unordered_map<FaceKey, int, FaceKeyHash> face_count;
        for (int t = 0; t < mesh.num_tets(); ++t) {
            if (!alive[t]) continue;
            const auto& k = mesh.tets[t];
            for (const auto& f : kFace) face_count[FaceKey(k[f[0]], k[f[1]], k[f[2]])]++;
        }

        std::vector<int> doomed;
        for (int t = 0; t < mesh.num_tets(); ++t) {
            if (!alive[t] || radius[t] <= params.r_max) continue;
            const auto& k = mesh.tets[t];
            bool boundary_adjacent = false;
            for (const auto& f : kFace)
                if (face_count[FaceKey(k[f[0]], k[f[1]], k[f[2]])] == 1) boundary_adjacent = true;
            if (boundary_adjacent) doomed.push_back(t);
        }
        if (doomed.empty()) break;
        DeletionRound rec;
        for (int t : doomed) {
            alive[t] = 0;
            rec.deleted.push_back(mesh.tets[t]);
        }
        result.audit.push_back(std::move(rec));
    }

    std::vector<std::array<int, 4>> kept;
    std::vector<Region> kept_region;
    for (int t = 0; t < mesh.num_tets(); ++t) {
        if (!alive[t]) continue;
        kept.push_back(mesh.tets[t]);
        kept_region.push_back(mesh.region[t]);
    }
    require(!kept.empty(), ErrorCode::MESH_VANISHED, "element deletion removed every tet");
    mesh.tets = std::move(kept);
    mesh.region = std::move(kept_region);

    std::vector<char> used(mesh.num_nodes(), 0);
    for (const auto& k : mesh.tets)
        for (int v : k) used[v] = 1;
    for (int n = 0; n < mesh.num_nodes(); ++n)
        if (!used[n]) result.orphaned_atoms.push_back(n);
    return result;
}

} // namespace actk
