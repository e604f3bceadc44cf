#pragma once

#include <actk/geometry.hpp>

#include <cstdint>

namespace actk {

enum class Side { INSIDE, OUTSIDE, ON };

/// A point as seen by the exact predicate kernel.
///
/// Finite points carry their coordinates in `p`. The four bootstrap
/// vertices of the incremental triangulation are "points at infinity":
/// super_rank k in [0,3] means the point is interpreted symbolically as
/// p + omega_k * dir, where omega_0 >> omega_1 >> omega_2 >> omega_3 and
/// every omega dominates any finite quantity. Evaluating predicate signs
/// in this ordered extension keeps the interior Delaunay complex free of
/// bootstrap artifacts near the hull.
///
/// `label` is a stable per-point id; cospherical ties are broken by a
/// symbolic perturbation of the lifted coordinate, ordered by label, so the
/// resulting triangulation of degenerate (lattice) inputs is unique and
/// independent of insertion order.
struct PredPoint {
    Vec3 p;
    Vec3 dir{0, 0, 0};
    int super_rank = -1;
    std::int64_t label = 0;

    bool finite() const { return super_rank < 0; }
};

/// Sign of det[b-a, c-a, d-a]; +1 when (a,b,c,d) is positively oriented.
/// Exact: filtered double evaluation with a rational fallback.
int orient3d_sign(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);
int orient3d_sign(const PredPoint& a, const PredPoint& b, const PredPoint& c, const PredPoint& d);

/// Raw sign of the 5x5 insphere determinant (rows a,b,c,d,p of [x y z |x|^2 1]).
/// 0 means exactly cospherical.
int insphere_det_sign(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                      const PredPoint& d, const PredPoint& p);

/// Same determinant with the symbolic lift perturbation applied; never
/// returns 0 for five distinct points when (a,b,c,d) is non-degenerate.
int insphere_det_sign_perturbed(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                                const PredPoint& d, const PredPoint& p);

/// Exact position of p relative to the circumsphere of (a,b,c,d).
/// Orientation of the tet is handled internally; throws DEGENERATE_TET for
/// a flat base tet. ON is returned only for exactly cospherical p.
Side insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& p);

/// insphere with the perturbation rule: ties resolved by point labels,
/// so the result is always INSIDE or OUTSIDE.
Side insphere_perturbed(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                        const PredPoint& d, const PredPoint& p);

/// Exact parity test of segment [q, q2] against triangle (a,b,c).
/// Returns +1 for a proper crossing, 0 for a degenerate contact (caller
/// should re-shoot), -1 for no crossing.
int segment_crosses_triangle(const Vec3& q, const Vec3& q2, const Vec3& a, const Vec3& b,
                             const Vec3& c);

/// Sign of the 2D orientation determinant (b-a) x (c-a); exact.
int orient2d_sign(double ax, double ay, double bx, double by, double cx, double cy);

/// For p exactly on the supporting plane of (a,b,c): true if p lies in the
/// closed triangle. The plane projection axis is chosen from the dominant
/// normal component.
bool coplanar_point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

} // namespace actk
