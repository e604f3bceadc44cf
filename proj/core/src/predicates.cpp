// Exact geometric predicates.
//
// Evaluation is staged: a floating-point computation with a forward error
// bound decides the generic cases, and a rational (GMP) computation decides
// the rest. Points at symbolic infinity (the triangulation bootstrap
// vertices) and lifted-coordinate perturbations (cospherical tie breaking)
// are handled by evaluating determinant signs in the ordered ring
// Q[omega_0..omega_3], ordered lexicographically with omega_0 dominant.

#include <actk/errors.hpp>
#include <actk/predicates.hpp>

#include <gmpxx.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

namespace actk {

namespace {

// Machine epsilon for the error bounds below is 2^-53 (Shewchuk's
// convention), not DBL_EPSILON.
constexpr double kEps = 1.1102230246251565e-16;
constexpr double kO3dErrBound = (7.0 + 56.0 * kEps) * kEps;
constexpr double kInsErrBound = (16.0 + 224.0 * kEps) * kEps;

// det[b-a, c-a, d-a] with doubles; |result| > bound guarantees the sign.
double orient3d_filtered(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                         double& bound) {
    const double bax = b.x - a.x, bay = b.y - a.y, baz = b.z - a.z;
    const double cax = c.x - a.x, cay = c.y - a.y, caz = c.z - a.z;
    const double dax = d.x - a.x, day = d.y - a.y, daz = d.z - a.z;

    const double cayda = cay * daz, cazda = caz * day;
    const double caxda = cax * daz, cazdx = caz * dax;
    const double caxdy = cax * day, caydx = cay * dax;

    const double det = bax * (cayda - cazda) - bay * (caxda - cazdx) + baz * (caxdy - caydx);
    const double permanent = (std::fabs(cayda) + std::fabs(cazda)) * std::fabs(bax) +
                             (std::fabs(caxda) + std::fabs(cazdx)) * std::fabs(bay) +
                             (std::fabs(caxdy) + std::fabs(caydx)) * std::fabs(baz);
    bound = kO3dErrBound * permanent;
    return det;
}

// 5x5 insphere determinant evaluated through the equivalent 4x4 of
// differences from p. |result| > bound guarantees the sign.
double insphere_filtered(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                         const Vec3& p, double& bound) {
    const double aex = a.x - p.x, aey = a.y - p.y, aez = a.z - p.z;
    const double bex = b.x - p.x, bey = b.y - p.y, bez = b.z - p.z;
    const double cex = c.x - p.x, cey = c.y - p.y, cez = c.z - p.z;
    const double dex = d.x - p.x, dey = d.y - p.y, dez = d.z - p.z;

    const double aexbey = aex * bey, bexaey = bex * aey;
    const double bexcey = bex * cey, cexbey = cex * bey;
    const double cexdey = cex * dey, dexcey = dex * cey;
    const double dexaey = dex * aey, aexdey = aex * dey;
    const double aexcey = aex * cey, cexaey = cex * aey;
    const double bexdey = bex * dey, dexbey = dex * bey;

    const double ab = aexbey - bexaey;
    const double bc = bexcey - cexbey;
    const double cd = cexdey - dexcey;
    const double da = dexaey - aexdey;
    const double ac = aexcey - cexaey;
    const double bd = bexdey - dexbey;

    const double abc = aez * bc - bez * ac + cez * ab;
    const double bcd = bez * cd - cez * bd + dez * bc;
    const double cda = cez * da + dez * ac + aez * cd;
    const double dab = dez * ab + aez * bd + bez * da;

    const double alift = aex * aex + aey * aey + aez * aez;
    const double blift = bex * bex + bey * bey + bez * bez;
    const double clift = cex * cex + cey * cey + cez * cez;
    const double dlift = dex * dex + dey * dey + dez * dez;

    const double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

    const double aezp = std::fabs(aez), bezp = std::fabs(bez);
    const double cezp = std::fabs(cez), dezp = std::fabs(dez);
    const double permanent =
        ((std::fabs(cexdey) + std::fabs(dexcey)) * bezp + (std::fabs(dexbey) + std::fabs(bexdey)) * cezp +
         (std::fabs(bexcey) + std::fabs(cexbey)) * dezp) * alift +
        ((std::fabs(dexaey) + std::fabs(aexdey)) * cezp + (std::fabs(aexcey) + std::fabs(cexaey)) * dezp +
         (std::fabs(cexdey) + std::fabs(dexcey)) * aezp) * blift +
        ((std::fabs(aexbey) + std::fabs(bexaey)) * dezp + (std::fabs(bexdey) + std::fabs(dexbey)) * aezp +
         (std::fabs(dexaey) + std::fabs(aexdey)) * bezp) * clift +
        ((std::fabs(bexcey) + std::fabs(cexbey)) * aezp + (std::fabs(cexaey) + std::fabs(aexcey)) * bezp +
         (std::fabs(aexbey) + std::fabs(bexaey)) * cezp) * dlift;
    bound = kInsErrBound * permanent;
    return det;
}

int sign_of(const mpq_class& q) { return sgn(q); }

// ---------------------------------------------------------------------
// Sparse polynomials in omega_0..omega_3 over Q. Monomials are ordered
// lexicographically by exponent tuple; omega_0 is the most infinite, so
// the lexicographically largest monomial dominates.
// ---------------------------------------------------------------------

using Expo = std::array<int, 4>;

struct Poly {
    std::map<Expo, mpq_class> terms;

    static Poly constant(const mpq_class& c) {
        Poly p;
        if (c != 0) p.terms[{0, 0, 0, 0}] = c;
        return p;
    }

    void add_term(const Expo& e, const mpq_class& c) {
        if (c == 0) return;
        auto [it, inserted] = terms.emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms.erase(it);
        }
    }

    int leading_sign() const {
        if (terms.empty()) return 0;
        return sign_of(terms.rbegin()->second);
    }
};

Poly operator+(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [e, c] : b.terms) r.add_term(e, c);
    return r;
}

Poly operator-(const Poly& a, const Poly& b) {
    Poly r = a;
    for (const auto& [e, c] : b.terms) r.add_term(e, -c);
    return r;
}

Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ea, ca] : a.terms)
        for (const auto& [eb, cb] : b.terms) {
            Expo e{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]};
            r.add_term(e, ca * cb);
        }
    return r;
}

// Laplace expansion along the first row; n <= 5 so this is cheap.
Poly poly_det(const std::vector<std::vector<Poly>>& m) {
    const size_t n = m.size();
    if (n == 1) return m[0][0];
    Poly result;
    for (size_t j = 0; j < n; ++j) {
        if (m[0][j].terms.empty()) continue;
        std::vector<std::vector<Poly>> minor(n - 1);
        for (size_t r = 1; r < n; ++r) {
            minor[r - 1].reserve(n - 1);
            for (size_t c = 0; c < n; ++c)
                if (c != j) minor[r - 1].push_back(m[r][c]);
        }
        Poly term = m[0][j] * poly_det(minor);
        if (j % 2 == 0)
            result = result + term;
        else
            result = result - term;
    }
    return result;
}

// Coordinate entry of a predicate matrix: finite value plus the omega term
// of a bootstrap vertex.
Poly coord_poly(const PredPoint& q, int axis) {
    Poly p = Poly::constant(mpq_class(q.p[axis]));
    if (!q.finite()) {
        Expo e{0, 0, 0, 0};
        e[q.super_rank] = 1;
        p.add_term(e, mpq_class(q.dir[axis]));
    }
    return p;
}

// Lifted coordinate |x|^2; for a bootstrap vertex this is quadratic in its
// omega.
Poly lift_poly(const PredPoint& q) {
    mpq_class px(q.p.x), py(q.p.y), pz(q.p.z);
    Poly p = Poly::constant(px * px + py * py + pz * pz);
    if (!q.finite()) {
        mpq_class dx(q.dir.x), dy(q.dir.y), dz(q.dir.z);
        Expo e1{0, 0, 0, 0};
        e1[q.super_rank] = 1;
        p.add_term(e1, 2 * (px * dx + py * dy + pz * dz));
        Expo e2{0, 0, 0, 0};
        e2[q.super_rank] = 2;
        p.add_term(e2, dx * dx + dy * dy + dz * dz);
    }
    return p;
}

std::vector<std::vector<Poly>> orient_matrix(const PredPoint& a, const PredPoint& b,
                                             const PredPoint& c, const PredPoint& d) {
    std::vector<std::vector<Poly>> m(4, std::vector<Poly>(4));
    const PredPoint* pts[4] = {&a, &b, &c, &d};
    for (int r = 0; r < 4; ++r) {
        for (int axis = 0; axis < 3; ++axis) m[r][axis] = coord_poly(*pts[r], axis);
        m[r][3] = Poly::constant(mpq_class(1));
    }
    return m;
}

std::vector<std::vector<Poly>> insphere_matrix(const PredPoint& a, const PredPoint& b,
                                               const PredPoint& c, const PredPoint& d,
                                               const PredPoint& p) {
    std::vector<std::vector<Poly>> m(5, std::vector<Poly>(5));
    const PredPoint* pts[5] = {&a, &b, &c, &d, &p};
    for (int r = 0; r < 5; ++r) {
        for (int axis = 0; axis < 3; ++axis) m[r][axis] = coord_poly(*pts[r], axis);
        m[r][3] = lift_poly(*pts[r]);
        m[r][4] = Poly::constant(mpq_class(1));
    }
    return m;
}

// det[[x,y,z,1]] over rows (a,b,c,d) relates to orient3d by
// det = -det[b-a, c-a, d-a]; account for that sign here so all callers see
// the same convention.
int orient3d_sign_sym(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                      const PredPoint& d) {
    return -poly_det(orient_matrix(a, b, c, d)).leading_sign();
}

int exact_orient3d_finite(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    mpq_class bax(b.x), bay(b.y), baz(b.z);
    bax -= a.x; bay -= a.y; baz -= a.z;
    mpq_class cax(c.x), cay(c.y), caz(c.z);
    cax -= a.x; cay -= a.y; caz -= a.z;
    mpq_class dax(d.x), day(d.y), daz(d.z);
    dax -= a.x; day -= a.y; daz -= a.z;
    mpq_class det = bax * (cay * daz - caz * day) - bay * (cax * daz - caz * dax) +
                    baz * (cax * day - cay * dax);
    return sign_of(det);
}

mpq_class det4(const std::array<std::array<mpq_class, 4>, 4>& m) {
    mpq_class det = 0;
    for (int j = 0; j < 4; ++j) {
        std::array<std::array<mpq_class, 3>, 3> minor;
        for (int r = 1; r < 4; ++r) {
            int cc = 0;
            for (int c = 0; c < 4; ++c)
                if (c != j) minor[r - 1][cc++] = m[r][c];
        }
        mpq_class sub = minor[0][0] * (minor[1][1] * minor[2][2] - minor[1][2] * minor[2][1]) -
                        minor[0][1] * (minor[1][0] * minor[2][2] - minor[1][2] * minor[2][0]) +
                        minor[0][2] * (minor[1][0] * minor[2][1] - minor[1][1] * minor[2][0]);
        if (j % 2 == 0)
            det += m[0][j] * sub;
        else
            det -= m[0][j] * sub;
    }
    return det;
}

// Exact insphere determinant for all-finite points, via differences from p.
int exact_insphere_finite(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                          const Vec3& p) {
    const Vec3* pts[4] = {&a, &b, &c, &d};
    std::array<std::array<mpq_class, 4>, 4> m;
    for (int r = 0; r < 4; ++r) {
        mpq_class ex(pts[r]->x), ey(pts[r]->y), ez(pts[r]->z);
        ex -= p.x; ey -= p.y; ez -= p.z;
        m[r][0] = ex;
        m[r][1] = ey;
        m[r][2] = ez;
        m[r][3] = ex * ex + ey * ey + ez * ez;
    }
    return sign_of(det4(m));
}

bool all_finite(const PredPoint& a, const PredPoint& b, const PredPoint& c, const PredPoint& d) {
    return a.finite() && b.finite() && c.finite() && d.finite();
}

} // namespace

int orient3d_sign(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    double bound;
    const double det = orient3d_filtered(a, b, c, d, bound);
    if (det > bound) return 1;
    if (-det > bound) return -1;
    return exact_orient3d_finite(a, b, c, d);
}

int orient3d_sign(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                  const PredPoint& d) {
    if (all_finite(a, b, c, d)) return orient3d_sign(a.p, b.p, c.p, d.p);
    return orient3d_sign_sym(a, b, c, d);
}

int insphere_det_sign(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                      const PredPoint& d, const PredPoint& p) {
    if (all_finite(a, b, c, d) && p.finite()) {
        double bound;
        const double det = insphere_filtered(a.p, b.p, c.p, d.p, p.p, bound);
        if (det > bound) return 1;
        if (-det > bound) return -1;
        return exact_insphere_finite(a.p, b.p, c.p, d.p, p.p);
    }
    return poly_det(insphere_matrix(a, b, c, d, p)).leading_sign();
}

int insphere_det_sign_perturbed(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                                const PredPoint& d, const PredPoint& p) {
    const int s = insphere_det_sign(a, b, c, d, p);
    if (s != 0) return s;

    // Cospherical: the determinant is perturbed by adding eps^(label) to the
    // lifted coordinate of each finite point, eps infinitesimal. The first
    // nonzero cofactor in ascending label order decides the sign.
    const PredPoint* pts[5] = {&a, &b, &c, &d, &p};
    std::array<int, 5> order{0, 1, 2, 3, 4};
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return pts[i]->label < pts[j]->label;
    });
    const auto m = insphere_matrix(a, b, c, d, p);
    for (int idx : order) {
        if (!pts[idx]->finite()) continue;
        // Cofactor of entry (idx, 3): delete row idx and the lift column.
        std::vector<std::vector<Poly>> minor;
        minor.reserve(4);
        for (int r = 0; r < 5; ++r) {
            if (r == idx) continue;
            std::vector<Poly> row;
            row.reserve(4);
            for (int c = 0; c < 5; ++c)
                if (c != 3) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        int cof = poly_det(minor).leading_sign();
        if ((idx + 3) % 2 != 0) cof = -cof;
        if (cof != 0) return cof;
    }
    return 0; // coincident points; callers reject duplicates beforehand
}

Side insphere(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, const Vec3& p) {
    const int o = orient3d_sign(a, b, c, d);
    require(o != 0, ErrorCode::DEGENERATE_TET, "insphere base tet is degenerate");
    const int s = insphere_det_sign({a}, {b}, {c}, {d}, {p});
    if (s == 0) return Side::ON;
    return s == -o ? Side::INSIDE : Side::OUTSIDE;
}

Side insphere_perturbed(const PredPoint& a, const PredPoint& b, const PredPoint& c,
                        const PredPoint& d, const PredPoint& p) {
    const int o = orient3d_sign(a, b, c, d);
    require(o != 0, ErrorCode::DEGENERATE_TET, "insphere base tet is degenerate");
    const int s = insphere_det_sign_perturbed(a, b, c, d, p);
    if (s == 0) return Side::ON;
    return s == -o ? Side::INSIDE : Side::OUTSIDE;
}

int orient2d_sign(double ax, double ay, double bx, double by, double cx, double cy) {
    const double detleft = (ax - cx) * (by - cy);
    const double detright = (ay - cy) * (bx - cx);
    const double det = detleft - detright;
    constexpr double kO2dErrBound = (3.0 + 16.0 * kEps) * kEps;
    const double detsum = std::fabs(detleft) + std::fabs(detright);
    if (std::fabs(det) > kO2dErrBound * detsum) return det > 0 ? 1 : (det < 0 ? -1 : 0);
    mpq_class l(ax), r(ay);
    l -= cx;
    r -= cy;
    mpq_class l2(by), r2(bx);
    l2 -= cy;
    r2 -= cx;
    return sign_of(l * l2 - r * r2);
}

bool coplanar_point_in_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 n = cross(b - a, c - a);
    int axis = 0; // drop the dominant normal axis
    if (std::fabs(n.y) > std::fabs(n.x)) axis = 1;
    if (std::fabs(n.z) > std::fabs((&n.x)[axis])) axis = 2;
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    const int s1 = orient2d_sign(a[u], a[v], b[u], b[v], p[u], p[v]);
    const int s2 = orient2d_sign(b[u], b[v], c[u], c[v], p[u], p[v]);
    const int s3 = orient2d_sign(c[u], c[v], a[u], a[v], p[u], p[v]);
    return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
}

int segment_crosses_triangle(const Vec3& q, const Vec3& q2, const Vec3& a, const Vec3& b,
                             const Vec3& c) {
    const int oq = orient3d_sign(a, b, c, q);
    const int oq2 = orient3d_sign(a, b, c, q2);
    if (oq == 0 || oq2 == 0) return 0;
    if (oq == oq2) return -1;
    const int s1 = orient3d_sign(q, q2, a, b);
    const int s2 = orient3d_sign(q, q2, b, c);
    const int s3 = orient3d_sign(q, q2, c, a);
    if (s1 == 0 || s2 == 0 || s3 == 0) return 0;
    return (s1 == s2 && s2 == s3) ? 1 : -1;
}

} // namespace actk
