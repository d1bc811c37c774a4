#pragma once

// Test-only reference computations, kept independent of the library's
// fractional quadrature path: adaptive Simpson with a singularity-removing
// substitution, finite-difference derivatives, and exact integrals of
// x-power times polynomial over mesh triangles.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "frachdg/basis.hpp"
#include "frachdg/problems.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/types.hpp"

namespace oracles {

using frachdg::Mesh;
using frachdg::ReferenceBasis;
using frachdg::Vec2;

// ---------------------------------------------------------------------------
// Adaptive Simpson
// ---------------------------------------------------------------------------

namespace detail {
inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adapt(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    if (!(a < m && m < b))
        return whole; // interval exhausted in floating point
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    const double err = std::abs(left + right - whole);
    // Second guard: once the correction saturates at roundoff level the
    // subdivision cannot improve the local piece any further.
    if (depth <= 0 || err <= 15.0 * tol || err <= 4e-16 * std::abs(left + right))
        return left + right + (left + right - whole) / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
} // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int max_depth = 54) {
    if (b <= a)
        return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adapt(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

// ---------------------------------------------------------------------------
// Brute-force Riemann-Liouville integrals. The substitution t = (x-xi)^mu
// (resp. (xi-x)^mu) removes the kernel singularity:
//   I_left^mu g(x)  = 1/(mu Gamma(mu)) int_0^{(x-a)^mu} g(x - t^(1/mu)) dt
//   I_right^mu g(x) = 1/(mu Gamma(mu)) int_0^{(b-x)^mu} g(x + t^(1/mu)) dt
// ---------------------------------------------------------------------------

inline double frac_integral_left(const std::function<double(double)>& g, double mu, double a,
                                 double x, double tol = 1e-12) {
    if (x <= a)
        return 0.0;
    const double top = std::pow(x - a, mu);
    const auto integrand = [&](double t) { return g(x - std::pow(t, 1.0 / mu)); };
    return adaptive_simpson(integrand, 0.0, top, tol) / (mu * std::tgamma(mu));
}

inline double frac_integral_right(const std::function<double(double)>& g, double mu, double x,
                                  double b, double tol = 1e-12) {
    if (b <= x)
        return 0.0;
    const double top = std::pow(b - x, mu);
    const auto integrand = [&](double t) { return g(x + std::pow(t, 1.0 / mu)); };
    return adaptive_simpson(integrand, 0.0, top, tol) / (mu * std::tgamma(mu));
}

// ---------------------------------------------------------------------------
// Finite differences, 6th order (exact through degree-7 polynomials).
// ---------------------------------------------------------------------------

inline double fd_first(const std::function<double(double)>& f, double x, double s) {
    return (-f(x - 3 * s) + 9 * f(x - 2 * s) - 45 * f(x - s) + 45 * f(x + s) -
            9 * f(x + 2 * s) + f(x + 3 * s)) /
           (60.0 * s);
}

inline double fd_second(const std::function<double(double)>& f, double x, double s) {
    return (2 * f(x - 3 * s) - 27 * f(x - 2 * s) + 270 * f(x - s) - 490 * f(x) +
            270 * f(x + s) - 27 * f(x + 2 * s) + 2 * f(x + 3 * s)) /
           (180.0 * s * s);
}

// ---------------------------------------------------------------------------
// Exact integrals over mesh triangles: int_T x^s m(x, y) dA with m a 2D
// monomial, via vertical-strip decomposition (linear y-bounds, binomial
// expansion, closed-form power integrals). Valid for s > -1 and triangles
// in x >= 0.
// ---------------------------------------------------------------------------

namespace detail {

// int_{x0}^{x1} x^p dx for real p > -1
inline double power_int(double x0, double x1, double p) {
    return (std::pow(x1, p + 1.0) - std::pow(x0, p + 1.0)) / (p + 1.0);
}

inline double binom(int n, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i)
        r = r * (n - i) / (i + 1);
    return r;
}

// int_{x0}^{x1} x^(s+i) [ (cu + du x)^(j+1) - (cl + dl x)^(j+1) ] / (j+1) dx
inline double strip_term(double x0, double x1, double s, int i, int j, double cl, double dl,
                         double cu, double du) {
    double total = 0.0;
    for (int k = 0; k <= j + 1; ++k) {
        const double bc = binom(j + 1, k);
        const double up = bc * std::pow(cu, j + 1 - k) * std::pow(du, k);
        const double lo = bc * std::pow(cl, j + 1 - k) * std::pow(dl, k);
        total += (up - lo) * power_int(x0, x1, s + i + k);
    }
    return total / (j + 1);
}

} // namespace detail

/// Exact int_T x^s x^i y^j dA for one mesh triangle (right triangles with a
/// vertical side, as produced by the structured mesh builder).
inline double xpow_monomial_over_tri(const Mesh& mesh, int tri, double s, int i, int j) {
    const auto& T = mesh.tri(tri);
    const Vec2 a = mesh.vertex(T.v[0]), b = mesh.vertex(T.v[1]), c = mesh.vertex(T.v[2]);
    // Identify the two distinct x-values (one side is vertical).
    Vec2 pts[3] = {a, b, c};
    double x0 = std::min({a.x, b.x, c.x});
    double x1 = std::max({a.x, b.x, c.x});
    // y-bounds are linear in x; find them from the two non-vertical sides.
    // Collect the non-vertical sides as lines y = c0 + c1 x.
    double lines[2][2];
    int nl = 0;
    for (int s2 = 0; s2 < 3; ++s2) {
        const Vec2 p = pts[s2], q = pts[(s2 + 1) % 3];
        if (std::abs(q.x - p.x) < 1e-14 * (x1 - x0))
            continue; // vertical side
        const double slope = (q.y - p.y) / (q.x - p.x);
        lines[nl][0] = p.y - slope * p.x;
        lines[nl][1] = slope;
        ++nl;
    }
    if (nl != 2)
        throw std::logic_error("xpow_monomial_over_tri: expected exactly one vertical side");
    // Order lower/upper by value at the strip midpoint.
    const double xm = 0.5 * (x0 + x1);
    double cl = lines[0][0], dl = lines[0][1], cu = lines[1][0], du = lines[1][1];
    if (cl + dl * xm > cu + du * xm) {
        std::swap(cl, cu);
        std::swap(dl, du);
    }
    return detail::strip_term(x0, x1, s, i, j, cl, dl, cu, du);
}

/// Monomial coefficients of the physical basis functions of one element:
/// column i holds the coefficients of phi_i over physical monomials
/// x^a y^b in the graded order (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
inline Eigen::MatrixXd physical_monomial_coeffs(const Mesh& mesh, int tri,
                                                const ReferenceBasis& basis) {
    const int n = basis.size();
    std::vector<std::pair<int, int>> powers;
    for (int total = 0; total <= basis.degree(); ++total)
        for (int a = total; a >= 0; --a)
            powers.push_back({a, total - a});
    Eigen::MatrixXd V(n, n);
    for (int p = 0; p < n; ++p) {
        const Vec2 node = mesh.from_reference(tri, basis.nodes()[p]);
        for (int m = 0; m < n; ++m)
            V(p, m) = std::pow(node.x, powers[m].first) * std::pow(node.y, powers[m].second);
    }
    return V.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
}

/// Exact int_T x^s phi_i dA using the physical monomial expansion.
inline double xpow_basis_over_tri(const Mesh& mesh, int tri, const ReferenceBasis& basis,
                                  double s, int i) {
    const Eigen::MatrixXd C = physical_monomial_coeffs(mesh, tri, basis);
    std::vector<std::pair<int, int>> powers;
    for (int total = 0; total <= basis.degree(); ++total)
        for (int a = total; a >= 0; --a)
            powers.push_back({a, total - a});
    double v = 0.0;
    for (int m = 0; m < basis.size(); ++m)
        if (C(m, i) != 0.0)
            v += C(m, i) * xpow_monomial_over_tri(mesh, tri, s, powers[m].first, powers[m].second);
    return v;
}

/// L2 projection of x^s onto the broken space, loads and mass computed from
/// the exact power integrals.
inline Eigen::VectorXd project_xpow_exact(const Mesh& mesh, const ReferenceBasis& basis,
                                          double s) {
    const int n = basis.size();
    std::vector<std::pair<int, int>> powers;
    for (int total = 0; total <= basis.degree(); ++total)
        for (int a = total; a >= 0; --a)
            powers.push_back({a, total - a});

    Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.n_triangles()) * n);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const Eigen::MatrixXd C = physical_monomial_coeffs(mesh, e, basis);
        Eigen::MatrixXd mloc(n, n);
        Eigen::VectorXd rhs(n);
        for (int i = 0; i < n; ++i) {
            rhs(i) = xpow_basis_over_tri(mesh, e, basis, s, i);
            for (int j = 0; j < n; ++j) {
                double mij = 0.0;
                for (int mi = 0; mi < n; ++mi)
                    for (int mj = 0; mj < n; ++mj)
                        if (C(mi, i) != 0.0 && C(mj, j) != 0.0)
                            mij += C(mi, i) * C(mj, j) *
                                   xpow_monomial_over_tri(mesh, e, 0.0,
                                                          powers[mi].first + powers[mj].first,
                                                          powers[mi].second + powers[mj].second);
                mloc(i, j) = mij;
            }
        }
        out.segment(static_cast<Eigen::Index>(e) * n, n) = mloc.llt().solve(rhs);
    }
    return out;
}

/// Evaluate a broken field at (x, y) through point location (independent of
/// the library's ray decomposition).
inline double field_at(const Mesh& mesh, const ReferenceBasis& basis,
                       const Eigen::VectorXd& coeffs, double x, double y) {
    const auto loc = mesh.locate({x, y});
    if (!loc)
        return 0.0;
    const Eigen::VectorXd phi = basis.values_at({loc->bary[1], loc->bary[2]});
    return coeffs.segment(static_cast<Eigen::Index>(loc->tri) * basis.size(), basis.size())
        .dot(phi);
}

/// Independent residual of the model equation: derivatives of the exact
/// solution by high-order finite differences (treating u as a black box)
/// and fractional terms by brute-force kernel quadrature of u'' through the
/// integral rewriting valid for solutions with double zeros at the base.
inline double forcing_oracle(const frachdg::ManufacturedProblem& prob, const Vec2& p,
                             double t) {
    const double s = 1e-2;
    auto u_of_x = [&](double x) { return prob.exact({x, p.y}, t); };
    auto u_of_y = [&](double y) { return prob.exact({p.x, y}, t); };
    auto u_of_t = [&](double tau) { return prob.exact(p, tau); };

    const double dt_u = fd_first(u_of_t, t, s);
    const Vec2 grad{fd_first(u_of_x, p.x, s), fd_first(u_of_y, p.y, s)};
    const double conv = prob.b(p, t).dot(grad);

    auto uxx = [&](double x) { return fd_second(u_of_x, x, s); };
    auto uyy = [&](double y) { return fd_second(u_of_y, y, s); };
    // tight tolerance: the comparison is relative and f crosses zero
    const double frac_x = frac_integral_left(uxx, 2.0 - prob.alpha, 0.0, p.x, 1e-14);
    const double frac_y = frac_integral_left(uyy, 2.0 - prob.beta, 0.0, p.y, 1e-14);

    return dt_u + conv - frac_x - frac_y;
}

} // namespace oracles
