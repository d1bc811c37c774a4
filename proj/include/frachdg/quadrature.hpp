#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "frachdg/types.hpp"

namespace frachdg {

/// Quadrature rule on an interval. For the plain (legendre) kind,
/// sum w_q f(x_q) ~ int f. For the jacobi kind the right-endpoint weight
/// (hi - x)^(mu-1) is absorbed into the weights, so sum w_q f(x_q)
/// approximates int f(x) (hi - x)^(mu-1) dx and is exact for polynomial f
/// of degree <= 2n-1.
struct IntervalRule {
    std::vector<double> points;
    std::vector<double> weights;
    int exactness = 0;

    int size() const { return static_cast<int>(points.size()); }
};

/// Rule on the reference triangle {(xi,eta): xi,eta >= 0, xi+eta <= 1}.
struct TriangleRule {
    std::vector<Vec2> points;
    std::vector<double> weights; // sum to 1/2
    int exactness = 0;

    int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

// Golub-Welsch: nodes/weights on [-1,1] for the Jacobi weight
// (1-x)^A (1+x)^B, A,B > -1. Nodes ascending.
inline void golub_welsch_jacobi(int n, double A, double B,
                                std::vector<double>& nodes,
                                std::vector<double>& weights) {
    if (n < 1)
        throw std::invalid_argument("golub_welsch_jacobi: n must be >= 1");
    if (A <= -1.0 || B <= -1.0)
        throw std::invalid_argument("golub_welsch_jacobi: exponents must exceed -1");

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    J(0, 0) = (B - A) / (A + B + 2.0);
    for (int k = 1; k < n; ++k) {
        const double t = 2.0 * k + A + B;
        J(k, k) = (B * B - A * A) / (t * (t + 2.0));
        double e2;
        if (k == 1)
            e2 = 4.0 * (1.0 + A) * (1.0 + B) /
                 ((2.0 + A + B) * (2.0 + A + B) * (3.0 + A + B));
        else
            e2 = 4.0 * k * (k + A) * (k + B) * (k + A + B) /
                 (t * t * (t + 1.0) * (t - 1.0));
        const double e = std::sqrt(e2);
        J(k - 1, k) = e;
        J(k, k - 1) = e;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("golub_welsch_jacobi: eigensolver failed");

    const double mu0 = std::pow(2.0, A + B + 1.0) * std::tgamma(A + 1.0) *
                       std::tgamma(B + 1.0) / std::tgamma(A + B + 2.0);

    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        weights[i] = mu0 * v0 * v0;
    }
}

} // namespace detail

/// n-point Gauss-Legendre rule on [lo, hi]; exact for degree <= 2n-1.
inline IntervalRule gauss_legendre(int n, double lo, double hi) {
    std::vector<double> x, w;
    detail::golub_welsch_jacobi(n, 0.0, 0.0, x, w);
    IntervalRule rule;
    rule.exactness = 2 * n - 1;
    rule.points.resize(n);
    rule.weights.resize(n);
    const double half = 0.5 * (hi - lo);
    for (int i = 0; i < n; ++i) {
        rule.points[i] = lo + half * (x[i] + 1.0);
        rule.weights[i] = w[i] * half;
    }
    return rule;
}

/// n-point Gauss-Jacobi rule on [lo, hi] absorbing the weight
/// (hi - x)^expo at the right endpoint, expo > -1. Exact for
/// int f(x) (hi-x)^expo dx with polynomial f of degree <= 2n-1.
inline IntervalRule gauss_jacobi_right(int n, double lo, double hi, double expo) {
    std::vector<double> x, w;
    detail::golub_welsch_jacobi(n, expo, 0.0, x, w);
    IntervalRule rule;
    rule.exactness = 2 * n - 1;
    rule.points.resize(n);
    rule.weights.resize(n);
    const double half = 0.5 * (hi - lo);
    const double scale = std::pow(half, expo + 1.0);
    for (int i = 0; i < n; ++i) {
        rule.points[i] = lo + half * (x[i] + 1.0);
        rule.weights[i] = w[i] * scale;
    }
    return rule;
}

enum class IntervalKind { Legendre, JacobiSingularRight };

/// Factory matching the two interval rules used by the solver: plain
/// Gauss-Legendre, or the weakly singular kernel rule with exponent
/// mu - 1 in (-1, 0) at the right endpoint.
inline IntervalRule interval_quadrature(IntervalKind kind, int n, double lo, double hi,
                                        double mu = 0.0) {
    if (n < 1)
        throw std::invalid_argument("interval_quadrature: n must be >= 1");
    if (kind == IntervalKind::Legendre)
        return gauss_legendre(n, lo, hi);
    if (!(mu > 0.0 && mu < 1.0))
        throw std::invalid_argument("interval_quadrature: jacobi exponent mu-1 must lie in (-1,0)");
    return gauss_jacobi_right(n, lo, hi, mu - 1.0);
}

/// Conical-product rule on the reference triangle with the requested
/// polynomial exactness (collapsed Gauss-Legendre x Gauss-Jacobi(1,0)).
/// Degree 1 reduces to the one-point centroid rule. Points are strictly
/// interior, weights positive.
inline TriangleRule triangle_quadrature(int degree) {
    if (degree < 1 || degree > 20)
        throw std::invalid_argument("triangle_quadrature: degree must be in [1, 20]");
    const int n = (degree + 2) / 2; // 2n-1 >= degree

    IntervalRule ga = gauss_legendre(n, 0.0, 1.0);
    IntervalRule gb = gauss_jacobi_right(n, 0.0, 1.0, 1.0); // weight (1-b)

    TriangleRule rule;
    rule.exactness = degree;
    rule.points.reserve(n * n);
    rule.weights.reserve(n * n);
    for (int j = 0; j < n; ++j) {
        const double b = gb.points[j];
        for (int i = 0; i < n; ++i) {
            const double a = ga.points[i];
            rule.points.push_back({a * (1.0 - b), b});
            rule.weights.push_back(ga.weights[i] * gb.weights[j]);
        }
    }
    return rule;
}

} // namespace frachdg
