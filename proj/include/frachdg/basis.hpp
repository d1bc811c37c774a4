#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "frachdg/types.hpp"

namespace frachdg {

/// Basis values and reference-coordinate gradients tabulated at a set of
/// points: values(p, i) = phi_i at point p.
struct BasisTable {
    Eigen::MatrixXd values;
    Eigen::MatrixXd grad_xi;
    Eigen::MatrixXd grad_eta;
};

/// Nodal (Lagrange) basis of P^k on the reference triangle, k <= 2.
/// Nodes are the uniformly spaced reference nodes, so the P^1 basis
/// coincides with the barycentric coordinates.
class ReferenceBasis {
  public:
    explicit ReferenceBasis(int degree) : degree_(degree) {
        if (degree < 0 || degree > 2)
            throw std::invalid_argument("ReferenceBasis: degree must be 0, 1 or 2");
        build_monomials();
        build_nodes();
        const int n = size();
        Eigen::MatrixXd V(n, n);
        for (int p = 0; p < n; ++p)
            for (int m = 0; m < n; ++m)
                V(p, m) = monomial(m, nodes_[p]);
        coeffs_ = V.fullPivLu().solve(Eigen::MatrixXd::Identity(n, n));
    }

    int degree() const { return degree_; }
    int size() const { return (degree_ + 1) * (degree_ + 2) / 2; }
    const std::vector<Vec2>& nodes() const { return nodes_; }

    /// phi_i(p) for a single reference point.
    double value(int i, const Vec2& p) const {
        double s = 0.0;
        for (int m = 0; m < size(); ++m)
            s += coeffs_(m, i) * monomial(m, p);
        return s;
    }

    /// Reference-coordinate gradient of phi_i at p.
    Vec2 gradient(int i, const Vec2& p) const {
        Vec2 g{0.0, 0.0};
        for (int m = 0; m < size(); ++m) {
            g.x += coeffs_(m, i) * monomial_dxi(m, p);
            g.y += coeffs_(m, i) * monomial_deta(m, p);
        }
        return g;
    }

    /// All basis values at p as a dense vector.
    Eigen::VectorXd values_at(const Vec2& p) const {
        Eigen::VectorXd v(size());
        for (int i = 0; i < size(); ++i)
            v(i) = value(i, p);
        return v;
    }

    BasisTable eval(const std::vector<Vec2>& points) const {
        const int np = static_cast<int>(points.size());
        const int n = size();
        BasisTable t;
        t.values.resize(np, n);
        t.grad_xi.resize(np, n);
        t.grad_eta.resize(np, n);
        for (int p = 0; p < np; ++p)
            for (int i = 0; i < n; ++i) {
                t.values(p, i) = value(i, points[p]);
                const Vec2 g = gradient(i, points[p]);
                t.grad_xi(p, i) = g.x;
                t.grad_eta(p, i) = g.y;
            }
        return t;
    }

  private:
    // Monomials xi^a eta^b, a + b <= degree, graded order.
    void build_monomials() {
        powers_.clear();
        for (int total = 0; total <= degree_; ++total)
            for (int a = total; a >= 0; --a)
                powers_.push_back({a, total - a});
    }

    void build_nodes() {
        nodes_.clear();
        switch (degree_) {
        case 0:
            nodes_ = {{1.0 / 3.0, 1.0 / 3.0}};
            break;
        case 1:
            nodes_ = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
            break;
        case 2:
            nodes_ = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0},
                      {0.5, 0.0}, {0.5, 0.5}, {0.0, 0.5}};
            break;
        }
    }

    static double ipow(double x, int p) {
        double r = 1.0;
        for (int i = 0; i < p; ++i)
            r *= x;
        return r;
    }

    double monomial(int m, const Vec2& p) const {
        return ipow(p.x, powers_[m].first) * ipow(p.y, powers_[m].second);
    }
    double monomial_dxi(int m, const Vec2& p) const {
        const int a = powers_[m].first;
        return a == 0 ? 0.0 : a * ipow(p.x, a - 1) * ipow(p.y, powers_[m].second);
    }
    double monomial_deta(int m, const Vec2& p) const {
        const int b = powers_[m].second;
        return b == 0 ? 0.0 : ipow(p.x, powers_[m].first) * b * ipow(p.y, b - 1);
    }

    int degree_;
    std::vector<std::pair<int, int>> powers_;
    std::vector<Vec2> nodes_;
    Eigen::MatrixXd coeffs_; // column i = monomial coefficients of phi_i
};

} // namespace frachdg
