#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "frachdg/types.hpp"
#include "frachdg/velocity.hpp"

namespace frachdg {

/// Dense polynomial in one variable, coefficients over x^0..x^p, p <= 12.
class Poly1D {
  public:
    Poly1D() : c_{0.0} {}
    explicit Poly1D(std::vector<double> coeffs) : c_(std::move(coeffs)) {
        if (c_.empty())
            c_ = {0.0};
        if (degree() > 12)
            throw std::invalid_argument("Poly1D: degree must be <= 12");
    }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    const std::vector<double>& coeffs() const { return c_; }

    double operator()(double x) const {
        double r = 0.0;
        for (int p = degree(); p >= 0; --p)
            r = r * x + c_[p];
        return r;
    }

    Poly1D derivative() const {
        if (degree() == 0)
            return Poly1D({0.0});
        std::vector<double> d(c_.size() - 1);
        for (std::size_t p = 1; p < c_.size(); ++p)
            d[p - 1] = p * c_[p];
        return Poly1D(d);
    }

    Poly1D operator*(const Poly1D& o) const {
        std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j)
                r[i + j] += c_[i] * o.c_[j];
        return Poly1D(r);
    }

    Poly1D operator+(const Poly1D& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            r[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i)
            r[i] += o.c_[i];
        return Poly1D(r);
    }

  private:
    std::vector<double> c_;
};

/// Left Riemann-Liouville derivative of order alpha in (1,2), base point 0,
/// applied term-wise through the power rule
///   D^alpha x^p = Gamma(p+1)/Gamma(p+1-alpha) x^(p-alpha).
/// Requires every monomial present to have power >= 2, so all resulting
/// exponents are positive and the value vanishes at x = 0.
inline double rl_derivative_polynomial(const Poly1D& poly, double alpha, double x) {
    if (!(alpha > 1.0 && alpha < 2.0))
        throw std::invalid_argument("rl_derivative_polynomial: alpha must lie in (1,2)");
    const auto& c = poly.coeffs();
    for (int p = 0; p < 2 && p < static_cast<int>(c.size()); ++p)
        if (c[p] != 0.0)
            throw std::invalid_argument("rl_derivative_polynomial: monomial power < 2");
    double r = 0.0;
    for (int p = 2; p < static_cast<int>(c.size()); ++p) {
        if (c[p] == 0.0)
            continue;
        const double factor = std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - alpha);
        r += c[p] * factor * std::pow(x, p - alpha);
    }
    return r;
}

/// Manufactured problem with exact solution u = exp(-t) X(x) Y(y) on the
/// unit square, zero Dirichlet data, and forcing derived from the model
/// equation with the power rule supplying the fractional terms.
struct ManufacturedProblem {
    std::string name;
    Domain domain = unit_square();
    Poly1D X, Y, dX, dY;
    double alpha = 1.5, beta = 1.5; // spatial orders in (1,2)
    VelocityField b = VelocityField::zero();

    double exact(const Vec2& p, double t) const {
        return std::exp(-t) * X(p.x) * Y(p.y);
    }

    Vec2 exact_gradient(const Vec2& p, double t) const {
        const double e = std::exp(-t);
        return {e * dX(p.x) * Y(p.y), e * X(p.x) * dY(p.y)};
    }

    double initial(const Vec2& p) const { return exact(p, 0.0); }

    /// f = du/dt + b . grad u - d^alpha u/dx^alpha - d^beta u/dy^beta.
    double forcing(const Vec2& p, double t) const {
        const double e = std::exp(-t);
        const double dt_u = -e * X(p.x) * Y(p.y);
        const double conv = b(p, t).dot(exact_gradient(p, t));
        const double frac_x = e * Y(p.y) * rl_derivative_polynomial(X, alpha, p.x);
        const double frac_y = e * X(p.x) * rl_derivative_polynomial(Y, beta, p.y);
        return dt_u + conv - frac_x - frac_y;
    }
};

namespace detail {
inline Poly1D squared_factor(double root) {
    const Poly1D lin({-root, 1.0});
    return lin * lin;
}
} // namespace detail

/// u = exp(-t) x^2 (x-1)^2 y^2 (y-1)^2, b = 0.
inline ManufacturedProblem make_example51(double alpha, double beta) {
    ManufacturedProblem p;
    p.name = "example51";
    p.X = detail::squared_factor(0.0) * detail::squared_factor(1.0);
    p.Y = p.X;
    p.dX = p.X.derivative();
    p.dY = p.Y.derivative();
    p.alpha = alpha;
    p.beta = beta;
    p.b = VelocityField::zero();
    return p;
}

/// u = exp(-t) x^2 (x-1/2)^2 (x-1)^2 y^2 (y-1/2)^2 (y-1)^2,
/// b = (x - 1/2, -(y - 1/2)). The field is divergence-free, so the
/// convective term is skew-symmetric in the continuous energy balance.
inline ManufacturedProblem make_example52(double alpha, double beta) {
    ManufacturedProblem p;
    p.name = "example52";
    p.X = detail::squared_factor(0.0) * detail::squared_factor(0.5) * detail::squared_factor(1.0);
    p.Y = p.X;
    p.dX = p.X.derivative();
    p.dY = p.Y.derivative();
    p.alpha = alpha;
    p.beta = beta;
    p.b = VelocityField{[](const Vec2& x, double) { return Vec2{x.x - 0.5, -(x.y - 0.5)}; }, true};
    return p;
}

inline ManufacturedProblem make_problem(const std::string& name, double alpha, double beta) {
    if (name == "example51")
        return make_example51(alpha, beta);
    if (name == "example52")
        return make_example52(alpha, beta);
    throw std::invalid_argument("unknown problem: " + name);
}

} // namespace frachdg
