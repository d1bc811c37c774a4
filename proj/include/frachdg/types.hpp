#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace frachdg {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// 2x2 matrix, row-major.
struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

    Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
    double det() const { return a11 * a22 - a12 * a21; }
    Mat2 inverse() const {
        const double d = det();
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }
    Mat2 transpose() const { return {a11, a21, a12, a22}; }
};

/// Rectangle (a,b) x (c,d).
struct Domain {
    double a, b, c, d;

    Domain(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {
        if (!(a < b) || !(c < d))
            throw std::invalid_argument("Domain: requires a < b and c < d");
    }

    double width() const { return b - a; }
    double height() const { return d - c; }
    double area() const { return width() * height(); }
};

inline Domain unit_square() { return Domain(0.0, 1.0, 0.0, 1.0); }

enum class Axis { X, Y };

inline std::string axis_name(Axis ax) { return ax == Axis::X ? "x" : "y"; }

} // namespace frachdg
