#pragma once

#include <cmath>
#include <functional>
#include <utility>

#include "frachdg/types.hpp"

namespace frachdg {

/// Convection field b(x, t). `regular` records the standing assumption of
/// boundedness with bounded gradients; it is informational only.
struct VelocityField {
    std::function<Vec2(const Vec2&, double)> b;
    bool regular = true;

    Vec2 operator()(const Vec2& x, double t) const { return b(x, t); }

    /// psi = sqrt(1 + |b|^2), the arclength factor of the characteristic
    /// direction; it cancels out of the discrete system and is exposed for
    /// diagnostics only.
    double psi(const Vec2& x, double t) const {
        const Vec2 v = b(x, t);
        return std::sqrt(1.0 + v.dot(v));
    }

    static VelocityField zero() {
        return {[](const Vec2&, double) { return Vec2{0.0, 0.0}; }, true};
    }
};

} // namespace frachdg
