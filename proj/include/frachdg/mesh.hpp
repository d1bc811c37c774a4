#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "frachdg/types.hpp"

namespace frachdg {

struct Triangle {
    std::array<int, 3> v; // counterclockwise
    Vec2 p0;              // first vertex
    Mat2 jac;             // columns v1-v0, v2-v0
    Mat2 inv_jac;
    double area = 0.0;
    double diameter = 0.0;
};

struct Edge {
    int v0 = -1, v1 = -1;
    double length = 0.0;
    Vec2 normal;    // unit; oriented elem1 -> elem2, outward on the boundary
    int elem1 = -1; // E_1^e
    int elem2 = -1; // E_2^e, -1 on the boundary

    bool is_boundary() const { return elem2 < 0; }
};

/// One piece of an axis-parallel ray: the interval [lo, hi] of the running
/// coordinate inside triangle `tri`, at fixed transverse coordinate.
struct RaySegment {
    int tri = -1;
    double lo = 0.0;
    double hi = 0.0;
    double transverse = 0.0;
};

struct Location {
    int tri = -1;
    std::array<double, 3> bary{};
};

/// Uniform triangulation of a rectangle: nx x ny cells, each split by the
/// lower-left -> upper-right diagonal into a lower-right triangle
/// (v00, v10, v11) with id 2*cell and an upper-left triangle (v00, v11, v01)
/// with id 2*cell+1, cell = cy*nx + cx. Immutable after construction.
class Mesh {
  public:
    Mesh(int nx, int ny, const Domain& dom) : nx_(nx), ny_(ny), domain_(dom) {
        if (nx < 1 || ny < 1)
            throw std::invalid_argument("Mesh: nx, ny must be >= 1");
        hx_ = dom.width() / nx;
        hy_ = dom.height() / ny;
        build_vertices();
        build_triangles();
        build_edges();
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    const Domain& domain() const { return domain_; }
    /// Maximum triangle diameter.
    double h() const { return h_; }
    /// Cell side length, the mesh size reported by the convergence tables.
    double cell_h() const { return std::max(hx_, hy_); }

    const std::vector<Vec2>& vertices() const { return vertices_; }
    const std::vector<Triangle>& triangles() const { return tris_; }
    const std::vector<Edge>& edges() const { return edges_; }
    int n_triangles() const { return static_cast<int>(tris_.size()); }

    Vec2 vertex(int i) const { return vertices_[i]; }
    const Triangle& tri(int t) const { return tris_[t]; }

    Vec2 from_reference(int t, const Vec2& ref) const {
        const Triangle& T = tris_[t];
        return T.p0 + T.jac.apply(ref);
    }

    Vec2 to_reference(int t, const Vec2& p) const {
        const Triangle& T = tris_[t];
        return T.inv_jac.apply(p - T.p0);
    }

    Vec2 centroid(int t) const {
        const Triangle& T = tris_[t];
        return (vertices_[T.v[0]] + vertices_[T.v[1]] + vertices_[T.v[2]]) * (1.0 / 3.0);
    }

    /// O(1) point location. Returns the containing triangle and barycentric
    /// coordinates; ties on shared edges go to the smaller triangle id.
    /// Points farther than the tolerance outside closure(Omega) yield nullopt.
    std::optional<Location> locate(const Vec2& p) const {
        const double tol = 1e-12 * std::max(domain_.width(), domain_.height());
        if (p.x < domain_.a - tol || p.x > domain_.b + tol ||
            p.y < domain_.c - tol || p.y > domain_.d + tol)
            return std::nullopt;

        const auto cand_x = candidate_indices((p.x - domain_.a) / hx_, nx_);
        const auto cand_y = candidate_indices((p.y - domain_.c) / hy_, ny_);

        int best = -1;
        std::array<double, 3> best_bary{};
        for (int cy : cand_y)
            for (int cx : cand_x) {
                const int cell = cy * nx_ + cx;
                for (int t = 2 * cell; t <= 2 * cell + 1; ++t) {
                    std::array<double, 3> bary;
                    if (bary_inside(t, p, bary) && (best < 0 || t < best)) {
                        best = t;
                        best_bary = bary;
                    }
                }
            }
        if (best < 0)
            return std::nullopt;
        return Location{best, best_bary};
    }

    /// Decompose the axis-parallel ray from the axis origin (a or c) to
    /// `endpoint` at the given transverse coordinate into per-triangle
    /// segments, ordered by increasing running coordinate. Segments tile
    /// the ray exactly; a zero-length ray yields an empty array.
    std::vector<RaySegment> ray_segments(Axis axis, double transverse, double endpoint) const {
        const bool xdir = (axis == Axis::X);
        const double t_lo = xdir ? domain_.c : domain_.a;
        const double t_hi = xdir ? domain_.d : domain_.b;
        const double ax_lo = xdir ? domain_.a : domain_.c;
        const double ax_hi = xdir ? domain_.b : domain_.d;
        const double span = ax_hi - ax_lo;

        if (!(transverse > t_lo && transverse < t_hi))
            throw std::invalid_argument("ray_segments: transverse must lie strictly inside the domain");
        if (endpoint < ax_lo - 1e-12 * span || endpoint > ax_hi + 1e-12 * span)
            throw std::invalid_argument("ray_segments: endpoint outside the axis extent");
        endpoint = std::clamp(endpoint, ax_lo, ax_hi);

        std::vector<RaySegment> segs;
        if (endpoint - ax_lo <= 1e-15 * span)
            return segs;

        const double ht = xdir ? hy_ : hx_;   // transverse cell size
        const double ha = xdir ? hx_ : hy_;   // axis cell size
        const int n_t = xdir ? ny_ : nx_;
        const int n_a = xdir ? nx_ : ny_;

        // Guard user-supplied transverse values sitting exactly on a mesh line.
        double tv = transverse;
        double frac = (tv - t_lo) / ht;
        double near = std::abs(frac - std::round(frac));
        if (near * ht < 1e-13 * h_) {
            tv += 1e-13 * h_;
            frac = (tv - t_lo) / ht;
        }
        int row = std::clamp(static_cast<int>(std::floor(frac)), 0, n_t - 1);
        const double t_frac = (tv - (t_lo + row * ht)) / ht; // in (0,1)

        const double eps_len = 1e-14 * ha;
        for (int ca = 0; ca < n_a; ++ca) {
            const double s_lo = ax_lo + ca * ha;
            if (s_lo >= endpoint - eps_len)
                break;
            const double s_star = s_lo + t_frac * ha;
            // Same expression the next cell uses for its s_lo, so consecutive
            // breakpoints match bitwise and the tiling is exact.
            const double s_hi = (ca + 1 == n_a) ? ax_hi : ax_lo + (ca + 1) * ha;
            const int cell = xdir ? row * nx_ + ca : ca * nx_ + row;
            const int lower = 2 * cell, upper = 2 * cell + 1;
            // x-ray: enters the upper-left triangle first; y-ray: the lower-right.
            const int first = xdir ? upper : lower;
            const int second = xdir ? lower : upper;
            push_segment(segs, first, s_lo, std::min(s_star, endpoint), tv, eps_len);
            push_segment(segs, second, s_star, std::min(s_hi, endpoint), tv, eps_len);
        }
        if (!segs.empty())
            segs.back().hi = endpoint;
        return segs;
    }

    uint64_t hash() const {
        uint64_t h = 1469598103934665603ull;
        auto mix = [&h](uint64_t v) {
            h ^= v;
            h *= 1099511628211ull;
        };
        auto mixd = [&](double v) {
            uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            mix(bits);
        };
        mix(static_cast<uint64_t>(nx_));
        mix(static_cast<uint64_t>(ny_));
        mixd(domain_.a);
        mixd(domain_.b);
        mixd(domain_.c);
        mixd(domain_.d);
        return h;
    }

    /// Plain-text debug dump: `v x y`, `t i j k`, `e i j class`.
    void dump(std::ostream& os) const {
        for (const Vec2& p : vertices_)
            os << "v " << p.x << ' ' << p.y << '\n';
        for (const Triangle& t : tris_)
            os << "t " << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << '\n';
        for (const Edge& e : edges_)
            os << "e " << e.v0 << ' ' << e.v1 << ' '
               << (e.is_boundary() ? "boundary" : "interior") << '\n';
    }

  private:
    static std::vector<int> candidate_indices(double frac, int n) {
        int c = std::clamp(static_cast<int>(std::floor(frac)), 0, n - 1);
        std::vector<int> out;
        const double f = frac - c;
        if (c > 0 && f < 1e-10)
            out.push_back(c - 1);
        out.push_back(c);
        if (c + 1 < n && f > 1.0 - 1e-10)
            out.push_back(c + 1);
        return out;
    }

    bool bary_inside(int t, const Vec2& p, std::array<double, 3>& bary) const {
        const Vec2 r = to_reference(t, p);
        double l0 = 1.0 - r.x - r.y, l1 = r.x, l2 = r.y;
        const double tol = 1e-12;
        if (l0 < -tol || l1 < -tol || l2 < -tol)
            return false;
        bary = {std::clamp(l0, 0.0, 1.0), std::clamp(l1, 0.0, 1.0), std::clamp(l2, 0.0, 1.0)};
        return true;
    }

    static void push_segment(std::vector<RaySegment>& segs, int tri, double lo, double hi,
                             double tv, double eps_len) {
        if (hi - lo > eps_len)
            segs.push_back({tri, lo, hi, tv});
    }

    void build_vertices() {
        vertices_.reserve((nx_ + 1) * (ny_ + 1));
        for (int j = 0; j <= ny_; ++j)
            for (int i = 0; i <= nx_; ++i)
                vertices_.push_back({domain_.a + i * hx_, domain_.c + j * hy_});
    }

    int vid(int i, int j) const { return j * (nx_ + 1) + i; }

    void add_triangle(int a, int b, int c) {
        Triangle t;
        t.v = {a, b, c};
        t.p0 = vertices_[a];
        const Vec2 e1 = vertices_[b] - vertices_[a];
        const Vec2 e2 = vertices_[c] - vertices_[a];
        t.jac = {e1.x, e2.x, e1.y, e2.y};
        t.area = 0.5 * t.jac.det();
        if (t.area <= 0.0)
            throw std::logic_error("Mesh: triangle with nonpositive area");
        t.inv_jac = t.jac.inverse();
        const Vec2 e3 = vertices_[c] - vertices_[b];
        t.diameter = std::max({e1.norm(), e2.norm(), e3.norm()});
        tris_.push_back(t);
    }

    void build_triangles() {
        tris_.reserve(2 * nx_ * ny_);
        h_ = 0.0;
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                add_triangle(vid(i, j), vid(i + 1, j), vid(i + 1, j + 1));
                add_triangle(vid(i, j), vid(i + 1, j + 1), vid(i, j + 1));
            }
        for (const Triangle& t : tris_)
            h_ = std::max(h_, t.diameter);
    }

    void build_edges() {
        std::map<std::pair<int, int>, int> index;
        for (int t = 0; t < n_triangles(); ++t) {
            const auto& v = tris_[t].v;
            for (int s = 0; s < 3; ++s) {
                const int a = v[s], b = v[(s + 1) % 3];
                const auto key = std::minmax(a, b);
                auto it = index.find(key);
                if (it == index.end()) {
                    Edge e;
                    e.v0 = a;
                    e.v1 = b;
                    const Vec2 d = vertices_[b] - vertices_[a];
                    e.length = d.norm();
                    // Outward normal of the CCW triangle owning this side;
                    // for an interior edge this points into the neighbour.
                    e.normal = {d.y / e.length, -d.x / e.length};
                    e.elem1 = t;
                    index.emplace(key, static_cast<int>(edges_.size()));
                    edges_.push_back(e);
                } else {
                    edges_[it->second].elem2 = t;
                }
            }
        }
    }

    int nx_, ny_;
    Domain domain_;
    double hx_, hy_, h_ = 0.0;
    std::vector<Vec2> vertices_;
    std::vector<Triangle> tris_;
    std::vector<Edge> edges_;
};

inline Mesh build_mesh(int nx, int ny, const Domain& dom) { return Mesh(nx, ny, dom); }

} // namespace frachdg
