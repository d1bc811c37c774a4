#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "frachdg/basis.hpp"
#include "frachdg/fracop.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/quadrature.hpp"
#include "frachdg/types.hpp"

namespace frachdg {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Penalty coefficient with an optional mesh-dependent scaling, resolved at
/// assembly time with h the cell side: O(1) -> c, O(h^-1) -> c/h, O(h) -> c h.
struct PenaltySpec {
    enum class Scale { One, InvH, H };
    double c = 1.0;
    Scale scale = Scale::One;

    double value(double h) const {
        switch (scale) {
        case Scale::InvH: return c / h;
        case Scale::H: return c * h;
        default: return c;
        }
    }

    /// Accepts "1", "2.5", "1/h", "0.5/h", "h", "2*h".
    static PenaltySpec parse(std::string s) {
        PenaltySpec p;
        auto strip = [](std::string& v) {
            v.erase(0, v.find_first_not_of(" \t"));
            const auto e = v.find_last_not_of(" \t");
            v.erase(e == std::string::npos ? 0 : e + 1);
        };
        strip(s);
        if (s.empty())
            throw std::invalid_argument("PenaltySpec: empty value");
        if (s == "h") {
            p.scale = Scale::H;
            return p;
        }
        if (auto pos = s.find("/h"); pos != std::string::npos && pos + 2 == s.size()) {
            p.scale = Scale::InvH;
            p.c = std::stod(s.substr(0, pos));
            return p;
        }
        if (auto pos = s.find("*h"); pos != std::string::npos && pos + 2 == s.size()) {
            p.scale = Scale::H;
            p.c = std::stod(s.substr(0, pos));
            return p;
        }
        p.c = std::stod(s);
        return p;
    }
};

struct PenaltyParams {
    PenaltySpec eps1{1.0, PenaltySpec::Scale::One};
    PenaltySpec eps2{1.0, PenaltySpec::Scale::One};

    /// Resolve against the cell size. eps1 must be positive; eps2 = 0 is
    /// permitted for experiments.
    std::pair<double, double> resolve(double h) const {
        const double e1 = eps1.value(h);
        const double e2 = eps2.value(h);
        if (!(e1 > 0.0))
            throw std::invalid_argument("PenaltyParams: eps1 must resolve to a positive value");
        if (e2 < 0.0)
            throw std::invalid_argument("PenaltyParams: eps2 must be nonnegative");
        return {e1, e2};
    }
};

/// Global indexing for the five fields, stored field-contiguous in the
/// order (u | sigma_x | sigma_y | p_x | p_y).
struct DofLayout {
    enum Field { U = 0, SX = 1, SY = 2, PX = 3, PY = 4 };

    int n_elems = 0;
    int n_loc = 0;

    DofLayout() = default;
    DofLayout(const Mesh& mesh, const ReferenceBasis& basis)
        : n_elems(mesh.n_triangles()), n_loc(basis.size()) {}

    Eigen::Index field_size() const { return static_cast<Eigen::Index>(n_elems) * n_loc; }
    Eigen::Index total() const { return 5 * field_size(); }
    Eigen::Index offset(Field f) const { return static_cast<Eigen::Index>(f) * field_size(); }
    Eigen::Index global(Field f, int elem, int i) const {
        return offset(f) + static_cast<Eigen::Index>(elem) * n_loc + i;
    }
};

namespace detail {

/// Physical evaluation data of one element at a volume rule: weights and
/// basis values/gradients per point.
struct ElementQuad {
    std::vector<double> w;
    const Eigen::MatrixXd* values; // reference table, shared
    Eigen::MatrixXd gx, gy;        // physical gradients, (npts x n)
};

inline ElementQuad element_quad(const Mesh& mesh, int e, const TriangleRule& rule,
                                const BasisTable& table) {
    ElementQuad q;
    const Triangle& T = mesh.tri(e);
    const double jac = 2.0 * T.area;
    q.w.resize(rule.size());
    for (int g = 0; g < rule.size(); ++g)
        q.w[g] = rule.weights[g] * jac;
    q.values = &table.values;
    const Mat2 it = T.inv_jac.transpose();
    q.gx = it.a11 * table.grad_xi + it.a12 * table.grad_eta;
    q.gy = it.a21 * table.grad_xi + it.a22 * table.grad_eta;
    return q;
}

/// Basis traces of an element along an edge at mapped 1D Gauss points.
inline Eigen::MatrixXd edge_traces(const Mesh& mesh, int elem, const ReferenceBasis& basis,
                                   const std::vector<Vec2>& pts) {
    Eigen::MatrixXd tr(pts.size(), basis.size());
    for (std::size_t q = 0; q < pts.size(); ++q)
        tr.row(q) = basis.values_at(mesh.to_reference(elem, pts[q])).transpose();
    return tr;
}

} // namespace detail

/// Block-diagonal mass matrix over one scalar field.
inline SpMat assemble_mass(const Mesh& mesh, const ReferenceBasis& basis,
                           const TriangleRule& rule) {
    const int n = basis.size();
    const BasisTable table = basis.eval(rule.points);
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.n_triangles()) * n * n);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const double jac = 2.0 * mesh.tri(e).area;
        Eigen::MatrixXd loc = Eigen::MatrixXd::Zero(n, n);
        for (int g = 0; g < rule.size(); ++g) {
            const double w = rule.weights[g] * jac;
            loc.noalias() += w * table.values.row(g).transpose() * table.values.row(g);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                trips.emplace_back(e * n + i, e * n + j, loc(i, j));
    }
    const Eigen::Index s = static_cast<Eigen::Index>(mesh.n_triangles()) * n;
    SpMat M(s, s);
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

/// Matrices (Gx, Gy) realizing the gradient/flux form
///   a(tau, v) = (tau, grad v) - ({tau} . n_e, [v])_{all edges},
/// with rows indexed by the scalar test dof and columns by one component of
/// tau. On boundary edges {tau} = tau|_e and [v] = v|_e.
inline std::pair<SpMat, SpMat> assemble_grad_flux(const Mesh& mesh, const ReferenceBasis& basis,
                                                  const TriangleRule& vol_rule,
                                                  int n_edge_points) {
    const int n = basis.size();
    const Eigen::Index s = static_cast<Eigen::Index>(mesh.n_triangles()) * n;
    const BasisTable table = basis.eval(vol_rule.points);
    std::vector<Triplet> tx, ty;

    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto q = detail::element_quad(mesh, e, vol_rule, table);
        Eigen::MatrixXd lx = Eigen::MatrixXd::Zero(n, n), ly = lx;
        for (int g = 0; g < vol_rule.size(); ++g) {
            lx.noalias() += q.w[g] * q.gx.row(g).transpose() * table.values.row(g);
            ly.noalias() += q.w[g] * q.gy.row(g).transpose() * table.values.row(g);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                tx.emplace_back(e * n + i, e * n + j, lx(i, j));
                ty.emplace_back(e * n + i, e * n + j, ly(i, j));
            }
    }

    const IntervalRule ref = gauss_legendre(n_edge_points, 0.0, 1.0);
    for (const Edge& ed : mesh.edges()) {
        std::vector<Vec2> pts(ref.size());
        const Vec2 p0 = mesh.vertex(ed.v0), p1 = mesh.vertex(ed.v1);
        for (int q = 0; q < ref.size(); ++q)
            pts[q] = p0 + ref.points[q] * (p1 - p0);

        const int e1 = ed.elem1, e2 = ed.elem2;
        const Eigen::MatrixXd tr1 = detail::edge_traces(mesh, e1, basis, pts);
        if (ed.is_boundary()) {
            for (int q = 0; q < ref.size(); ++q) {
                const double w = ref.weights[q] * ed.length;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const double v = w * tr1(q, i) * tr1(q, j);
                        tx.emplace_back(e1 * n + i, e1 * n + j, -ed.normal.x * v);
                        ty.emplace_back(e1 * n + i, e1 * n + j, -ed.normal.y * v);
                    }
            }
        } else {
            const Eigen::MatrixXd tr2 = detail::edge_traces(mesh, e2, basis, pts);
            const std::array<std::pair<int, const Eigen::MatrixXd*>, 2> sides{
                std::pair{e1, &tr1}, std::pair{e2, &tr2}};
            const std::array<double, 2> jump_sign{1.0, -1.0};
            for (int q = 0; q < ref.size(); ++q) {
                const double w = ref.weights[q] * ed.length;
                for (int sv = 0; sv < 2; ++sv)
                    for (int st = 0; st < 2; ++st) {
                        const double f = -0.5 * jump_sign[sv] * w;
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) {
                                const double v =
                                    f * (*sides[sv].second)(q, i) * (*sides[st].second)(q, j);
                                tx.emplace_back(sides[sv].first * n + i,
                                                sides[st].first * n + j, ed.normal.x * v);
                                ty.emplace_back(sides[sv].first * n + i,
                                                sides[st].first * n + j, ed.normal.y * v);
                            }
                    }
            }
        }
    }

    SpMat Gx(s, s), Gy(s, s);
    Gx.setFromTriplets(tx.begin(), tx.end());
    Gy.setFromTriplets(ty.begin(), ty.end());
    return {Gx, Gy};
}

/// Jump penalty matrices: D = eps1 ([u],[v]) over all edges (weak Dirichlet
/// enforcement included), Epen = eps2 ([s],[q]) over interior edges only,
/// per scalar component.
inline std::pair<SpMat, SpMat> assemble_penalties(const Mesh& mesh, const ReferenceBasis& basis,
                                                  int n_edge_points, double eps1, double eps2) {
    const int n = basis.size();
    const Eigen::Index s = static_cast<Eigen::Index>(mesh.n_triangles()) * n;
    std::vector<Triplet> td, te;
    const IntervalRule ref = gauss_legendre(n_edge_points, 0.0, 1.0);

    for (const Edge& ed : mesh.edges()) {
        std::vector<Vec2> pts(ref.size());
        const Vec2 p0 = mesh.vertex(ed.v0), p1 = mesh.vertex(ed.v1);
        for (int q = 0; q < ref.size(); ++q)
            pts[q] = p0 + ref.points[q] * (p1 - p0);

        const Eigen::MatrixXd tr1 = detail::edge_traces(mesh, ed.elem1, basis, pts);
        if (ed.is_boundary()) {
            for (int q = 0; q < ref.size(); ++q) {
                const double w = ref.weights[q] * ed.length;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        td.emplace_back(ed.elem1 * n + i, ed.elem1 * n + j,
                                        eps1 * w * tr1(q, i) * tr1(q, j));
            }
        } else {
            const Eigen::MatrixXd tr2 = detail::edge_traces(mesh, ed.elem2, basis, pts);
            const std::array<std::pair<int, const Eigen::MatrixXd*>, 2> sides{
                std::pair{ed.elem1, &tr1}, std::pair{ed.elem2, &tr2}};
            const std::array<double, 2> sign{1.0, -1.0};
            for (int q = 0; q < ref.size(); ++q) {
                const double w = ref.weights[q] * ed.length;
                for (int sa = 0; sa < 2; ++sa)
                    for (int sb = 0; sb < 2; ++sb) {
                        const double f = sign[sa] * sign[sb] * w;
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) {
                                const double v =
                                    f * (*sides[sa].second)(q, i) * (*sides[sb].second)(q, j);
                                td.emplace_back(sides[sa].first * n + i,
                                                sides[sb].first * n + j, eps1 * v);
                                te.emplace_back(sides[sa].first * n + i,
                                                sides[sb].first * n + j, eps2 * v);
                            }
                    }
            }
        }
    }

    SpMat D(s, s), E(s, s);
    D.setFromTriplets(td.begin(), td.end());
    E.setFromTriplets(te.begin(), te.end());
    return {D, E};
}

/// Load vector: entry (E,i) = int_E f(., t) phi_i.
inline Eigen::VectorXd assemble_load(const Mesh& mesh, const ReferenceBasis& basis,
                                     const TriangleRule& rule,
                                     const std::function<double(const Vec2&, double)>& f,
                                     double t) {
    const int n = basis.size();
    const BasisTable table = basis.eval(rule.points);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_triangles()) * n);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const double jac = 2.0 * mesh.tri(e).area;
        for (int g = 0; g < rule.size(); ++g) {
            const Vec2 p = mesh.from_reference(e, rule.points[g]);
            const double w = rule.weights[g] * jac * f(p, t);
            for (int i = 0; i < n; ++i)
                out(e * n + i) += w * table.values(g, i);
        }
    }
    return out;
}

/// Elementwise L2 projection of a function onto the broken space.
inline Eigen::VectorXd project_field(const Mesh& mesh, const ReferenceBasis& basis,
                                     const TriangleRule& rule,
                                     const std::function<double(const Vec2&)>& f) {
    const int n = basis.size();
    const BasisTable table = basis.eval(rule.points);
    Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.n_triangles()) * n);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const double jac = 2.0 * mesh.tri(e).area;
        Eigen::MatrixXd mloc = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (int g = 0; g < rule.size(); ++g) {
            const double w = rule.weights[g] * jac;
            mloc.noalias() += w * table.values.row(g).transpose() * table.values.row(g);
            rhs.noalias() +=
                w * f(mesh.from_reference(e, rule.points[g])) * table.values.row(g).transpose();
        }
        out.segment(static_cast<Eigen::Index>(e) * n, n) = mloc.llt().solve(rhs);
    }
    return out;
}

/// The composed operator of the fully discrete scheme and its blocks.
/// Row 1: (M/dt + D) U + Gx Sx + Gy Sy        = F + (advected)/dt
/// Row 2: M Sx - Bx Px = 0,  M Sy - By Py = 0
/// Row 3: -Gx^T U + Epen Sx + M Px = 0,  -Gy^T U + Epen Sy + M Py = 0
struct BlockSystem {
    DofLayout layout;
    double dt = 0.0;
    SpMat M, Gx, Gy, D, Epen;
    FracCouplingMatrix Bx, By;
    SpMat A;

    Eigen::VectorXd make_rhs(const Eigen::VectorXd& load, const Eigen::VectorXd& advected) const {
        if (load.size() != layout.field_size() || advected.size() != layout.field_size())
            throw std::invalid_argument("BlockSystem::make_rhs: dimension mismatch");
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(layout.total());
        rhs.head(layout.field_size()) = load + advected / dt;
        return rhs;
    }
};

inline BlockSystem compose_system(const DofLayout& layout, const SpMat& M, const SpMat& Gx,
                                  const SpMat& Gy, const SpMat& D, const SpMat& Epen,
                                  FracCouplingMatrix Bx, FracCouplingMatrix By, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("compose_system: dt must be positive and finite");
    const Eigen::Index s = layout.field_size();
    for (const SpMat* m : {&M, &Gx, &Gy, &D, &Epen})
        if (m->rows() != s || m->cols() != s)
            throw std::invalid_argument("compose_system: block dimension mismatch");
    if (Bx.dim() != s || By.dim() != s)
        throw std::invalid_argument("compose_system: fractional block dimension mismatch");

    BlockSystem sys;
    sys.layout = layout;
    sys.dt = dt;
    sys.M = M;
    sys.Gx = Gx;
    sys.Gy = Gy;
    sys.D = D;
    sys.Epen = Epen;
    sys.Bx = std::move(Bx);
    sys.By = std::move(By);

    using F = DofLayout::Field;
    const Eigen::Index oU = layout.offset(F::U), oSX = layout.offset(F::SX),
                       oSY = layout.offset(F::SY), oPX = layout.offset(F::PX),
                       oPY = layout.offset(F::PY);

    std::vector<Triplet> trips;
    auto add_block = [&](const SpMat& mat, Eigen::Index ro, Eigen::Index co, double scale,
                         bool transpose = false) {
        for (int k = 0; k < mat.outerSize(); ++k)
            for (SpMat::InnerIterator it(mat, k); it; ++it) {
                const Eigen::Index r = transpose ? it.col() : it.row();
                const Eigen::Index c = transpose ? it.row() : it.col();
                trips.emplace_back(ro + r, co + c, scale * it.value());
            }
    };

    add_block(sys.M, oU, oU, 1.0 / dt);
    add_block(sys.D, oU, oU, 1.0);
    add_block(sys.Gx, oU, oSX, 1.0);
    add_block(sys.Gy, oU, oSY, 1.0);

    add_block(sys.M, oSX, oSX, 1.0);
    sys.Bx.add_triplets(-1.0, oSX, oPX, trips);
    add_block(sys.M, oSY, oSY, 1.0);
    sys.By.add_triplets(-1.0, oSY, oPY, trips);

    add_block(sys.Gx, oPX, oU, -1.0, /*transpose=*/true);
    add_block(sys.Epen, oPX, oSX, 1.0);
    add_block(sys.M, oPX, oPX, 1.0);
    add_block(sys.Gy, oPY, oU, -1.0, /*transpose=*/true);
    add_block(sys.Epen, oPY, oSY, 1.0);
    add_block(sys.M, oPY, oPY, 1.0);

    sys.A.resize(layout.total(), layout.total());
    sys.A.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

} // namespace frachdg
