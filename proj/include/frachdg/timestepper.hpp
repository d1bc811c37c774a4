#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "frachdg/assembly.hpp"
#include "frachdg/basis.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/quadrature.hpp"
#include "frachdg/velocity.hpp"

namespace frachdg {

struct SolutionState {
    int n = 0;
    double t = 0.0;
    Eigen::VectorXd u, sx, sy, px, py;

    static SolutionState zero(const DofLayout& layout) {
        SolutionState s;
        const Eigen::Index fs = layout.field_size();
        s.u = Eigen::VectorXd::Zero(fs);
        s.sx = s.u;
        s.sy = s.u;
        s.px = s.u;
        s.py = s.u;
        return s;
    }

    Eigen::VectorXd full(const DofLayout& layout) const {
        Eigen::VectorXd x(layout.total());
        const Eigen::Index fs = layout.field_size();
        x << u, sx, sy, px, py;
        (void)fs;
        return x;
    }
};

/// One Euler step back along the characteristic of the field b:
/// x_check = x - b(x, t_n) * dt. The result is not clamped; the caller
/// decides the out-of-domain policy.
inline Vec2 backtrack_point(const Vec2& x, const VelocityField& b, double tn, double dt) {
    return x - b(x, tn) * dt;
}

/// Advected load: entry (E,i) = int_E u_prev(x_check(g)) phi_i(g) by volume
/// quadrature. Backtracked points outside closure(Omega) contribute zero
/// (homogeneous Dirichlet extension).
inline Eigen::VectorXd assemble_advected_term(const Mesh& mesh, const ReferenceBasis& basis,
                                              const TriangleRule& rule,
                                              const Eigen::VectorXd& u_prev,
                                              const VelocityField& b, double tn, double dt) {
    const int n = basis.size();
    if (u_prev.size() != static_cast<Eigen::Index>(mesh.n_triangles()) * n)
        throw std::invalid_argument("assemble_advected_term: coefficient array size mismatch");
    const BasisTable table = basis.eval(rule.points);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(u_prev.size());
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const double jac = 2.0 * mesh.tri(e).area;
        for (int g = 0; g < rule.size(); ++g) {
            const Vec2 p = mesh.from_reference(e, rule.points[g]);
            const Vec2 foot = backtrack_point(p, b, tn, dt);
            const auto loc = mesh.locate(foot);
            if (!loc)
                continue;
            const Eigen::VectorXd phi = basis.values_at({loc->bary[1], loc->bary[2]});
            const double val =
                u_prev.segment(static_cast<Eigen::Index>(loc->tri) * n, n).dot(phi);
            const double w = rule.weights[g] * jac * val;
            for (int i = 0; i < n; ++i)
                out(e * n + i) += w * table.values(g, i);
        }
    }
    return out;
}

struct SolverError : std::runtime_error {
    double residual;
    explicit SolverError(const std::string& what, double res)
        : std::runtime_error(what), residual(res) {}
};

/// Sparse direct factorization with a relative-residual contract of 1e-10.
class LinearSolver {
  public:
    void factor(const SpMat& A) {
        A_ = A;
        A_.makeCompressed();
        lu_.compute(A_);
        if (lu_.info() != Eigen::Success)
            throw SolverError("LinearSolver: factorization failed (singular operator?)",
                              std::numeric_limits<double>::quiet_NaN());
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (rhs.size() != A_.rows())
            throw std::invalid_argument("LinearSolver::solve: dimension mismatch");
        const double rhs_norm = rhs.norm();
        if (rhs_norm == 0.0)
            return Eigen::VectorXd::Zero(rhs.size());
        Eigen::VectorXd x = lu_.solve(rhs);
        const double res = (A_ * x - rhs).norm() / rhs_norm;
        if (!(res <= 1e-10))
            throw SolverError("LinearSolver: residual contract violated, rel. residual = " +
                                  std::to_string(res),
                              res);
        return x;
    }

  private:
    SpMat A_;
    Eigen::SparseLU<SpMat> lu_;
};

/// One-shot solve of the composed system.
inline Eigen::VectorXd solve_linear_system(const BlockSystem& sys, const Eigen::VectorXd& rhs) {
    if (rhs.size() != sys.layout.total())
        throw std::invalid_argument("solve_linear_system: rhs dimension mismatch");
    LinearSolver lv;
    lv.factor(sys.A);
    return lv.solve(rhs);
}

/// Drives the fully discrete scheme. The operator is time-independent, so
/// the factorization is reused across steps and recomputed only when dt
/// changes (shortened final step).
class Stepper {
  public:
    Stepper(const Mesh& mesh, const ReferenceBasis& basis, TriangleRule vol_rule,
            std::function<double(const Vec2&, double)> forcing, VelocityField b,
            BlockSystem sys)
        : mesh_(mesh), basis_(basis), vol_rule_(std::move(vol_rule)),
          forcing_(std::move(forcing)), b_(std::move(b)), sys_(std::move(sys)) {
        solver_.factor(sys_.A);
        state_ = SolutionState::zero(sys_.layout);
    }

    const BlockSystem& system() const { return sys_; }
    const SolutionState& state() const { return state_; }
    double dt() const { return sys_.dt; }

    /// Sets u at t = 0; sigma and p start at zero and never feed the march.
    void set_initial(const Eigen::VectorXd& u0) {
        if (u0.size() != sys_.layout.field_size())
            throw std::invalid_argument("Stepper::set_initial: dimension mismatch");
        state_ = SolutionState::zero(sys_.layout);
        state_.u = u0;
    }

    void set_dt(double dt) {
        sys_ = compose_system(sys_.layout, sys_.M, sys_.Gx, sys_.Gy, sys_.D, sys_.Epen,
                              std::move(sys_.Bx), std::move(sys_.By), dt);
        solver_.factor(sys_.A);
    }

    /// Advance from the current state to t + dt.
    void advance() {
        const double t_new = state_.t + sys_.dt;
        const Eigen::VectorXd load =
            assemble_load(mesh_, basis_, vol_rule_, forcing_, t_new);
        const Eigen::VectorXd adv =
            assemble_advected_term(mesh_, basis_, vol_rule_, state_.u, b_, t_new, sys_.dt);
        const Eigen::VectorXd x = solver_.solve(sys_.make_rhs(load, adv));

        const Eigen::Index fs = sys_.layout.field_size();
        state_.n += 1;
        state_.t = t_new;
        state_.u = x.segment(0, fs);
        state_.sx = x.segment(fs, fs);
        state_.sy = x.segment(2 * fs, fs);
        state_.px = x.segment(3 * fs, fs);
        state_.py = x.segment(4 * fs, fs);
    }

  private:
    const Mesh& mesh_;
    const ReferenceBasis& basis_;
    TriangleRule vol_rule_;
    std::function<double(const Vec2&, double)> forcing_;
    VelocityField b_;
    BlockSystem sys_;
    LinearSolver solver_;
    SolutionState state_;
};

} // namespace frachdg
