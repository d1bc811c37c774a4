#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frachdg/assembly.hpp"
#include "frachdg/fracop.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/problems.hpp"
#include "frachdg/quadrature.hpp"
#include "frachdg/timestepper.hpp"

namespace frachdg {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One row of a convergence table: error norms at the observation time plus
/// experimental rates against the previous mesh (NaN on the first row).
struct ErrorRow {
    double h = 0.0;
    double l2_u = 0.0, l1_u = 0.0, l2_dxu = 0.0, l2_dyu = 0.0;
    double rate_l2 = kNaN, rate_l1 = kNaN, rate_dxu = kNaN, rate_dyu = kNaN;
};

struct StudyReport {
    std::vector<ErrorRow> rows;
};

struct StabilityRow {
    int n = 0;
    double t = 0.0;
    double norm_u_sq = 0.0;
    double seminorm_cum = 0.0;
    double bound_ratio = 0.0;
};

/// rate = log(e1/e2) / log(h1/h2).
inline double convergence_rate(double e1, double h1, double e2, double h2) {
    if (!(e1 > 0.0 && e2 > 0.0 && h1 > 0.0 && h2 > 0.0))
        throw std::invalid_argument("convergence_rate: inputs must be positive");
    if (h1 == h2)
        throw std::invalid_argument("convergence_rate: h1 and h2 must differ");
    return std::log(e1 / e2) / std::log(h1 / h2);
}

/// L2/L1 errors of u_h and L2 errors of its broken gradient against the
/// exact solution, by elementwise quadrature. h is reported as the cell side.
inline ErrorRow error_norms(const Mesh& mesh, const ReferenceBasis& basis,
                            const TriangleRule& rule, const Eigen::VectorXd& u_coeffs,
                            const ManufacturedProblem& prob, double t) {
    const int n = basis.size();
    const BasisTable table = basis.eval(rule.points);
    double l2 = 0.0, l1 = 0.0, dx2 = 0.0, dy2 = 0.0;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const auto q = detail::element_quad(mesh, e, rule, table);
        const auto loc = u_coeffs.segment(static_cast<Eigen::Index>(e) * n, n);
        for (int g = 0; g < rule.size(); ++g) {
            const Vec2 p = mesh.from_reference(e, rule.points[g]);
            const double uh = table.values.row(g) * loc;
            const Vec2 guh{q.gx.row(g) * loc, q.gy.row(g) * loc};
            const double diff = prob.exact(p, t) - uh;
            const Vec2 gdiff = prob.exact_gradient(p, t) - guh;
            l2 += q.w[g] * diff * diff;
            l1 += q.w[g] * std::abs(diff);
            dx2 += q.w[g] * gdiff.x * gdiff.x;
            dy2 += q.w[g] * gdiff.y * gdiff.y;
        }
    }
    ErrorRow row;
    row.h = mesh.cell_h();
    row.l2_u = std::sqrt(l2);
    row.l1_u = l1;
    row.l2_dxu = std::sqrt(dx2);
    row.l2_dyu = std::sqrt(dy2);
    return row;
}

/// L2 distances of the auxiliary gradient field p_h from the exact gradient.
/// p_h differs from the broken gradient of u_h by jump lift terms; these
/// columns are logged for reference, the gradient columns of ErrorRow are
/// the reported ones.
inline std::pair<double, double> p_error_norms(const Mesh& mesh, const ReferenceBasis& basis,
                                               const TriangleRule& rule,
                                               const Eigen::VectorXd& px,
                                               const Eigen::VectorXd& py,
                                               const ManufacturedProblem& prob, double t) {
    const int n = basis.size();
    const BasisTable table = basis.eval(rule.points);
    double dx2 = 0.0, dy2 = 0.0;
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        const double jac = 2.0 * mesh.tri(e).area;
        const auto lx = px.segment(static_cast<Eigen::Index>(e) * n, n);
        const auto ly = py.segment(static_cast<Eigen::Index>(e) * n, n);
        for (int g = 0; g < rule.size(); ++g) {
            const double w = rule.weights[g] * jac;
            const Vec2 p = mesh.from_reference(e, rule.points[g]);
            const Vec2 gex = prob.exact_gradient(p, t);
            const double ex = gex.x - table.values.row(g) * lx;
            const double ey = gex.y - table.values.row(g) * ly;
            dx2 += w * ex * ex;
            dy2 += w * ey * ey;
        }
    }
    return {std::sqrt(dx2), std::sqrt(dy2)};
}

/// Squared energy semi-norm |(u, sigma, p)|^2_A = d(u,u) + c(I p, p) +
/// e(sigma, sigma), evaluated through the assembled blocks. Nonnegative up
/// to quadrature roundoff; a value below -1e-10 * scale trips an error.
inline double energy_seminorm(const BlockSystem& sys, const SolutionState& s) {
    const double val = s.u.dot(sys.D * s.u) + sys.Bx.quad_form(s.px) + sys.By.quad_form(s.py) +
                       s.sx.dot(sys.Epen * s.sx) + s.sy.dot(sys.Epen * s.sy);
    const double scale = s.u.squaredNorm() + s.sx.squaredNorm() + s.sy.squaredNorm() +
                         s.px.squaredNorm() + s.py.squaredNorm();
    if (val < -1e-10 * std::max(scale, 1.0))
        throw std::logic_error("energy_seminorm: negative value beyond tolerance");
    return val;
}

/// Study parameters; see README for the config-file keys.
struct StudyConfig {
    std::string example = "example51";
    double alpha = 1.2, beta = 1.4;
    PenaltyParams penalties;
    int degree = 1;
    std::vector<int> meshes = {6, 10, 14, 18};
    double t_final = 0.1;
    double dt_const = 1.0;
    int quad_smooth = 8;
    int quad_singular = 4;
    std::string out;

    // stability / single-run parameters
    int nx = 10;
    int steps = 20;
    std::string forcing = "manufactured"; // "manufactured" or "zero"
    std::string initial = "problem";      // "problem" or "zero"
    std::string cache_dir;

    void validate() const {
        if (!(alpha > 1.0 && alpha < 2.0 && beta > 1.0 && beta < 2.0))
            throw std::invalid_argument("config: alpha, beta must lie in (1,2)");
        if (degree < 0 || degree > 2)
            throw std::invalid_argument("config: degree must be 0, 1 or 2");
        if (meshes.empty())
            throw std::invalid_argument("config: mesh list must be nonempty");
        for (std::size_t i = 0; i < meshes.size(); ++i) {
            if (meshes[i] < 1)
                throw std::invalid_argument("config: mesh sizes must be positive");
            if (i > 0 && meshes[i] <= meshes[i - 1])
                throw std::invalid_argument("config: mesh list must be strictly increasing");
        }
        if (!(t_final > 0.0))
            throw std::invalid_argument("config: t_final must be positive");
        if (!(dt_const > 0.0))
            throw std::invalid_argument("config: dt_const must be positive");
        if (quad_smooth < 1 || quad_singular < 1)
            throw std::invalid_argument("config: quadrature point counts must be >= 1");
        if (nx < 1 || steps < 1)
            throw std::invalid_argument("config: nx and steps must be >= 1");
        if (forcing != "manufactured" && forcing != "zero")
            throw std::invalid_argument("config: forcing must be 'manufactured' or 'zero'");
        if (initial != "problem" && initial != "zero")
            throw std::invalid_argument("config: initial must be 'problem' or 'zero'");
    }
};

/// Parse a line-based `key = value` file. '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw std::invalid_argument("config: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    auto strip = [](std::string v) {
        const auto b = v.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return std::string();
        const auto e = v.find_last_not_of(" \t\r");
        return v.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = strip(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected `key = value`, got: " + line);
        entries.emplace_back(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
    return entries;
}

inline std::vector<int> parse_mesh_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        out.push_back(std::stoi(tok));
    return out;
}

inline void apply_config_entry(StudyConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "example")
        cfg.example = value;
    else if (key == "alpha")
        cfg.alpha = std::stod(value);
    else if (key == "beta")
        cfg.beta = std::stod(value);
    else if (key == "eps1")
        cfg.penalties.eps1 = PenaltySpec::parse(value);
    else if (key == "eps2")
        cfg.penalties.eps2 = PenaltySpec::parse(value);
    else if (key == "degree")
        cfg.degree = std::stoi(value);
    else if (key == "meshes")
        cfg.meshes = parse_mesh_list(value);
    else if (key == "t_final")
        cfg.t_final = std::stod(value);
    else if (key == "dt_const")
        cfg.dt_const = std::stod(value);
    else if (key == "quad_smooth")
        cfg.quad_smooth = std::stoi(value);
    else if (key == "quad_singular")
        cfg.quad_singular = std::stoi(value);
    else if (key == "out")
        cfg.out = value;
    else if (key == "nx")
        cfg.nx = std::stoi(value);
    else if (key == "steps")
        cfg.steps = std::stoi(value);
    else if (key == "forcing")
        cfg.forcing = value;
    else if (key == "initial")
        cfg.initial = value;
    else if (key == "cache_dir")
        cfg.cache_dir = value;
    else
        throw std::invalid_argument("config: unknown key `" + key + "`");
}

inline void load_config_into(StudyConfig& cfg, const std::string& path) {
    for (const auto& [k, v] : parse_config_file(path))
        apply_config_entry(cfg, k, v);
}

/// Everything needed to march one mesh of a study.
struct RunContext {
    std::unique_ptr<Mesh> mesh;
    std::unique_ptr<ReferenceBasis> basis;
    TriangleRule vol_rule;
    TriangleRule err_rule;
    ManufacturedProblem problem;
    std::unique_ptr<Stepper> stepper;
    double dt0 = 0.0;
    double frac_seconds = 0.0;
    double assembly_seconds = 0.0;
};

inline RunContext build_run_context(const StudyConfig& cfg, int nx) {
    using clock = std::chrono::steady_clock;
    auto secs = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };

    RunContext ctx;
    ctx.problem = make_problem(cfg.example, cfg.alpha, cfg.beta);
    ctx.mesh = std::make_unique<Mesh>(nx, nx, ctx.problem.domain);
    ctx.basis = std::make_unique<ReferenceBasis>(cfg.degree);
    const int k = cfg.degree;
    ctx.vol_rule = triangle_quadrature(2 * k + 2);
    ctx.err_rule = triangle_quadrature(std::min(20, 2 * k + 12));
    const int edge_points = 2 * k + 1;

    const FractionalOrders orders(cfg.alpha, cfg.beta);
    const FracQuadOptions fopt{cfg.quad_smooth, cfg.quad_singular};
    const double h = ctx.mesh->cell_h();
    const auto [e1, e2] = cfg.penalties.resolve(h);
    ctx.dt0 = cfg.dt_const * std::pow(h, 1.5);

    const auto t0 = clock::now();
    auto get_frac = [&](double mu, Axis axis) {
        if (!cfg.cache_dir.empty()) {
            const std::string path =
                cfg.cache_dir + "/" +
                frac_cache_filename(*ctx.mesh, mu, axis, k, ctx.vol_rule.exactness, fopt);
            if (auto cached = load_frac_matrix_cache(path, *ctx.mesh, *ctx.basis, ctx.vol_rule,
                                                     mu, axis))
                return std::move(*cached);
            auto B = assemble_frac_coupling_matrix(*ctx.mesh, *ctx.basis, ctx.vol_rule, mu,
                                                   axis, fopt);
            save_frac_matrix_cache(B, path);
            return B;
        }
        return assemble_frac_coupling_matrix(*ctx.mesh, *ctx.basis, ctx.vol_rule, mu, axis,
                                             fopt);
    };
    FracCouplingMatrix Bx = get_frac(orders.alpha1(), Axis::X);
    FracCouplingMatrix By = get_frac(orders.alpha2(), Axis::Y);
    const auto t1 = clock::now();
    ctx.frac_seconds = secs(t0, t1);

    const DofLayout layout(*ctx.mesh, *ctx.basis);
    const SpMat M = assemble_mass(*ctx.mesh, *ctx.basis, ctx.vol_rule);
    const auto [Gx, Gy] = assemble_grad_flux(*ctx.mesh, *ctx.basis, ctx.vol_rule, edge_points);
    const auto [D, Epen] = assemble_penalties(*ctx.mesh, *ctx.basis, edge_points, e1, e2);
    BlockSystem sys = compose_system(layout, M, Gx, Gy, D, Epen, std::move(Bx), std::move(By),
                                     ctx.dt0);
    const auto t2 = clock::now();
    ctx.assembly_seconds = secs(t1, t2);

    std::function<double(const Vec2&, double)> forcing;
    if (cfg.forcing == "zero")
        forcing = [](const Vec2&, double) { return 0.0; };
    else {
        const ManufacturedProblem prob = ctx.problem;
        forcing = [prob](const Vec2& p, double t) { return prob.forcing(p, t); };
    }

    ctx.stepper = std::make_unique<Stepper>(*ctx.mesh, *ctx.basis, ctx.vol_rule, forcing,
                                            ctx.problem.b, std::move(sys));
    if (cfg.initial == "zero") {
        ctx.stepper->set_initial(Eigen::VectorXd::Zero(layout.field_size()));
    } else {
        const ManufacturedProblem& prob = ctx.problem;
        ctx.stepper->set_initial(project_field(*ctx.mesh, *ctx.basis, ctx.vol_rule,
                                               [&prob](const Vec2& p) { return prob.initial(p); }));
    }
    return ctx;
}

/// March to T with uniform steps dt0; the final step is shortened to land
/// exactly on T. Calls on_step(state, seminorm_increment) after every step.
inline void march_to(RunContext& ctx, double T,
                     const std::function<void(const SolutionState&, double)>& on_step = {}) {
    Stepper& st = *ctx.stepper;
    const double tiny = 1e-12 * std::max(T, 1.0);
    while (st.state().t < T - tiny) {
        const double remaining = T - st.state().t;
        double dtn = std::min(ctx.dt0, remaining);
        if (remaining - ctx.dt0 < tiny && remaining > ctx.dt0)
            dtn = remaining; // avoid a vanishing trailing step
        if (std::abs(dtn - st.dt()) > 1e-14 * ctx.dt0)
            st.set_dt(dtn);
        st.advance();
        if (on_step) {
            const double sem = energy_seminorm(st.system(), st.state());
            on_step(st.state(), sem);
        }
    }
}

inline std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4e", v);
    return buf;
}

inline void write_report_csv(const StudyReport& report, std::ostream& os) {
    os << "h,L2_u,rate_L2,L1_u,rate_L1,L2_dxu,rate_dxu,L2_dyu,rate_dyu\n";
    auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt_sci(v); };
    for (const ErrorRow& r : report.rows)
        os << fmt_sci(r.h) << ',' << fmt_sci(r.l2_u) << ',' << cell(r.rate_l2) << ','
           << fmt_sci(r.l1_u) << ',' << cell(r.rate_l1) << ',' << fmt_sci(r.l2_dxu) << ','
           << cell(r.rate_dxu) << ',' << fmt_sci(r.l2_dyu) << ',' << cell(r.rate_dyu) << '\n';
}

inline void write_report_csv(const StudyReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("write_report_csv: cannot open " + path);
    write_report_csv(report, os);
    if (!os)
        throw std::runtime_error("write_report_csv: write failed for " + path);
}

/// Run the full mesh sequence of a study and collect the table rows.
inline StudyReport run_convergence_study(const StudyConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    StudyReport report;
    for (int nx : cfg.meshes) {
        using clock = std::chrono::steady_clock;
        RunContext ctx = build_run_context(cfg, nx);
        const auto t0 = clock::now();
        march_to(ctx, cfg.t_final);
        const double march_seconds = std::chrono::duration<double>(clock::now() - t0).count();

        ErrorRow row = error_norms(*ctx.mesh, *ctx.basis, ctx.err_rule, ctx.stepper->state().u,
                                   ctx.problem, cfg.t_final);
        if (!report.rows.empty()) {
            const ErrorRow& prev = report.rows.back();
            row.rate_l2 = convergence_rate(prev.l2_u, prev.h, row.l2_u, row.h);
            row.rate_l1 = convergence_rate(prev.l1_u, prev.h, row.l1_u, row.h);
            row.rate_dxu = convergence_rate(prev.l2_dxu, prev.h, row.l2_dxu, row.h);
            row.rate_dyu = convergence_rate(prev.l2_dyu, prev.h, row.l2_dyu, row.h);
        }
        report.rows.push_back(row);
        if (log) {
            const auto [pdx, pdy] =
                p_error_norms(*ctx.mesh, *ctx.basis, ctx.err_rule, ctx.stepper->state().px,
                              ctx.stepper->state().py, ctx.problem, cfg.t_final);
            *log << "mesh " << nx << "x" << nx << ": fractional assembly "
                 << fmt_sci(ctx.frac_seconds) << " s, other assembly "
                 << fmt_sci(ctx.assembly_seconds) << " s, march " << fmt_sci(march_seconds)
                 << " s, L2_u " << fmt_sci(row.l2_u) << ", p-field errors "
                 << fmt_sci(pdx) << " " << fmt_sci(pdy) << "\n";
        }
    }
    if (!cfg.out.empty())
        write_report_csv(report, cfg.out);
    return report;
}

/// Per-step stability log on a single mesh: ||u||^2, the accumulated
/// 2 dt sum |.|^2_A, and the ratio against ||u0||^2 + dt sum ||f||^2.
inline std::vector<StabilityRow> run_stability_probe(const StudyConfig& cfg,
                                                     std::ostream* log = nullptr) {
    cfg.validate();
    RunContext ctx = build_run_context(cfg, cfg.nx);
    const Stepper& st = *ctx.stepper;
    const BlockSystem& sys = st.system();

    const double u0_sq = st.state().u.dot(sys.M * st.state().u);
    double sem_cum = 0.0, f_cum = 0.0;
    std::vector<StabilityRow> rows;
    const bool zero_forcing = (cfg.forcing == "zero");
    const ManufacturedProblem& prob = ctx.problem;

    for (int n = 0; n < cfg.steps; ++n) {
        ctx.stepper->advance();
        const SolutionState& s = st.state();
        const double sem = energy_seminorm(sys, s);
        sem_cum += 2.0 * sys.dt * sem;
        if (!zero_forcing) {
            double fsq = 0.0;
            for (int e = 0; e < ctx.mesh->n_triangles(); ++e) {
                const double jac = 2.0 * ctx.mesh->tri(e).area;
                for (int g = 0; g < ctx.err_rule.size(); ++g) {
                    const Vec2 p = ctx.mesh->from_reference(e, ctx.err_rule.points[g]);
                    const double f = prob.forcing(p, s.t);
                    fsq += ctx.err_rule.weights[g] * jac * f * f;
                }
            }
            f_cum += sys.dt * fsq;
        }
        const double num = s.u.dot(sys.M * s.u) + sem_cum;
        const double den = u0_sq + f_cum;
        StabilityRow row{s.n, s.t, s.u.dot(sys.M * s.u), sem_cum,
                         den > 0.0 ? num / den : 0.0};
        rows.push_back(row);
        if (log)
            *log << row.n << ',' << fmt_sci(row.t) << ',' << fmt_sci(row.norm_u_sq) << ','
                 << fmt_sci(row.seminorm_cum) << ',' << fmt_sci(row.bound_ratio) << '\n';
    }
    return rows;
}

} // namespace frachdg
