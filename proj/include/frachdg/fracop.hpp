#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "frachdg/basis.hpp"
#include "frachdg/mesh.hpp"
#include "frachdg/quadrature.hpp"
#include "frachdg/types.hpp"

namespace frachdg {

/// Spatial orders (alpha, beta) in (1,2)^2 and the derived integral orders
/// (alpha1, alpha2) = (2-alpha, 2-beta) in (0,1)^2.
struct FractionalOrders {
    double alpha, beta;

    FractionalOrders(double a, double b) : alpha(a), beta(b) {
        if (!(a > 1.0 && a < 2.0 && b > 1.0 && b < 2.0))
            throw std::invalid_argument("FractionalOrders: alpha, beta must lie in (1,2)");
    }

    double alpha1() const { return 2.0 - alpha; } // order of the x integral
    double alpha2() const { return 2.0 - beta; }  // order of the y integral
};

/// Gauss point counts for the ray quadrature: `n_smooth` Legendre points per
/// smooth panel, `n_singular` Jacobi points on the segment that carries the
/// kernel endpoint singularity.
struct FracQuadOptions {
    int n_smooth = 8;
    int n_singular = 4;
};

namespace detail {

/// Quadrature of the left Riemann-Liouville kernel along an axis-parallel
/// ray: emits (element, point, weight) triples such that
///   sum w * g(point) ~ int_origin^s_t (s_t - s)^(mu-1)/Gamma(mu) g(s) ds
/// for a broken-polynomial g. The final segment (touching the target) uses
/// the Jacobi rule absorbing the singular weight and is therefore exact for
/// polynomial g; smooth segments are bisected until each panel is at least
/// its own length away from the singularity, which keeps plain Legendre
/// panels saturated at the default point counts.
class RayKernelQuadrature {
  public:
    RayKernelQuadrature(double mu, const FracQuadOptions& opt)
        : mu_(mu), inv_gamma_(1.0 / std::tgamma(mu)),
          leg_(gauss_legendre(opt.n_smooth, 0.0, 1.0)),
          jac_(gauss_jacobi_right(opt.n_singular, 0.0, 1.0, mu - 1.0)) {
        if (!(mu > 0.0 && mu < 1.0))
            throw std::invalid_argument("RayKernelQuadrature: mu must lie in (0,1)");
    }

    template <class Emit>
    void integrate(const Mesh& mesh, Axis axis, const Vec2& target, Emit&& emit) const {
        const double s_t = (axis == Axis::X) ? target.x : target.y;
        const double transverse = (axis == Axis::X) ? target.y : target.x;
        const auto segs = mesh.ray_segments(axis, transverse, s_t);
        for (std::size_t k = 0; k < segs.size(); ++k) {
            const RaySegment& seg = segs[k];
            if (k + 1 == segs.size())
                singular_segment(axis, seg, std::forward<Emit>(emit));
            else
                smooth_segment(axis, seg, s_t, std::forward<Emit>(emit));
        }
    }

  private:
    static Vec2 ray_point(Axis axis, double s, double transverse) {
        return axis == Axis::X ? Vec2{s, transverse} : Vec2{transverse, s};
    }

    template <class Emit>
    void singular_segment(Axis axis, const RaySegment& seg, Emit&& emit) const {
        const double len = seg.hi - seg.lo;
        const double scale = std::pow(len, mu_) * inv_gamma_;
        for (int q = 0; q < jac_.size(); ++q) {
            const double s = seg.lo + len * jac_.points[q];
            emit(seg.tri, ray_point(axis, s, seg.transverse), jac_.weights[q] * scale);
        }
    }

    template <class Emit>
    void smooth_segment(Axis axis, const RaySegment& seg, double s_t, Emit&& emit) const {
        const double seg_len = seg.hi - seg.lo;
        std::vector<std::pair<double, double>> stack{{seg.lo, seg.hi}};
        while (!stack.empty()) {
            const auto [lo, hi] = stack.back();
            stack.pop_back();
            const double len = hi - lo;
            if (len <= (s_t - hi) || len <= 1e-13 * seg_len) {
                for (int q = 0; q < leg_.size(); ++q) {
                    const double s = lo + len * leg_.points[q];
                    const double w = leg_.weights[q] * len *
                                     std::pow(s_t - s, mu_ - 1.0) * inv_gamma_;
                    emit(seg.tri, ray_point(axis, s, seg.transverse), w);
                }
            } else {
                const double mid = 0.5 * (lo + hi);
                stack.emplace_back(mid, hi);
                stack.emplace_back(lo, mid);
            }
        }
    }

    double mu_;
    double inv_gamma_;
    IntervalRule leg_; // reference [0,1]
    IntervalRule jac_; // reference [0,1], weight (1-s)^(mu-1) absorbed
};

} // namespace detail

/// Evaluate a broken-polynomial field at a physical point of a known element.
inline double eval_broken_field(const Mesh& mesh, const ReferenceBasis& basis,
                                const Eigen::VectorXd& coeffs, int elem, const Vec2& p) {
    const int n = basis.size();
    const Eigen::VectorXd phi = basis.values_at(mesh.to_reference(elem, p));
    return coeffs.segment(static_cast<Eigen::Index>(elem) * n, n).dot(phi);
}

/// Left Riemann-Liouville fractional integral of order mu of a broken
/// polynomial field, taken along the x- or y-parallel ray through `point`
/// from the domain edge.
inline double frac_integral_pointwise(const Mesh& mesh, const ReferenceBasis& basis,
                                      const Eigen::VectorXd& coeffs, double mu, Axis axis,
                                      const Vec2& point, const FracQuadOptions& opt = {}) {
    const Domain& dom = mesh.domain();
    const double tol = 1e-12 * std::max(dom.width(), dom.height());
    if (point.x < dom.a - tol || point.x > dom.b + tol || point.y < dom.c - tol ||
        point.y > dom.d + tol)
        throw std::domain_error("frac_integral_pointwise: point outside the domain");
    if (coeffs.size() != static_cast<Eigen::Index>(mesh.n_triangles()) * basis.size())
        throw std::invalid_argument("frac_integral_pointwise: coefficient array size mismatch");

    detail::RayKernelQuadrature ray(mu, opt);
    double value = 0.0;
    ray.integrate(mesh, axis, point, [&](int elem, const Vec2& p, double w) {
        value += w * eval_broken_field(mesh, basis, coeffs, elem, p);
    });
    return value;
}

/// Global coupling matrix of the fractional integral against the broken
/// basis: B[(E,i),(E',j)] = int_E phi_i * I^mu(phi_j restricted to E'),
/// stored as packed dense blocks over the upstream band of each target
/// element (kernel causality makes everything else exactly zero).
class FracCouplingMatrix {
  public:
    struct Band {
        std::vector<int> elems;                // ascending
        std::vector<Eigen::MatrixXd> blocks;   // n_loc x n_loc each
    };

    FracCouplingMatrix() = default;
    FracCouplingMatrix(Axis axis, double mu, int n_elems, int n_loc)
        : axis_(axis), mu_(mu), n_elems_(n_elems), n_loc_(n_loc), rows_(n_elems) {}

    Axis axis() const { return axis_; }
    double mu() const { return mu_; }
    int n_elems() const { return n_elems_; }
    int n_loc() const { return n_loc_; }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(n_elems_) * n_loc_; }
    const Band& band(int target) const { return rows_[target]; }
    Band& band(int target) { return rows_[target]; }

    Eigen::VectorXd apply(const Eigen::VectorXd& p) const {
        if (p.size() != dim())
            throw std::invalid_argument("FracCouplingMatrix::apply: size mismatch");
        Eigen::VectorXd y = Eigen::VectorXd::Zero(dim());
        for (int e = 0; e < n_elems_; ++e) {
            auto out = y.segment(static_cast<Eigen::Index>(e) * n_loc_, n_loc_);
            const Band& row = rows_[e];
            for (std::size_t b = 0; b < row.elems.size(); ++b)
                out += row.blocks[b] *
                       p.segment(static_cast<Eigen::Index>(row.elems[b]) * n_loc_, n_loc_);
        }
        return y;
    }

    double quad_form(const Eigen::VectorXd& p) const { return p.dot(apply(p)); }

    void add_triplets(double sign, Eigen::Index row_offset, Eigen::Index col_offset,
                      std::vector<Eigen::Triplet<double>>& out) const {
        for (int e = 0; e < n_elems_; ++e) {
            const Band& row = rows_[e];
            for (std::size_t b = 0; b < row.elems.size(); ++b)
                for (int i = 0; i < n_loc_; ++i)
                    for (int j = 0; j < n_loc_; ++j)
                        out.emplace_back(row_offset + e * n_loc_ + i,
                                         col_offset + row.elems[b] * n_loc_ + j,
                                         sign * row.blocks[b](i, j));
        }
    }

  private:
    Axis axis_ = Axis::X;
    double mu_ = 0.5;
    int n_elems_ = 0;
    int n_loc_ = 0;
    std::vector<Band> rows_;
};

/// Assemble the coupling matrix by evaluating the fractional integral of
/// every upstream basis function at each volume Gauss point of each target
/// element. The result is time-independent and reused across all steps.
inline FracCouplingMatrix assemble_frac_coupling_matrix(const Mesh& mesh,
                                                        const ReferenceBasis& basis,
                                                        const TriangleRule& vol_rule, double mu,
                                                        Axis axis,
                                                        const FracQuadOptions& opt = {}) {
    if (!(mu > 0.0 && mu < 1.0))
        throw std::invalid_argument("assemble_frac_coupling_matrix: mu must lie in (0,1)");
    const int n = basis.size();
    const int ne = mesh.n_triangles();
    FracCouplingMatrix B(axis, mu, ne, n);

    const BasisTable table = basis.eval(vol_rule.points);
    detail::RayKernelQuadrature ray(mu, opt);

    for (int e = 0; e < ne; ++e) {
        std::map<int, Eigen::MatrixXd> acc;
        const double jac = 2.0 * mesh.tri(e).area;
        for (int g = 0; g < vol_rule.size(); ++g) {
            const Vec2 target = mesh.from_reference(e, vol_rule.points[g]);
            const double wg = vol_rule.weights[g] * jac;
            const Eigen::VectorXd test = wg * table.values.row(g).transpose();

            Eigen::MatrixXd* block = nullptr;
            int cached = -1;
            ray.integrate(mesh, axis, target, [&](int elem, const Vec2& p, double w) {
                if (elem != cached) {
                    auto [it, inserted] = acc.try_emplace(elem, Eigen::MatrixXd::Zero(n, n));
                    (void)inserted;
                    block = &it->second;
                    cached = elem;
                }
                const Eigen::VectorXd phi = basis.values_at(mesh.to_reference(elem, p));
                block->noalias() += test * (w * phi).transpose();
            });
        }
        FracCouplingMatrix::Band& row = B.band(e);
        row.elems.reserve(acc.size());
        row.blocks.reserve(acc.size());
        for (auto& [elem, blk] : acc) {
            row.elems.push_back(elem);
            row.blocks.push_back(std::move(blk));
        }
    }
    return B;
}

// ---------------------------------------------------------------------------
// Binary cache. Format: header line `frachdg-bmat v1 <mu> <axis> <rows>`
// followed by raw little-endian 64-bit floats in row-packed order (targets
// ascending, upstream blocks ascending, blocks row-major). The band
// structure is deterministic given mesh, volume rule and axis, so the
// loader rebuilds it geometrically and reads only the payload.
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "fractional matrix cache assumes a little-endian host");

inline std::string frac_cache_filename(const Mesh& mesh, double mu, Axis axis, int degree,
                                       int vol_exactness, const FracQuadOptions& opt) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "bmat-%016llx-%s-mu%.10f-k%d-v%d-s%d-q%d.bin",
                  static_cast<unsigned long long>(mesh.hash()), axis_name(axis).c_str(), mu,
                  degree, vol_exactness, opt.n_smooth, opt.n_singular);
    return buf;
}

inline void save_frac_matrix_cache(const FracCouplingMatrix& B, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_frac_matrix_cache: cannot open " + path);
    char header[128];
    std::snprintf(header, sizeof(header), "frachdg-bmat v1 %.17g %s %lld\n", B.mu(),
                  axis_name(B.axis()).c_str(), static_cast<long long>(B.dim()));
    os << header;
    for (int e = 0; e < B.n_elems(); ++e)
        for (const Eigen::MatrixXd& blk : B.band(e).blocks)
            for (int i = 0; i < blk.rows(); ++i)
                os.write(reinterpret_cast<const char*>(blk.row(i).eval().data()),
                         static_cast<std::streamsize>(sizeof(double)) * blk.cols());
    if (!os)
        throw std::runtime_error("save_frac_matrix_cache: write failed for " + path);
}

/// Upstream element ids seen from the volume Gauss points of each target
/// element; this is exactly the band structure the assembly produces.
inline std::vector<std::vector<int>> frac_band_structure(const Mesh& mesh,
                                                         const TriangleRule& vol_rule,
                                                         Axis axis) {
    std::vector<std::vector<int>> bands(mesh.n_triangles());
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        std::set<int> elems;
        for (int g = 0; g < vol_rule.size(); ++g) {
            const Vec2 target = mesh.from_reference(e, vol_rule.points[g]);
            const double s_t = (axis == Axis::X) ? target.x : target.y;
            const double tv = (axis == Axis::X) ? target.y : target.x;
            for (const RaySegment& seg : mesh.ray_segments(axis, tv, s_t))
                elems.insert(seg.tri);
        }
        bands[e].assign(elems.begin(), elems.end());
    }
    return bands;
}

inline std::optional<FracCouplingMatrix> load_frac_matrix_cache(
    const std::string& path, const Mesh& mesh, const ReferenceBasis& basis,
    const TriangleRule& vol_rule, double mu, Axis axis) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        return std::nullopt;
    std::string line;
    if (!std::getline(is, line))
        return std::nullopt;
    std::istringstream hs(line);
    std::string magic, version, ax;
    double file_mu = 0.0;
    long long rows = 0;
    hs >> magic >> version >> file_mu >> ax >> rows;
    const int n = basis.size();
    if (magic != "frachdg-bmat" || version != "v1" || ax != axis_name(axis) ||
        std::abs(file_mu - mu) > 1e-14 ||
        rows != static_cast<long long>(mesh.n_triangles()) * n)
        return std::nullopt;

    FracCouplingMatrix B(axis, mu, mesh.n_triangles(), n);
    const auto structure = frac_band_structure(mesh, vol_rule, axis);
    for (int e = 0; e < mesh.n_triangles(); ++e) {
        FracCouplingMatrix::Band& row = B.band(e);
        row.elems = structure[e];
        row.blocks.resize(row.elems.size());
        for (Eigen::MatrixXd& blk : row.blocks) {
            blk.resize(n, n);
            for (int i = 0; i < n; ++i) {
                std::array<double, 16> tmp{};
                is.read(reinterpret_cast<char*>(tmp.data()),
                        static_cast<std::streamsize>(sizeof(double)) * n);
                if (!is)
                    return std::nullopt;
                for (int j = 0; j < n; ++j)
                    blk(i, j) = tmp[j];
            }
        }
    }
    char probe;
    if (is.read(&probe, 1))
        return std::nullopt; // trailing bytes: not our file
    return B;
}

} // namespace frachdg
