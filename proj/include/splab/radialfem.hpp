#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "splab/model.hpp"
#include "splab/nonlinearity.hpp"
#include "splab/numeric.hpp"

namespace splab {

/// Graded radial grid on [0, R_max] for the discretization of D^{1,p}(R^N)
/// by piecewise-linear radial functions.
///
/// The kinetic term uses the exact per-element moment
///   int_{rho_i}^{rho_{i+1}} rho^{N-1} drho = (rho_{i+1}^N - rho_i^N)/N,
/// which makes dp_norm exact on piecewise-linear functions; weight and
/// nonlinearity integrals use 2-point Gauss per element.
struct RadialMesh {
    std::vector<double> nodes;  // rho_0 = 0 < rho_1 < ... < rho_M = R_max
    int dim = 3;
    double area = 0.0;         // area of the unit (N-1)-sphere
    double core_radius = 0.0;  // end of the uniformly spaced core

    std::vector<double> elem_len;  // M entries
    std::vector<double> kin_w;     // area * (rho_{i+1}^N - rho_i^N)/N
    std::vector<double> quad_x;    // 2 Gauss points per element
    std::vector<double> quad_w;    // plain drho weights (sum = element length)
    std::vector<double> quad_W;    // measure weights: quad_w * area * x^{N-1}

    // barycentric position of the two Gauss points inside an element
    static constexpr double kXi[2] = {0.21132486540518711775, 0.78867513459481288225};

    int element_count() const { return static_cast<int>(elem_len.size()); }
    int node_count() const { return static_cast<int>(nodes.size()); }
    double r_max() const { return nodes.back(); }

    void finalize() {
        const int M = static_cast<int>(nodes.size()) - 1;
        area = sphere_area(dim);
        elem_len.resize(M);
        kin_w.resize(M);
        quad_x.resize(2 * M);
        quad_w.resize(2 * M);
        quad_W.resize(2 * M);
        for (int e = 0; e < M; ++e) {
            const double a = nodes[e], b = nodes[e + 1];
            const double l = b - a;
            elem_len[e] = l;
            kin_w[e] = area * (std::pow(b, dim) - std::pow(a, dim)) / dim;
            for (int g = 0; g < 2; ++g) {
                const double x = a + kXi[g] * l;
                quad_x[2 * e + g] = x;
                quad_w[2 * e + g] = 0.5 * l;
                quad_W[2 * e + g] = 0.5 * l * area * std::pow(x, dim - 1);
            }
        }
    }
};

/// Uniform core [0, r_core] for the first half of the elements, geometric
/// grading (fixed ratio `growth`) from r_core to R_max for the rest; the last
/// node lands on R_max exactly. r_core == R_max degenerates to a fully
/// uniform mesh.
inline std::shared_ptr<const RadialMesh> build_mesh(int M, double R_max, double r_core,
                                                    double growth, int dim) {
    if (M < 16) throw std::invalid_argument("build_mesh: need M >= 16");
    if (!(r_core > 0.0 && r_core <= R_max))
        throw std::invalid_argument("build_mesh: need 0 < r_core <= R_max");
    if (dim < 2) throw std::invalid_argument("build_mesh: need N >= 2");

    auto mesh = std::make_shared<RadialMesh>();
    mesh->dim = dim;
    mesh->core_radius = r_core;
    mesh->nodes.reserve(M + 1);

    if (r_core == R_max) {
        for (int i = 0; i <= M; ++i) mesh->nodes.push_back(R_max * i / M);
    } else {
        const int m_core = M / 2;
        const int m_tail = M - m_core;
        if (!(growth > 1.0)) {
            // Suggest the ratio whose first tail element continues the core
            // spacing: (R-rc)(g-1)/(g^m-1) = rc/m_core.
            const double l_core = r_core / m_core;
            double lo = 1.0 + 1e-12, hi = 4.0;
            auto first_len = [&](double g) {
                return (R_max - r_core) * (g - 1.0) / (std::pow(g, m_tail) - 1.0);
            };
            while (first_len(hi) > l_core && hi < 1e6) hi *= 2.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (first_len(mid) > l_core ? lo : hi) = mid;
            }
            throw std::invalid_argument("build_mesh: growth must exceed 1 (suggested growth ~= " +
                                        std::to_string(0.5 * (lo + hi)) + ")");
        }
        for (int i = 0; i <= m_core; ++i) mesh->nodes.push_back(r_core * i / m_core);
        const double l1 =
            (R_max - r_core) * (growth - 1.0) / (std::pow(growth, m_tail) - 1.0);
        double pos = r_core, len = l1;
        for (int i = 0; i < m_tail; ++i) {
            pos += len;
            mesh->nodes.push_back(i + 1 == m_tail ? R_max : pos);
            len *= growth;
        }
    }
    mesh->finalize();
    return mesh;
}

/// Nodal radial function on a mesh; piecewise linear between nodes, pinned to
/// zero at the last node (Dirichlet truncation of decay at infinity).
class RadialFunction {
public:
    explicit RadialFunction(std::shared_ptr<const RadialMesh> mesh)
        : mesh_(std::move(mesh)), v_(mesh_->node_count(), 0.0) {}

    RadialFunction(std::shared_ptr<const RadialMesh> mesh, std::vector<double> values)
        : mesh_(std::move(mesh)), v_(std::move(values)) {
        if (static_cast<int>(v_.size()) != mesh_->node_count())
            throw std::invalid_argument("RadialFunction: value count does not match mesh");
        v_.back() = 0.0;
    }

    const RadialMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const RadialMesh>& mesh_ptr() const { return mesh_; }

    std::span<const double> values() const { return v_; }
    double operator[](int i) const { return v_[i]; }

    /// Mutable nodal storage. Callers must keep the last node at zero; every
    /// library mutation path re-pins it.
    std::vector<double>& mutable_values() { return v_; }
    void pin_boundary() { v_.back() = 0.0; }

    double value_at(double rho) const {
        const auto& xs = mesh_->nodes;
        if (rho <= 0.0) return v_.front();
        if (rho >= xs.back()) return 0.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), rho);
        const std::size_t e = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double w = (rho - xs[e]) / (xs[e + 1] - xs[e]);
        return v_[e] + w * (v_[e + 1] - v_[e]);
    }

    double sup_norm() const {
        double m = 0.0;
        for (double x : v_) m = std::max(m, std::abs(x));
        return m;
    }

    /// Minimum over the free nodes (the pinned boundary node is excluded).
    double min_free_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < v_.size(); ++i) m = std::min(m, v_[i]);
        return m;
    }

private:
    std::shared_ptr<const RadialMesh> mesh_;
    std::vector<double> v_;
};

namespace detail {

inline double quad_value(const RadialFunction& u, int e, int g) {
    const double xi = RadialMesh::kXi[g];
    return u[e] * (1.0 - xi) + u[e + 1] * xi;
}

/// d/du_i of the kinetic energy (1/p)||u||^p, i.e. the pairing of the
/// p-flux with the hat function at node i.
inline double kinetic_pairing(const RadialFunction& u, int i, double p) {
    const RadialMesh& m = u.mesh();
    double k = 0.0;
    if (i > 0) {
        const double s = (u[i] - u[i - 1]) / m.elem_len[i - 1];
        k += pow_signed(s, p - 1.0) * m.kin_w[i - 1] / m.elem_len[i - 1];
    }
    if (i < m.element_count()) {
        const double s = (u[i + 1] - u[i]) / m.elem_len[i];
        k -= pow_signed(s, p - 1.0) * m.kin_w[i] / m.elem_len[i];
    }
    return k;
}

/// dp_norm of the hat function at node i.
inline double hat_norm(const RadialMesh& m, int i, double p) {
    double s = 0.0;
    if (i > 0) s += m.kin_w[i - 1] / std::pow(m.elem_len[i - 1], p);
    if (i < m.element_count()) s += m.kin_w[i] / std::pow(m.elem_len[i], p);
    return std::pow(s, 1.0 / p);
}

}  // namespace detail

/// ||u||^p = integral of |grad u|^p over R^N; exact for the piecewise-linear
/// representative.
inline double dp_norm_pow(const RadialFunction& u, double p) {
    const RadialMesh& m = u.mesh();
    double s = 0.0;
    for (int e = 0; e < m.element_count(); ++e) {
        const double slope = (u[e + 1] - u[e]) / m.elem_len[e];
        s += std::pow(std::abs(slope), p) * m.kin_w[e];
    }
    return s;
}

inline double dp_norm(const RadialFunction& u, double p) {
    return std::pow(dp_norm_pow(u, p), 1.0 / p);
}

/// Weighted Lebesgue norm ( int h |u|^q dx )^{1/q} by element quadrature.
inline double lqh_norm(const RadialFunction& u, double q, const WeightSpec& h) {
    if (!(q >= 1.0)) throw std::invalid_argument("lqh_norm: need q >= 1");
    const RadialMesh& m = u.mesh();
    double s = 0.0;
    for (int e = 0; e < m.element_count(); ++e)
        for (int g = 0; g < 2; ++g) {
            const int k = 2 * e + g;
            s += m.quad_W[k] * h.h(m.quad_x[k]) * std::pow(std::abs(detail::quad_value(u, e, g)), q);
        }
    return std::pow(s, 1.0 / q);
}

/// Energy I_a(u) = (1/p)||u||^p - int h F_a(u) dx.
inline double energy(const RadialFunction& u, const ProblemSpec& spec) {
    const ShiftedNonlinearity fa(spec.f, spec.a);
    const RadialMesh& m = u.mesh();
    double nl = 0.0;
    for (int e = 0; e < m.element_count(); ++e)
        for (int g = 0; g < 2; ++g) {
            const int k = 2 * e + g;
            nl += m.quad_W[k] * spec.h.h(m.quad_x[k]) * fa.F_a(detail::quad_value(u, e, g));
        }
    return dp_norm_pow(u, spec.p) / spec.p - nl;
}

/// Exact partial derivatives of the discrete energy with f_a replaced by its
/// mollified selection; the Dirichlet entry is forced to zero.
inline std::vector<double> grad_energy(const RadialFunction& u, const ProblemSpec& spec,
                                       double eps_moll) {
    if (!(eps_moll > 0.0)) throw std::invalid_argument("grad_energy: need eps_moll > 0");
    const ShiftedNonlinearity fa(spec.f, spec.a);
    const RadialMesh& m = u.mesh();
    const int M = m.element_count();
    std::vector<double> g(M + 1, 0.0);
    for (int e = 0; e < M; ++e) {
        const double s = (u[e + 1] - u[e]) / m.elem_len[e];
        const double flux = pow_signed(s, spec.p - 1.0) * m.kin_w[e] / m.elem_len[e];
        g[e] -= flux;
        g[e + 1] += flux;
        for (int q = 0; q < 2; ++q) {
            const int k = 2 * e + q;
            const double xi = RadialMesh::kXi[q];
            const double val =
                m.quad_W[k] * spec.h.h(m.quad_x[k]) * fa.mollified_f_a(detail::quad_value(u, e, q), eps_moll);
            g[e] -= val * (1.0 - xi);
            g[e + 1] -= val * xi;
        }
    }
    g[M] = 0.0;
    return g;
}

/// Discrete nonsmooth criticality certificate: for every free node i and both
/// signed hat directions v = +-e_i it evaluates
///   D(v) = int |grad u|^{p-2} grad u . grad v dx + int h (-F_a)^0(u, v) dx
/// with the exact Clarke formula at quadrature points, and reports
///   violation_i = max(0, -D(+e_i), -D(-e_i)) / ||e_i||.
/// Criticality in the variational-inequality sense means every violation
/// vanishes; the certificate's scope is the hat basis and its negatives.
struct CriticalityCertificate {
    double max_violation = 0.0;
    std::vector<double> per_node_violations;
    int tested_directions = 0;
};

inline CriticalityCertificate check_critical(const RadialFunction& u, const ProblemSpec& spec) {
    const ShiftedNonlinearity fa(spec.f, spec.a);
    const RadialMesh& m = u.mesh();
    const int M = m.element_count();
    CriticalityCertificate cert;
    cert.per_node_violations.assign(M, 0.0);
    cert.tested_directions = 2 * M;
    for (int i = 0; i < M; ++i) {
        const double kin = detail::kinetic_pairing(u, i, spec.p);
        double clarke_plus = 0.0, clarke_minus = 0.0;
        for (int e = std::max(0, i - 1); e <= std::min(M - 1, i); ++e)
            for (int g = 0; g < 2; ++g) {
                const int k = 2 * e + g;
                const double xi = RadialMesh::kXi[g];
                const double phi = (e == i) ? (1.0 - xi) : xi;
                const double hv = m.quad_W[k] * spec.h.h(m.quad_x[k]);
                const double uv = detail::quad_value(u, e, g);
                clarke_plus += hv * fa.clarke_neg_Fa(uv, phi);
                clarke_minus += hv * fa.clarke_neg_Fa(uv, -phi);
            }
        const double d_plus = kin + clarke_plus;
        const double d_minus = -kin + clarke_minus;
        const double viol = std::max({0.0, -d_plus, -d_minus}) / detail::hat_norm(m, i, spec.p);
        cert.per_node_violations[i] = viol;
        cert.max_violation = std::max(cert.max_violation, viol);
    }
    return cert;
}

/// Worst normalized slack of the sub/supersolution inequalities
///   int h (f(u)-a) phi  <=  int |grad u|^{p-2} grad u . grad phi  <=  int h f(u) phi
/// over the nonnegative hat functions phi = e_i. Positive slack = satisfied.
/// Returns (subsolution margin, supersolution margin).
inline std::pair<double, double> subsup_check(const RadialFunction& u, const ProblemSpec& spec) {
    const double tol_neg = 1e-8 * std::max(1.0, u.sup_norm());
    if (u.min_free_value() < -tol_neg)
        throw std::invalid_argument("subsup_check: u must be nonnegative (up to tolerance)");
    const RadialMesh& m = u.mesh();
    const int M = m.element_count();
    double sub_margin = std::numeric_limits<double>::infinity();
    double sup_margin = sub_margin;
    for (int i = 0; i < M; ++i) {
        const double kin = detail::kinetic_pairing(u, i, spec.p);
        double f_term = 0.0, h_term = 0.0;
        for (int e = std::max(0, i - 1); e <= std::min(M - 1, i); ++e)
            for (int g = 0; g < 2; ++g) {
                const int k = 2 * e + g;
                const double xi = RadialMesh::kXi[g];
                const double phi = (e == i) ? (1.0 - xi) : xi;
                const double hv = m.quad_W[k] * spec.h.h(m.quad_x[k]);
                const double uv = std::max(0.0, detail::quad_value(u, e, g));
                f_term += hv * spec.f.f(uv) * phi;
                h_term += hv * phi;
            }
        const double norm = detail::hat_norm(m, i, spec.p);
        sub_margin = std::min(sub_margin, (f_term - kin) / norm);
        sup_margin = std::min(sup_margin, (kin - (f_term - spec.a * h_term)) / norm);
    }
    return {sub_margin, sup_margin};
}

/// Numeric radial p-Laplacian of a closed-form profile v at radius rho:
///   Delta_p v = |v'|^{p-2} [ (p-1) v'' + (N-1)/rho v' ]
/// with central differences of half-width delta (auto-chosen when <= 0).
template <typename F>
double p_laplacian_fd(F&& v, double p, int dim, double rho, double delta = 0.0) {
    if (delta <= 0.0) delta = 1e-4 * std::max(1.0, rho);
    if (!(rho > delta))
        throw std::invalid_argument("p_laplacian_fd: rho must exceed the stencil width");
    const double vp = (v(rho + delta) - v(rho - delta)) / (2.0 * delta);
    const double vpp = (v(rho + delta) - 2.0 * v(rho) + v(rho - delta)) / (delta * delta);
    return std::pow(std::abs(vp), p - 2.0) * ((p - 1.0) * vpp + (dim - 1) / rho * vp);
}

/// Rescaling of a solution: v = a^{-1/(q-1)} u solves the problem with unit
/// shift and coefficient lambda = a^{(q-p)/(q-1)}.
inline std::pair<RadialFunction, double> rescale_solution(const RadialFunction& u, double a,
                                                          double q, double p) {
    if (!(a > 0.0)) throw std::invalid_argument("rescale_solution: need a > 0");
    if (q == 1.0) throw std::invalid_argument("rescale_solution: need q != 1");
    const double scale = std::pow(a, -1.0 / (q - 1.0));
    RadialFunction v(u.mesh_ptr());
    auto& vv = v.mutable_values();
    for (int i = 0; i < u.mesh().node_count(); ++i) vv[i] = scale * u[i];
    v.pin_boundary();
    const double lambda = std::pow(a, (q - p) / (q - 1.0));
    return {std::move(v), lambda};
}

}  // namespace splab
