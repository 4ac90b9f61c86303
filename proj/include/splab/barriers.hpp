#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "splab/numeric.hpp"
#include "splab/radialfem.hpp"

namespace splab {

/// Radial window (rho_lo, rho_hi) used by tail diagnostics.
struct Window {
    double lo = 0.0;
    double hi = 0.0;
};

/// Power solution of Delta_p (sigma |x|^lambda) = varrho |x|^b:
///   lambda = (p+b)/(p-1),   |sigma|^{p-2} sigma = varrho / ((N+b) |lambda|^{p-2} lambda).
struct PowerSolution {
    double lambda = 0.0;
    double sigma = 0.0;
    double b = 0.0;
    double varrho = 0.0;
};

inline PowerSolution power_solution(double p, int dim, double b, double varrho) {
    if (!(p > 1.0)) throw std::invalid_argument("power_solution: need p > 1");
    if (dim + b == 0.0) throw std::invalid_argument("power_solution: N + b must not vanish");
    const double lambda = (p + b) / (p - 1.0);
    if (lambda == 0.0)
        throw std::invalid_argument("power_solution: lambda = (p+b)/(p-1) must not vanish");
    PowerSolution ps;
    ps.lambda = lambda;
    ps.b = b;
    ps.varrho = varrho;
    if (varrho == 0.0) {
        ps.sigma = 0.0;
    } else {
        const double rhs = varrho / ((dim + b) * pow_signed(lambda, p - 1.0));
        ps.sigma = pow_signed(rhs, 1.0 / (p - 1.0));
    }
    return ps;
}

enum class BarrierKind { DecayTail, HarmonicTail };

/// Piecewise closed-form radial barrier: a power cap
///   z = C - (A/N)^{1/(p-1)} (p-1)/p |x|^{p/(p-1)}        in B_r
/// glued C^1 at |x| = r to a decaying tail,
///   DecayTail      (A r^vt / N)^{1/(p-1)} (p-1)/(vt-p) |x|^{(p-vt)/(p-1)}
///   HarmonicTail   C1 |x|^{(p-N)/(p-1)},  C1 = (A/N)^{1/(p-1)} (p-1)/(N-p) r^{N/(p-1)}.
///
/// With shift = 0 the barrier tends to 0 at infinity and solves
///   -Delta_p z = A                 in B_r,
///   -Delta_p z = -H |x|^{-vt}      outside (DecayTail, H = A (vt-N)/N r^vt),
///   -Delta_p z = 0                 outside (HarmonicTail).
/// The tail constant of the harmonic case carries the (N-p) denominator that
/// makes the one-sided radial derivatives at r agree exactly.
struct BarrierZ {
    BarrierKind kind = BarrierKind::DecayTail;
    double p = 2.0;
    int dim = 3;
    double A = 1.0;
    double r = 1.0;
    double vartheta = 0.0;  // DecayTail only
    double H = 0.0;         // DecayTail only
    double cap_coeff = 0.0;
    double C_match = 0.0;
    double tail_coeff = 0.0;
    double tail_exp = 0.0;
    double shift = 0.0;

    double value(double rho) const {
        rho = std::abs(rho);
        const double base = rho < r ? C_match - cap_coeff * std::pow(rho, p / (p - 1.0))
                                    : tail_coeff * std::pow(rho, tail_exp);
        return base + shift;
    }

    double derivative(double rho) const {
        rho = std::abs(rho);
        if (rho < r) return -cap_coeff * (p / (p - 1.0)) * std::pow(rho, 1.0 / (p - 1.0));
        return tail_coeff * tail_exp * std::pow(rho, tail_exp - 1.0);
    }

    double derivative_interior_at_r() const {
        return -cap_coeff * (p / (p - 1.0)) * std::pow(r, 1.0 / (p - 1.0));
    }
    double derivative_tail_at_r() const { return tail_coeff * tail_exp * std::pow(r, tail_exp - 1.0); }

    /// -Delta_p z at rho (away from the interface).
    double neg_p_laplacian(double rho) const {
        rho = std::abs(rho);
        if (rho < r) return A;
        if (kind == BarrierKind::DecayTail) return -H * std::pow(rho, -vartheta);
        return 0.0;
    }

    /// Samples the barrier onto a mesh (the boundary node stays pinned at 0).
    RadialFunction sample(const std::shared_ptr<const RadialMesh>& mesh) const {
        RadialFunction zf(mesh);
        auto& v = zf.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i) v[i] = value(mesh->nodes[i]);
        zf.pin_boundary();
        return zf;
    }
};

namespace detail {

inline BarrierZ make_barrier(BarrierKind kind, double p, int dim, double vartheta, double A,
                             double r) {
    BarrierZ z;
    z.kind = kind;
    z.p = p;
    z.dim = dim;
    z.A = A;
    z.r = r;
    z.cap_coeff = std::pow(A / dim, 1.0 / (p - 1.0)) * (p - 1.0) / p;
    if (kind == BarrierKind::DecayTail) {
        z.vartheta = vartheta;
        z.H = A * (vartheta - dim) / dim * std::pow(r, vartheta);
        z.tail_exp = (p - vartheta) / (p - 1.0);
        z.tail_coeff =
            std::pow(A * std::pow(r, vartheta) / dim, 1.0 / (p - 1.0)) * (p - 1.0) / (vartheta - p);
    } else {
        z.tail_exp = (p - dim) / (p - 1.0);
        z.tail_coeff =
            std::pow(A / dim, 1.0 / (p - 1.0)) * (p - 1.0) / (dim - p) * std::pow(r, dim / (p - 1.0));
    }
    z.C_match = z.tail_coeff * std::pow(r, z.tail_exp) + z.cap_coeff * std::pow(r, p / (p - 1.0));
    return z;
}

}  // namespace detail

/// Barrier of the comparison argument: interior cap plus |x|^{(p-vt)/(p-1)} tail.
inline BarrierZ barrier_z(double p, int dim, double vartheta, double A, double r) {
    if (!(p > 1.0 && static_cast<double>(dim) > p))
        throw std::invalid_argument("barrier_z: need N > p > 1");
    if (!(vartheta > static_cast<double>(dim)))
        throw std::invalid_argument("barrier_z: need vartheta > N");
    if (!(A > 0.0 && r > 0.0)) throw std::invalid_argument("barrier_z: need A, r > 0");
    return detail::make_barrier(BarrierKind::DecayTail, p, dim, vartheta, A, r);
}

/// Hopf barrier: interior cap plus p-harmonic tail C1 |x|^{(p-N)/(p-1)}.
inline BarrierZ barrier_zh(double p, int dim, double A, double r) {
    if (!(p > 1.0 && static_cast<double>(dim) > p))
        throw std::invalid_argument("barrier_zh: need N > p > 1");
    if (!(A > 0.0 && r > 0.0)) throw std::invalid_argument("barrier_zh: need A, r > 0");
    return detail::make_barrier(BarrierKind::HarmonicTail, p, dim, 0.0, A, r);
}

/// Tail constant of the Hopf bound u >= C1 |x|^{(p-N)/(p-1)}.
inline double hopf_constant(double p, int dim, double A, double r) {
    return barrier_zh(p, dim, A, r).tail_coeff;
}

/// z_R: the barrier shifted so z_R(R) = 0 exactly (z_R > 0 in B_R).
inline BarrierZ shift_to_zero_at(const BarrierZ& z, double R) {
    if (!(R > z.r)) throw std::invalid_argument("shift_to_zero_at: need R > r");
    BarrierZ out = z;
    out.shift = z.shift - z.value(R);
    return out;
}

/// Positivity certificate of the comparison argument: nodewise margin of
/// u - z_R on [0, R]. Used by the parameter sweeps.
struct CompareResult {
    bool ok = false;
    double margin = 0.0;
};

inline CompareResult compare(const RadialFunction& u, const BarrierZ& z, double R) {
    if (!(R <= u.mesh().r_max()))
        throw std::invalid_argument("compare: R must not exceed the mesh radius");
    const BarrierZ zR = shift_to_zero_at(z, R);
    double margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < u.mesh().node_count(); ++i) {
        const double rho = u.mesh().nodes[i];
        if (rho > R) break;
        margin = std::min(margin, u[i] - zR.value(rho));
    }
    return {margin >= -1e-10, margin};
}

/// Hopf-type tail bound: with A a verified lower bound for -Delta_p u on B_r,
/// checks u(rho) >= C1 rho^{(p-N)/(p-1)} on the tail. worst_ratio is the
/// minimum of u rho^{(N-p)/(p-1)} / C1 over tail nodes, excluding the last
/// 10% of nodes where the Dirichlet truncation dominates.
struct HopfResult {
    bool ok = false;
    double worst_ratio = 0.0;
    double C1 = 0.0;
};

inline HopfResult hopf_bound_check(const RadialFunction& u, double p, double A, double r,
                                   double tol_tail = 0.05, double exclude_node_frac = 0.10) {
    const RadialMesh& m = u.mesh();
    HopfResult res;
    res.C1 = hopf_constant(p, m.dim, A, r);
    const double exponent = (m.dim - p) / (p - 1.0);
    const int last = m.node_count() - 1 -
                     static_cast<int>(std::ceil(exclude_node_frac * m.node_count()));
    res.worst_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= last; ++i) {
        const double rho = m.nodes[i];
        if (rho <= r) continue;
        res.worst_ratio = std::min(res.worst_ratio, u[i] * std::pow(rho, exponent) / res.C1);
    }
    if (!std::isfinite(res.worst_ratio)) res.worst_ratio = 0.0;
    res.ok = res.worst_ratio >= 1.0 - tol_tail;
    return res;
}

/// Finite-difference verification of a constructed barrier: -Delta_p z must
/// equal A inside B_r and the prescribed tail forcing outside, and the
/// one-sided radial derivatives must match at the interface.
struct BarrierVerification {
    double max_rel_interior = 0.0;
    double max_rel_tail = 0.0;
    double deriv_mismatch = 0.0;  // relative, at the interface
    bool ok = false;
};

inline BarrierVerification verify_barrier_fd(const BarrierZ& z, int samples_per_side = 20,
                                             double tol_fd = 1e-3, double tol_deriv = 1e-12) {
    BarrierVerification v;
    auto eval = [&](double rho) { return z.value(rho); };
    for (int i = 0; i < samples_per_side; ++i) {
        const double rho = z.r * (0.25 + 0.65 * i / (samples_per_side - 1.0));
        const double delta = std::min(1e-4 * std::max(1.0, rho), 0.02 * (z.r - rho) + 1e-12);
        const double fd = -p_laplacian_fd(eval, z.p, z.dim, rho, delta);
        v.max_rel_interior = std::max(v.max_rel_interior, std::abs(fd - z.A) / std::abs(z.A));
    }
    for (int i = 0; i < samples_per_side; ++i) {
        const double rho = z.r * (1.1 + 3.9 * i / (samples_per_side - 1.0));
        const double delta = std::min(1e-4 * std::max(1.0, rho), 0.02 * (rho - z.r));
        const double fd = -p_laplacian_fd(eval, z.p, z.dim, rho, delta);
        const double expected = z.neg_p_laplacian(rho);
        const double scale = z.kind == BarrierKind::DecayTail ? std::abs(expected) : std::abs(z.A);
        v.max_rel_tail = std::max(v.max_rel_tail, std::abs(fd - expected) / scale);
    }
    const double di = z.derivative_interior_at_r();
    const double dt = z.derivative_tail_at_r();
    v.deriv_mismatch = std::abs(di - dt) / std::max({std::abs(di), std::abs(dt), 1e-300});
    v.ok = v.max_rel_interior <= tol_fd && v.max_rel_tail <= tol_fd && v.deriv_mismatch <= tol_deriv;
    return v;
}

/// Liouville indicator: min over the window of rho^{(N-p)/(p-1)} u(rho).
/// A value near 0 for a nonnegative supersolution flags the alternative
/// u == 0; a positive floor certifies u is bounded away from it.
inline double liouville_indicator(const RadialFunction& u, double p, const Window& window) {
    const RadialMesh& m = u.mesh();
    if (!(window.lo > 0.0 && window.lo < window.hi && window.hi <= m.r_max()))
        throw std::invalid_argument("liouville_indicator: window must lie in (0, R_max]");
    const double exponent = (m.dim - p) / (p - 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.node_count(); ++i) {
        const double rho = m.nodes[i];
        if (rho < window.lo || rho > window.hi) continue;
        worst = std::min(worst, std::pow(rho, exponent) * u[i]);
    }
    if (!std::isfinite(worst)) throw std::invalid_argument("liouville_indicator: empty window");
    return worst;
}

}  // namespace splab
