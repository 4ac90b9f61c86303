#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "splab/barriers.hpp"
#include "splab/model.hpp"
#include "splab/nonlinearity.hpp"
#include "splab/radialfem.hpp"

namespace splab {

enum class StepRule { FixedArmijo, BarzilaiBorwein };

struct SolverParams {
    double tol_residual = 1e-8;
    int max_iters = 20000;
    int path_points = 16;  // K, mountain-pass path resolution
    StepRule step_rule = StepRule::BarzilaiBorwein;
    double t1 = 0.0;       // path endpoint scale; 0 = take it from the geometry probe
    double eps_moll = 1e-6;  // mollification width relative to the iterate's sup-norm scale
    std::uint64_t seed = 0;
    int probe_samples = 24;

    // Certificate windows; nonpositive entries are resolved from the mesh:
    // barrier_r -> min(1, r_core), barrier_R -> R_max/2,
    // decay window -> [R_max/6, 2 R_max/3], tail window -> [r_core, min(4 r_core, R_max/3)].
    double barrier_r = 0.0;
    double barrier_R = 0.0;
    double decay_lo = 0.0, decay_hi = 0.0;
    double tail_lo = 0.0, tail_hi = 0.0;

    void validate() const {
        if (!(tol_residual > 0.0)) throw std::invalid_argument("SolverParams: tol_residual > 0");
        if (path_points < 8) throw std::invalid_argument("SolverParams: path_points >= 8");
        if (t1 < 0.0) throw std::invalid_argument("SolverParams: t1 >= 0");
        if (!(eps_moll > 0.0)) throw std::invalid_argument("SolverParams: eps_moll > 0");
        if (max_iters < 0) throw std::invalid_argument("SolverParams: max_iters >= 0");
    }
};

/// Mountain-pass / minimization geometry measured on the discrete space.
struct GeometryReport {
    bool succeeded = false;
    double embedding_C = 0.0;  // measured constant of int h|u|^s <= C ||u||^s, s in {p,q}
    double rho = 0.0;          // sphere radius of the range-of-mountains estimate
    double alpha_bound = 0.0;  // predicted floor (1/4p) rho^p
    double alpha_hat = 0.0;    // sampled min of I_a on ||u|| = rho (superlinear)
                               // or depth -I_a(t0 phi) (sublinear)
    double t1 = 0.0;           // scale with I_a(t1 phi) < 0 (superlinear)
    double t0 = 0.0;           // scale with I_a(t0 phi) <= -alpha_hat (sublinear)
    double coercivity_radius = 0.0;  // sublinear: sampled norm beyond which I_a > 0
    std::string message;
};

/// Critical point plus measured certificates.
struct SolveReport {
    RadialFunction u;
    double a = 0.0;
    bool converged = false;
    std::string status;
    int iterations = 0;
    double energy = 0.0;
    double dp_norm = 0.0;
    double sup_norm = 0.0;
    double min_value = 0.0;  // min over free nodes
    CriticalityCertificate criticality;
    double sub_margin = 0.0;
    double sup_margin = 0.0;
    double ipuu_residual = 0.0;  // | ||u||^p - int h f_a(u) u dx |
    double eps_moll_used = 0.0;

    // barrier / tail certificates
    double barrier_A = 0.0;
    double barrier_H = 0.0;
    bool barrier_applicable = false;
    bool barrier_ok = false;
    double compare_margin = 0.0;
    bool hopf_ok = false;
    double hopf_worst_ratio = 0.0;
    double hopf_C1 = 0.0;
    double liouville_min = 0.0;
    double decay_slope = std::numeric_limits<double>::quiet_NaN();
    double decay_offset = std::numeric_limits<double>::quiet_NaN();

    GeometryReport geometry;

    explicit SolveReport(RadialFunction uu) : u(std::move(uu)) {}
};

struct SweepRow {
    double a = 0.0;
    double energy = 0.0;
    double dp_norm = 0.0;
    double min_value = 0.0;
    bool barrier_ok = false;
    bool positive = false;
    bool converged = false;
    int iterations = 0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double a_star_estimate = 0.0;
};

struct ConvergenceRow {
    double a = 0.0;
    double sup_distance = 0.0;  // on the ball B_gamma
    double dp_distance = 0.0;
};

/// Least-squares slope/offset of log u vs log rho over mesh nodes in the
/// window; rejects nonpositive values (a failed positivity certificate).
inline std::pair<double, double> decay_fit(const RadialFunction& u, const Window& window) {
    const RadialMesh& m = u.mesh();
    if (!(window.lo > 0.0 && window.lo < window.hi && window.hi < m.r_max()))
        throw std::invalid_argument("decay_fit: window must lie inside (0, R_max)");
    std::vector<double> lx, ly;
    for (int i = 0; i < m.node_count(); ++i) {
        const double rho = m.nodes[i];
        if (rho < window.lo || rho > window.hi) continue;
        if (!(u[i] > 0.0))
            throw std::invalid_argument("decay_fit: nonpositive value in window (log undefined)");
        lx.push_back(std::log(rho));
        ly.push_back(std::log(u[i]));
    }
    if (lx.size() < 2) throw std::invalid_argument("decay_fit: window contains < 2 nodes");
    return detail::least_squares_line(lx, ly);
}

namespace detail {

/// Tridiagonal D^{1,2}-stiffness of the mesh with the Dirichlet node
/// eliminated; used as the metric for descent directions (mesh-independent
/// step scaling). Factored once, O(M) per solve.
class SobolevMetric {
public:
    explicit SobolevMetric(const RadialMesh& m) : n_(m.node_count() - 1) {
        diag_.assign(n_, 0.0);
        off_.assign(n_, 0.0);  // off_[i] couples i and i+1 (last entry unused)
        for (int e = 0; e < m.element_count(); ++e) {
            const double k = m.kin_w[e] / (m.elem_len[e] * m.elem_len[e]);
            if (e < n_) diag_[e] += k;
            if (e + 1 < n_) {
                diag_[e + 1] += k;
                off_[e] -= k;
            }
        }
        lower_.assign(n_, 0.0);
        dfac_.assign(n_, 0.0);
        dfac_[0] = diag_[0];
        for (int i = 1; i < n_; ++i) {
            lower_[i] = off_[i - 1] / dfac_[i - 1];
            dfac_[i] = diag_[i] - lower_[i] * off_[i - 1];
        }
    }

    /// Solves K d = g on the free nodes; the Dirichlet entry of d is zero.
    std::vector<double> solve(std::span<const double> g) const {
        std::vector<double> x(n_ + 1, 0.0);
        std::vector<double> y(n_, 0.0);
        y[0] = g[0];
        for (int i = 1; i < n_; ++i) y[i] = g[i] - lower_[i] * y[i - 1];
        x[n_ - 1] = y[n_ - 1] / dfac_[n_ - 1];
        for (int i = n_ - 2; i >= 0; --i) x[i] = (y[i] - off_[i] * x[i + 1]) / dfac_[i];
        return x;
    }

    /// Two-metric projection variant: nodes flagged active are pinned out of
    /// the metric solve (their direction entry is zero), so the dense inverse
    /// cannot push a constrained node back off its bound.
    std::vector<double> solve_masked(std::span<const double> g,
                                     const std::vector<bool>& active) const {
        std::vector<double> diag(diag_), off(off_), rhs(n_);
        for (int i = 0; i < n_; ++i) rhs[i] = active[i] ? 0.0 : g[i];
        for (int i = 0; i < n_; ++i) {
            if (!active[i]) continue;
            diag[i] = 1.0;
            if (i > 0) off[i - 1] = 0.0;
            if (i + 1 < n_) off[i] = 0.0;
        }
        std::vector<double> x(n_ + 1, 0.0), y(n_, 0.0);
        std::vector<double> d(n_);
        d[0] = diag[0];
        y[0] = rhs[0];
        for (int i = 1; i < n_; ++i) {
            const double m = off[i - 1] / d[i - 1];
            d[i] = diag[i] - m * off[i - 1];
            y[i] = rhs[i] - m * y[i - 1];
        }
        x[n_ - 1] = y[n_ - 1] / d[n_ - 1];
        for (int i = n_ - 2; i >= 0; --i) x[i] = (y[i] - off[i] * x[i + 1]) / d[i];
        return x;
    }

    /// Quadratic form s^T K s on the free nodes.
    double quad_form(std::span<const double> s) const {
        double q = 0.0;
        for (int i = 0; i < n_; ++i) {
            q += diag_[i] * s[i] * s[i];
            if (i + 1 < n_) q += 2.0 * off_[i] * s[i] * s[i + 1];
        }
        return q;
    }

private:
    int n_;
    std::vector<double> diag_, off_, lower_, dfac_;
};

inline double dot_free(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void project_nonnegative(RadialFunction& u) {
    for (double& v : u.mutable_values()) v = std::max(v, 0.0);
    u.pin_boundary();
}

/// Energy profile along the ray t -> I_a(t w) for a nonnegative direction w.
/// For the power family the profile is exactly
///   I_a(t w) = (t^p/p) ||w||^p - (t^q/q) int h w^q + a t int h w
/// and peak/negativity queries are scalar root finds; other families fall
/// back to sampled evaluation.
class RayProfile {
public:
    RayProfile(const RadialFunction& w, const ProblemSpec& spec) : w_(&w), spec_(&spec) {
        P_ = dp_norm_pow(w, spec.p);
        closed_form_ = spec.f.family == NonlinearityFamily::Power;
        const RadialMesh& m = w.mesh();
        Q_ = 0.0;
        R_ = 0.0;
        if (closed_form_) {
            for (int e = 0; e < m.element_count(); ++e)
                for (int g = 0; g < 2; ++g) {
                    const int k = 2 * e + g;
                    const double uv = std::max(0.0, quad_value(w, e, g));
                    const double hv = m.quad_W[k] * spec.h.h(m.quad_x[k]);
                    Q_ += hv * std::pow(uv, spec.q());
                    R_ += hv * uv;
                }
        }
    }

    double norm_pow() const { return P_; }
    bool degenerate() const { return closed_form_ ? Q_ <= 0.0 : P_ <= 0.0; }

    double energy_at(double t) const {
        if (closed_form_)
            return P_ * std::pow(t, spec_->p) / spec_->p - Q_ * std::pow(t, spec_->q()) / spec_->q() +
                   spec_->a * R_ * t;
        RadialFunction ut(w_->mesh_ptr());
        auto& v = ut.mutable_values();
        for (int i = 0; i < w_->mesh().node_count(); ++i) v[i] = t * (*w_)[i];
        ut.pin_boundary();
        return energy(ut, *spec_);
    }

    /// Location of the ray maximum (superlinear geometry: unique peak past the
    /// scale where the q-term takes over).
    double peak(double hint = 0.0) const {
        const double p = spec_->p, q = spec_->q(), a = spec_->a;
        if (closed_form_) {
            const double t_base = std::pow(P_ / Q_, 1.0 / (q - p));
            if (a * R_ == 0.0) return t_base;
            // dI/dt = P t^{p-1} - Q t^{q-1} + aR: nonnegative at t_base and
            // strictly decreasing beyond it, so bracket and bisect.
            double lo = t_base, hi = t_base;
            auto slope = [&](double t) {
                return P_ * std::pow(t, p - 1.0) - Q_ * std::pow(t, q - 1.0) + a * R_;
            };
            for (int i = 0; i < 200 && slope(hi) > 0.0; ++i) hi *= 2.0;
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (slope(mid) > 0.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        // Sampled argmax plus golden-section refinement.
        const double t_ref = hint > 0.0 ? hint : 1.0;
        double best_t = t_ref, best_e = energy_at(t_ref);
        for (int i = -48; i <= 48; ++i) {
            const double t = t_ref * std::pow(10.0, i / 12.0);
            const double e = energy_at(t);
            if (e > best_e) {
                best_e = e;
                best_t = t;
            }
        }
        double lo = best_t / std::pow(10.0, 1.0 / 12.0), hi = best_t * std::pow(10.0, 1.0 / 12.0);
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = energy_at(x1), f2 = energy_at(x2);
        for (int i = 0; i < 80; ++i) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = energy_at(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = energy_at(x1);
            }
        }
        return 0.5 * (lo + hi);
    }

    /// Smallest dyadic multiple of t_from with negative ray energy.
    std::optional<double> first_negative(double t_from) const {
        double t = t_from;
        for (int i = 0; i < 80; ++i) {
            t *= 2.0;
            if (energy_at(t) < 0.0) return t;
        }
        return std::nullopt;
    }

private:
    const RadialFunction* w_;
    const ProblemSpec* spec_;
    bool closed_form_ = false;
    double P_ = 0.0, Q_ = 0.0, R_ = 0.0;
};

/// Deterministic probe directions: the tent, a few wide bumps, then smoothed
/// Gaussian nodal fields; all normalized to dp_norm 1.
inline std::vector<RadialFunction> probe_directions(const std::shared_ptr<const RadialMesh>& mesh,
                                                    double r_core, double p, int samples,
                                                    std::uint64_t seed) {
    std::vector<RadialFunction> dirs;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto push_normalized = [&](RadialFunction f) {
        f.pin_boundary();
        const double n = dp_norm(f, p);
        if (!(n > 0.0) || !std::isfinite(n)) return;
        for (double& v : f.mutable_values()) v /= n;
        dirs.push_back(std::move(f));
    };
    {
        RadialFunction tent(mesh);
        auto& v = tent.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i)
            v[i] = std::max(0.0, 1.0 - mesh->nodes[i] / r_core);
        push_normalized(std::move(tent));
    }
    for (double s : {0.5 * r_core, r_core, 2.0 * r_core}) {
        RadialFunction bump(mesh);
        auto& v = bump.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i)
            v[i] = std::exp(-sqr(mesh->nodes[i] / s));
        push_normalized(std::move(bump));
    }
    while (static_cast<int>(dirs.size()) < samples) {
        RadialFunction f(mesh);
        auto& v = f.mutable_values();
        for (double& x : v) x = gauss(rng);
        for (int pass = 0; pass < 5; ++pass) {
            std::vector<double> s(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                const double left = i > 0 ? v[i - 1] : v[i];
                const double right = i + 1 < v.size() ? v[i + 1] : v[i];
                s[i] = 0.25 * left + 0.5 * v[i] + 0.25 * right;
            }
            v = std::move(s);
        }
        push_normalized(std::move(f));
    }
    return dirs;
}

/// Smallest constant C_eps with F(t) <= eps t^p + C_eps t^q on the sampled
/// range; exact 1/q for the (shifted) power families.
inline double small_energy_constant(const NonlinearitySpec& f, double eps, double p) {
    if (f.family != NonlinearityFamily::Tabulated) return 1.0 / f.q;
    double c = 0.0;
    for (int i = -36; i <= 36; ++i) {
        const double t = std::pow(10.0, i / 6.0);
        c = std::max(c, (f.F(t) - eps * std::pow(t, p)) / std::pow(t, f.q));
    }
    return std::max(c, 1e-12);
}

}  // namespace detail

/// Probes the variational geometry of I_a on the discrete space: the
/// superlinear branch reproduces the range-of-mountains construction (picks
/// eps = 1/(2pC), a sphere radius rho with C C_eps rho^{q-p} <= 1/(4p) from
/// the measured embedding constant C, samples the energy floor there) and
/// locates a scale t1 with I_a(t1 phi) < 0. The sublinear branch finds the
/// negative well near zero and a sampled coercivity radius.
inline GeometryReport geometry_probe(const ProblemSpec& spec,
                                     const std::shared_ptr<const RadialMesh>& mesh, int samples,
                                     std::uint64_t seed = 0) {
    spec.validate();
    GeometryReport rep;
    const double p = spec.p, q = spec.q();
    const double r_core = mesh->core_radius > 0.0 ? mesh->core_radius : mesh->r_max();
    auto dirs = detail::probe_directions(mesh, r_core, p, std::max(samples, 6), seed);
    const RadialFunction& phi = dirs.front();  // the tent, ||phi|| = 1

    double C = 0.0;
    for (const auto& v : dirs) {
        C = std::max(C, std::pow(lqh_norm(v, p, spec.h), p));
        C = std::max(C, std::pow(lqh_norm(v, q, spec.h), q));
    }
    rep.embedding_C = C;

    auto scaled = [&](const RadialFunction& dir, double t) {
        RadialFunction out(dir.mesh_ptr());
        auto& vv = out.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i) vv[i] = t * dir[i];
        out.pin_boundary();
        return out;
    };

    if (spec.regime == Regime::Superlinear) {
        const double eps = 1.0 / (2.0 * p * C);
        const double c_eps = detail::small_energy_constant(spec.f, eps, p);
        rep.rho = std::pow(1.0 / (4.0 * p * C * c_eps), 1.0 / (q - p));
        rep.alpha_bound = std::pow(rep.rho, p) / (4.0 * p);
        rep.alpha_hat = std::numeric_limits<double>::infinity();
        for (const auto& v : dirs)
            rep.alpha_hat = std::min(rep.alpha_hat, energy(scaled(v, rep.rho), spec));
        double t = std::max(2.0 * rep.rho, 1.0);
        bool found = false;
        for (int i = 0; i < 80; ++i) {
            if (energy(scaled(phi, t), spec) < 0.0) {
                found = true;
                break;
            }
            t *= 2.0;
        }
        rep.t1 = t;
        rep.succeeded = found && rep.alpha_hat > 0.0;
        rep.message = rep.succeeded ? "mountain-pass geometry confirmed"
                                    : "geometry failure: no negative-energy scale or flat sphere";
    } else {
        double best_t = 0.0, best_e = 0.0;
        for (int j = 0; j <= 52; ++j) {
            const double t = std::pow(2.0, -j);
            const double e = energy(scaled(phi, t), spec);
            if (e < best_e) {
                best_e = e;
                best_t = t;
            }
        }
        rep.t0 = best_t;
        rep.alpha_hat = -best_e;
        rep.succeeded = best_e < 0.0;
        double radius = 1.0;
        for (int j = 0; j < 48; ++j) {
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& v : dirs) worst = std::min(worst, energy(scaled(v, radius), spec));
            if (worst > 0.0) break;
            radius *= 2.0;
        }
        rep.coercivity_radius = radius;
        rep.message = rep.succeeded ? "minimization geometry confirmed"
                                    : "geometry failure: no negative well near zero";
    }
    return rep;
}

namespace detail {

/// Measured interior forcing A = min over B_r of h (f(u) - a), the barrier
/// level of the positivity certificate; nonpositive A means the certificate
/// does not apply.
inline double measured_barrier_level(const RadialFunction& u, const ProblemSpec& spec, double r) {
    double A = std::numeric_limits<double>::infinity();
    const RadialMesh& m = u.mesh();
    for (int i = 0; i < m.node_count(); ++i) {
        if (m.nodes[i] > r) break;
        A = std::min(A, spec.h.h(m.nodes[i]) * (spec.f.f(std::max(0.0, u[i])) - spec.a));
    }
    return A;
}

struct ResolvedWindows {
    double barrier_r, barrier_R;
    Window decay, tail;
};

inline ResolvedWindows resolve_windows(const SolverParams& prm, const RadialMesh& mesh) {
    ResolvedWindows w{};
    const double R = mesh.r_max();
    const double rc = mesh.core_radius > 0.0 ? mesh.core_radius : R / 6.0;
    w.barrier_r = prm.barrier_r > 0.0 ? prm.barrier_r : std::min(1.0, rc);
    w.barrier_R = prm.barrier_R > 0.0 ? prm.barrier_R : 0.5 * R;
    w.decay = {prm.decay_lo > 0.0 ? prm.decay_lo : R / 6.0,
               prm.decay_hi > 0.0 ? prm.decay_hi : 2.0 * R / 3.0};
    w.tail = {prm.tail_lo > 0.0 ? prm.tail_lo : rc,
              prm.tail_hi > 0.0 ? prm.tail_hi : std::min(4.0 * rc, R / 3.0)};
    return w;
}

/// Fills the measured certificates of a report: nonsmooth criticality,
/// sub/supersolution slacks, the ||u||^p = int h f_a(u) u identity, barrier
/// comparison, Hopf tail ratio, Liouville indicator, and tail decay fit.
inline void certify(SolveReport& rep, const ProblemSpec& spec, const SolverParams& prm) {
    const RadialFunction& u = rep.u;
    const RadialMesh& m = u.mesh();
    rep.energy = energy(u, spec);
    rep.dp_norm = dp_norm(u, spec.p);
    rep.sup_norm = u.sup_norm();
    rep.min_value = u.min_free_value();
    rep.criticality = check_critical(u, spec);
    const auto margins = subsup_check(u, spec);
    rep.sub_margin = margins.first;
    rep.sup_margin = margins.second;

    const ShiftedNonlinearity fa(spec.f, spec.a);
    double pairing = 0.0;
    for (int e = 0; e < m.element_count(); ++e)
        for (int g = 0; g < 2; ++g) {
            const int k = 2 * e + g;
            const double uv = quad_value(u, e, g);
            pairing += m.quad_W[k] * spec.h.h(m.quad_x[k]) * fa.f_a(uv) * uv;
        }
    rep.ipuu_residual = std::abs(dp_norm_pow(u, spec.p) - pairing);

    const auto win = resolve_windows(prm, m);
    rep.barrier_A = measured_barrier_level(u, spec, win.barrier_r);
    const double vt = spec.h.vartheta;
    rep.barrier_H = rep.barrier_A * (vt - m.dim) / m.dim * std::pow(win.barrier_r, vt);
    rep.barrier_applicable = rep.barrier_A > 0.0 && spec.a * spec.h.B < rep.barrier_H;
    if (rep.barrier_applicable) {
        const BarrierZ z = barrier_z(spec.p, m.dim, vt, rep.barrier_A, win.barrier_r);
        const auto cmp = compare(u, z, win.barrier_R);
        rep.compare_margin = cmp.margin;
        rep.barrier_ok = cmp.ok;
        const auto hopf = hopf_bound_check(u, spec.p, rep.barrier_A, win.barrier_r);
        rep.hopf_ok = hopf.ok;
        rep.hopf_worst_ratio = hopf.worst_ratio;
        rep.hopf_C1 = hopf.C1;
    } else {
        rep.barrier_ok = false;
        rep.compare_margin = -std::numeric_limits<double>::infinity();
        rep.hopf_ok = false;
    }
    try {
        rep.liouville_min = liouville_indicator(u, spec.p, win.tail);
    } catch (const std::invalid_argument&) {
        rep.liouville_min = std::numeric_limits<double>::quiet_NaN();
    }
    try {
        const auto fit = decay_fit(u, win.decay);
        rep.decay_slope = fit.first;
        rep.decay_offset = fit.second;
    } catch (const std::invalid_argument&) {
        rep.decay_slope = std::numeric_limits<double>::quiet_NaN();
        rep.decay_offset = std::numeric_limits<double>::quiet_NaN();
    }
}

/// One Armijo-backtracked, metric-preconditioned, projected descent step.
/// `objective` evaluates the merit of a trial iterate (plain energy for
/// minimization, ray-peak energy for the path maximizer). Acceptance uses the
/// projected-gradient sufficient-decrease condition measured in the descent
/// metric,
///   m(P(u - a d)) <= m(u) - (c1/a) <s, s>_K,   s = P(u - a d) - u,
/// which stays consistent with the preconditioned direction and remains
/// meaningful when the nonnegativity constraint blocks part of it. Returns
/// false when no decrease was found.
/// Strictly active nodes of the nonnegativity constraint: sitting on the
/// bound with the gradient pushing further out.
inline std::vector<bool> active_set(const RadialFunction& u, const std::vector<double>& grad) {
    const int n = u.mesh().node_count() - 1;
    std::vector<bool> active(n, false);
    for (int i = 0; i < n; ++i) active[i] = u[i] == 0.0 && grad[i] > 0.0;
    return active;
}

template <typename Objective>
bool descent_step(RadialFunction& u, double& merit, const std::vector<double>& grad, double& alpha,
                  const SobolevMetric& metric, Objective&& objective, double alpha_floor = 1e-14) {
    const std::vector<double> dir = metric.solve_masked(grad, active_set(u, grad));
    const double gd = dot_free(grad, dir);
    if (!(gd > 0.0) || !std::isfinite(gd)) return false;
    constexpr double c1 = 1e-4;
    double a = alpha;
    std::vector<double> step(dir.size(), 0.0);
    for (int bt = 0; bt < 80; ++bt) {
        RadialFunction trial = u;
        auto& tv = trial.mutable_values();
        bool moved = false;
        for (std::size_t i = 0; i + 1 < tv.size(); ++i) {
            const double next = std::max(0.0, tv[i] - a * dir[i]);
            step[i] = next - tv[i];
            if (step[i] != 0.0) moved = true;
            tv[i] = next;
        }
        trial.pin_boundary();
        if (!moved) return false;  // direction fully blocked
        const double m_trial = objective(trial);
        if (std::isfinite(m_trial) && m_trial <= merit - (c1 / a) * metric.quad_form(step)) {
            u = std::move(trial);
            merit = m_trial;
            alpha = a;
            return true;
        }
        a *= 0.5;
        if (a < alpha_floor) break;
    }
    return false;
}

/// Barzilai-Borwein step length in the Sobolev metric, safeguarded.
inline double bb_step(const SobolevMetric& metric, std::span<const double> s,
                      std::span<const double> y, double fallback) {
    const double sKs = metric.quad_form(s);
    const double sy = dot_free(s, y);
    if (!(sy > 0.0) || !std::isfinite(sKs) || !(sKs > 0.0)) return fallback;
    const double a = sKs / sy;
    return std::clamp(a, 1e-8, 1e8);
}

/// Fallback when the merit has reached its rounding floor and Armijo cannot
/// certify decrease any more: take plain projected metric steps and accept by
/// strict improvement of the criticality certificate itself. `post` adjusts a
/// candidate before certification (the mountain-pass ray re-anchor).
template <typename Post>
bool certificate_step(RadialFunction& u, double& merit, const std::vector<double>& grad,
                      double alpha, const SobolevMetric& metric, const ProblemSpec& spec,
                      double current_violation, Post&& post,
                      const std::function<double(const RadialFunction&)>& objective) {
    const std::vector<double> dir = metric.solve_masked(grad, active_set(u, grad));
    double a = alpha;
    for (int t = 0; t < 12; ++t) {
        RadialFunction cand = u;
        auto& cv = cand.mutable_values();
        for (std::size_t i = 0; i + 1 < cv.size(); ++i) cv[i] = std::max(0.0, cv[i] - a * dir[i]);
        cand.pin_boundary();
        if (!post(cand)) {
            a *= 0.5;
            continue;
        }
        if (check_critical(cand, spec).max_violation < 0.999 * current_violation) {
            u = std::move(cand);
            merit = objective(u);
            return true;
        }
        a *= 0.5;
    }
    return false;
}

}  // namespace detail

/// Mountain-pass solver for the superlinear regime. Maintains a discrete
/// path from 0 to a negative-energy endpoint, repeatedly applies a projected,
/// metric-preconditioned descent step to the path maximizer and re-anchors
/// the path along the ray through the updated maximizer (whose peak is the
/// new maximizer). The path maximum is non-increasing by Armijo acceptance;
/// convergence is declared by the exact nonsmooth criticality certificate.
inline SolveReport mountain_pass_solve(const ProblemSpec& spec,
                                       const std::shared_ptr<const RadialMesh>& mesh,
                                       const SolverParams& params,
                                       const RadialFunction* warm_start = nullptr) {
    spec.validate();
    params.validate();
    if (spec.regime != Regime::Superlinear)
        throw std::invalid_argument("mountain_pass_solve: regime must be Superlinear");

    const detail::SobolevMetric metric(*mesh);
    const int K = params.path_points;

    SolveReport rep{RadialFunction(mesh)};
    rep.a = spec.a;

    // Direction of the initial path: warm start or the probe's tent.
    RadialFunction w_dir(mesh);
    if (warm_start && warm_start->sup_norm() > 0.0) {
        w_dir = *warm_start;
        rep.geometry.succeeded = true;
        rep.geometry.message = "warm start";
    } else {
        rep.geometry = geometry_probe(spec, mesh, params.probe_samples, params.seed);
        if (!rep.geometry.succeeded) {
            rep.status = "geometry failure: " + rep.geometry.message;
            return rep;
        }
        const double r_core = mesh->core_radius > 0.0 ? mesh->core_radius : mesh->r_max();
        w_dir = detail::probe_directions(mesh, r_core, spec.p, 1, params.seed).front();
    }
    detail::project_nonnegative(w_dir);

    detail::RayProfile ray0(w_dir, spec);
    if (ray0.degenerate()) {
        rep.status = "geometry failure: degenerate path direction";
        return rep;
    }

    // Initial discrete path w_k = (k/K) t_end * w_dir, k = 0..K. The argmax
    // (ties -> lowest index) must be interior: an endpoint maximizer is a path
    // collapse and triggers a re-probe of the endpoint scale.
    double t_end = params.t1 > 0.0 ? params.t1 : (rep.geometry.t1 > 0.0 ? rep.geometry.t1 : 1.0);
    int k_star = 0;
    bool path_ok = false;
    for (int attempt = 0; attempt < 80; ++attempt) {
        k_star = 0;
        double best = 0.0;  // I_a(w_0) = I_a(0) = 0
        for (int k = 1; k <= K; ++k) {
            const double e = ray0.energy_at(t_end * k / K);
            if (e > best) {
                best = e;
                k_star = k;
            }
        }
        if (k_star == K) {
            t_end *= 2.0;  // endpoint not past the ridge yet
        } else if (k_star == 0) {
            t_end *= 0.5;  // whole path beyond the ridge
        } else {
            path_ok = true;
            break;
        }
    }
    if (!path_ok) {
        rep.status = "geometry failure: path collapse persists under endpoint re-probing";
        return rep;
    }
    // Snap the maximizer node to the refined ray peak.
    const double t_peak = ray0.peak(t_end * k_star / K);

    RadialFunction u(mesh);
    {
        auto& uv = u.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i) uv[i] = t_peak * w_dir[i];
        u.pin_boundary();
    }
    double merit = energy(u, spec);
    const double merit_bound = merit;  // path maximum only decreases from here

    double alpha = 1.0;
    std::vector<double> grad, prev_vals, prev_grad;
    bool converged = false;
    int iter = 0;
    int stalls = 0;
    std::string status;

    // Merit of a trial maximizer: peak of the ray through it (the re-anchored
    // path maximum). Endpoints stay pinned at 0 and t_end * direction.
    auto path_max_objective = [&](const RadialFunction& trial) {
        detail::RayProfile ray(trial, spec);
        if (ray.degenerate()) return std::numeric_limits<double>::infinity();
        const double tp = ray.peak(1.0);
        return ray.energy_at(tp);
    };
    // Snaps a candidate maximizer onto its ray peak; false on path collapse.
    auto reanchor = [&](RadialFunction& cand) {
        detail::RayProfile ray(cand, spec);
        if (ray.degenerate()) return false;
        const double tp = ray.peak(1.0);
        if (!(ray.energy_at(tp) > 0.0)) return false;
        auto& cv = cand.mutable_values();
        for (std::size_t i = 0; i + 1 < cv.size(); ++i) cv[i] *= tp;
        cand.pin_boundary();
        if (auto neg = ray.first_negative(tp)) t_end = *neg;
        return true;
    };

    for (;; ++iter) {
        rep.criticality = check_critical(u, spec);
        if (rep.criticality.max_violation <= params.tol_residual) {
            converged = true;
            break;
        }
        if (iter >= params.max_iters) {
            status = "max_iters reached";
            break;
        }
        const double eps_eff = params.eps_moll * std::max(1.0, u.sup_norm());
        rep.eps_moll_used = eps_eff;
        grad = grad_energy(u, spec, eps_eff);

        if (params.step_rule == StepRule::BarzilaiBorwein && !prev_vals.empty()) {
            std::vector<double> s(grad.size()), y(grad.size());
            for (std::size_t i = 0; i < grad.size(); ++i) {
                s[i] = u.values()[i] - prev_vals[i];
                y[i] = grad[i] - prev_grad[i];
            }
            alpha = detail::bb_step(metric, s, y, alpha);
        } else if (params.step_rule == StepRule::FixedArmijo) {
            alpha = 1.0;
        }
        prev_vals.assign(u.values().begin(), u.values().end());
        prev_grad = grad;

        if (detail::descent_step(u, merit, grad, alpha, metric, path_max_objective)) {
            stalls = 0;
            if (!reanchor(u)) {
                status = "path collapse: ray maximum no longer positive";
                break;
            }
            continue;
        }
        // Armijo found no certified decrease: the path maximum sits at its
        // rounding floor. Continue with certificate-monitored plain steps.
        if (detail::certificate_step(u, merit, grad, alpha, metric, spec,
                                     rep.criticality.max_violation, reanchor,
                                     path_max_objective)) {
            stalls = 0;
            continue;
        }
        if (++stalls >= 3) {
            status = "stalled: no descent of the path maximum";
            break;
        }
        alpha = 1.0;
    }

    rep.u = std::move(u);
    rep.iterations = iter;
    rep.converged = converged;
    detail::certify(rep, spec, params);
    if (converged) {
        if (!(rep.energy > 0.0) || rep.energy > merit_bound + 1e-9 * (1.0 + std::abs(merit_bound))) {
            rep.converged = false;
            rep.status = "critical point outside the mountain-pass energy bracket";
        } else if (rep.min_value < -10.0 * std::max(rep.eps_moll_used, params.eps_moll)) {
            rep.converged = false;
            rep.status = "negative part exceeds mollification scale";
        } else {
            rep.status = "converged";
        }
    } else {
        rep.status = status.empty() ? "not converged" : status;
    }
    return rep;
}

/// Global minimization for the sublinear regime: projected descent from the
/// probe's negative-energy point.
inline SolveReport minimize(const ProblemSpec& spec,
                            const std::shared_ptr<const RadialMesh>& mesh,
                            const SolverParams& params,
                            const RadialFunction* warm_start = nullptr) {
    spec.validate();
    params.validate();
    if (spec.regime != Regime::Sublinear)
        throw std::invalid_argument("minimize: regime must be Sublinear");

    const detail::SobolevMetric metric(*mesh);
    SolveReport rep{RadialFunction(mesh)};
    rep.a = spec.a;

    RadialFunction u(mesh);
    if (warm_start && warm_start->sup_norm() > 0.0) {
        u = *warm_start;
        rep.geometry.succeeded = true;
        rep.geometry.message = "warm start";
    } else {
        rep.geometry = geometry_probe(spec, mesh, params.probe_samples, params.seed);
        if (!rep.geometry.succeeded) {
            rep.status = "geometry failure: " + rep.geometry.message;
            return rep;
        }
        const double r_core = mesh->core_radius > 0.0 ? mesh->core_radius : mesh->r_max();
        RadialFunction phi =
            detail::probe_directions(mesh, r_core, spec.p, 1, params.seed).front();
        std::mt19937_64 rng(params.seed * 0x2545f4914f6cdd1dull + 1);
        std::uniform_real_distribution<double> jitter(-0.1, 0.1);
        auto& uv = u.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i) {
            const double j = params.seed == 0 ? 0.0 : jitter(rng);
            uv[i] = rep.geometry.t0 * phi[i] * (1.0 + j);
        }
        u.pin_boundary();
        detail::project_nonnegative(u);
    }

    double merit = energy(u, spec);
    double alpha = 1.0;
    std::vector<double> grad, prev_vals, prev_grad;
    bool converged = false;
    int iter = 0;
    int stalls = 0;
    std::string status;
    auto objective = [&](const RadialFunction& trial) { return energy(trial, spec); };

    for (;; ++iter) {
        rep.criticality = check_critical(u, spec);
        if (rep.criticality.max_violation <= params.tol_residual) {
            converged = true;
            break;
        }
        if (iter >= params.max_iters) {
            status = "max_iters reached";
            break;
        }
        const double eps_eff = params.eps_moll * std::max(1.0, u.sup_norm());
        rep.eps_moll_used = eps_eff;
        grad = grad_energy(u, spec, eps_eff);
        if (params.step_rule == StepRule::BarzilaiBorwein && !prev_vals.empty()) {
            std::vector<double> s(grad.size()), y(grad.size());
            for (std::size_t i = 0; i < grad.size(); ++i) {
                s[i] = u.values()[i] - prev_vals[i];
                y[i] = grad[i] - prev_grad[i];
            }
            alpha = detail::bb_step(metric, s, y, alpha);
        } else if (params.step_rule == StepRule::FixedArmijo) {
            alpha = 1.0;
        }
        prev_vals.assign(u.values().begin(), u.values().end());
        prev_grad = grad;
        if (detail::descent_step(u, merit, grad, alpha, metric, objective)) {
            stalls = 0;
            continue;
        }
        if (detail::certificate_step(u, merit, grad, alpha, metric, spec,
                                     rep.criticality.max_violation,
                                     [](RadialFunction&) { return true; }, objective)) {
            stalls = 0;
            continue;
        }
        if (++stalls >= 3) {
            status = "stalled: no descent direction accepted";
            break;
        }
        alpha = 1.0;
    }

    rep.u = std::move(u);
    rep.iterations = iter;
    rep.converged = converged;
    detail::certify(rep, spec, params);
    if (converged) {
        if (!(rep.energy < 0.0)) {
            rep.converged = false;
            rep.status = "minimizer energy not negative";
        } else if (rep.min_value < -10.0 * std::max(rep.eps_moll_used, params.eps_moll)) {
            rep.converged = false;
            rep.status = "negative part exceeds mollification scale";
        } else {
            rep.status = "converged";
        }
    } else {
        rep.status = status.empty() ? "not converged" : status;
    }
    return rep;
}

inline SolveReport solve(const ProblemSpec& spec, const std::shared_ptr<const RadialMesh>& mesh,
                         const SolverParams& params, const RadialFunction* warm_start = nullptr) {
    return spec.regime == Regime::Superlinear ? mountain_pass_solve(spec, mesh, params, warm_start)
                                              : minimize(spec, mesh, params, warm_start);
}

/// Warm-started sweep over the shift parameter. Each row records the solve
/// diagnostics and the barrier positivity certificate; the threshold estimate
/// is the last grid value passing before the first certificate failure.
inline SweepReport sweep_a(const ProblemSpec& spec, const std::shared_ptr<const RadialMesh>& mesh,
                           const SolverParams& params, const std::vector<double>& a_grid) {
    if (a_grid.empty() || a_grid.front() != 0.0)
        throw std::invalid_argument("sweep_a: a_grid must start at 0");
    for (std::size_t i = 1; i < a_grid.size(); ++i)
        if (!(a_grid[i] > a_grid[i - 1]))
            throw std::invalid_argument("sweep_a: a_grid must be strictly increasing");

    SweepReport sweep;
    std::optional<RadialFunction> prev;
    for (double a : a_grid) {
        ProblemSpec sa = spec;
        sa.a = a;
        SweepRow row;
        row.a = a;
        try {
            SolveReport rep = solve(sa, mesh, params, prev ? &*prev : nullptr);
            row.energy = rep.energy;
            row.dp_norm = rep.dp_norm;
            row.min_value = rep.min_value;
            row.converged = rep.converged;
            row.iterations = rep.iterations;
            row.barrier_ok = rep.barrier_ok;
            row.positive = rep.converged && rep.barrier_ok;
            if (rep.converged) prev = rep.u;
        } catch (const std::exception&) {
            row.converged = false;
            row.positive = false;
        }
        sweep.rows.push_back(row);
    }
    double a_star = 0.0;
    for (const auto& row : sweep.rows) {
        if (!row.positive) break;
        a_star = row.a;
    }
    sweep.a_star_estimate = a_star;
    return sweep;
}

/// Numeric analogue of the a -> 0 convergence: independent solves along the
/// sequence, compared to the a = 0 solution on the ball B_gamma.
inline std::vector<ConvergenceRow> convergence_study(const ProblemSpec& spec,
                                                     const std::shared_ptr<const RadialMesh>& mesh,
                                                     const SolverParams& params,
                                                     const std::vector<double>& a_seq,
                                                     double gamma) {
    if (a_seq.empty() || a_seq.back() != 0.0)
        throw std::invalid_argument("convergence_study: a_seq must end at 0");
    for (std::size_t i = 1; i < a_seq.size(); ++i)
        if (!(a_seq[i] < a_seq[i - 1]))
            throw std::invalid_argument("convergence_study: a_seq must be strictly decreasing");

    std::vector<SolveReport> reports;
    reports.reserve(a_seq.size());
    for (double a : a_seq) {
        ProblemSpec sa = spec;
        sa.a = a;
        reports.push_back(solve(sa, mesh, params));
    }
    const RadialFunction& u0 = reports.back().u;
    std::vector<ConvergenceRow> rows;
    for (std::size_t j = 0; j < a_seq.size(); ++j) {
        ConvergenceRow row;
        row.a = a_seq[j];
        const RadialFunction& ua = reports[j].u;
        double sup = 0.0;
        RadialFunction diff(mesh);
        auto& dv = diff.mutable_values();
        for (int i = 0; i < mesh->node_count(); ++i) {
            dv[i] = ua[i] - u0[i];
            if (mesh->nodes[i] <= gamma) sup = std::max(sup, std::abs(dv[i]));
        }
        diff.pin_boundary();
        row.sup_distance = sup;
        row.dp_distance = dp_norm(diff, spec.p);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace splab
