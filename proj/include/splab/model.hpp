#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "splab/numeric.hpp"

namespace splab {

enum class Regime { Superlinear, Sublinear };
enum class NonlinearityFamily { Power, PowerShifted, Tabulated };
enum class WeightFamily { RationalDecay, Tabulated };

/// Piecewise-linear table on strictly increasing knots, extended beyond the
/// last knot by the last slope. Carries exact prefix integrals of the
/// interpolant so primitives of tabulated functions are evaluated in closed
/// form per segment.
struct PiecewiseLinear {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> prefix;  // integral of interpolant from x.front() to x[i]

    PiecewiseLinear() = default;
    PiecewiseLinear(std::vector<double> xs, std::vector<double> ys)
        : x(std::move(xs)), y(std::move(ys)) {
        if (x.size() != y.size() || x.size() < 2)
            throw std::invalid_argument("PiecewiseLinear: need >= 2 knots");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw std::invalid_argument("PiecewiseLinear: knots must be strictly increasing");
        prefix.resize(x.size(), 0.0);
        for (std::size_t i = 1; i < x.size(); ++i)
            prefix[i] = prefix[i - 1] + 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }

    bool empty() const { return x.empty(); }
    double last_slope() const {
        const std::size_t n = x.size();
        return (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
    }

    /// Interpolated value; constant y.front() left of the table, last-slope
    /// extension right of it.
    double value(double t) const {
        if (t <= x.front()) return y.front();
        if (t >= x.back()) return y.back() + last_slope() * (t - x.back());
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
        const double w = (t - x[i]) / (x[i + 1] - x[i]);
        return y[i] + w * (y[i + 1] - y[i]);
    }

    /// Exact integral of the interpolant from x.front() to t (t >= x.front()).
    double integral(double t) const {
        if (t <= x.front()) return 0.0;
        if (t >= x.back()) {
            const double dt = t - x.back();
            return prefix.back() + y.back() * dt + 0.5 * last_slope() * dt * dt;
        }
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
        const double dt = t - x[i];
        const double slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        return prefix[i] + y[i] * dt + 0.5 * slope * dt * dt;
    }
};

/// Growth data of the nonlinearity f : [0,inf) -> [0,inf), f(0)=0.
///
/// Families:
///   Power         f(t) = t^{q-1}
///   PowerShifted  f(t) = ((t-t0)^+)^{q-1}
///   Tabulated     piecewise-linear samples of f, extended by the last slope
///                 (clamped below at 0 so f stays nonnegative).
struct NonlinearitySpec {
    NonlinearityFamily family = NonlinearityFamily::Power;
    double q = 4.0;         // growth exponent
    double theta_ar = 4.0;  // AR exponent, superlinear regime only
    double t0 = 0.0;        // shift, PowerShifted only
    PiecewiseLinear table;  // Tabulated only

    /// f(t) for t >= 0; negative arguments are rejected (f lives on [0,inf)).
    double f(double t) const {
        if (t < 0.0) throw std::invalid_argument("NonlinearitySpec::f: t must be >= 0");
        switch (family) {
            case NonlinearityFamily::Power:
                return t == 0.0 ? 0.0 : std::pow(t, q - 1.0);
            case NonlinearityFamily::PowerShifted: {
                const double s = t - t0;
                return s <= 0.0 ? 0.0 : std::pow(s, q - 1.0);
            }
            case NonlinearityFamily::Tabulated:
                return std::max(0.0, table.value(t));
        }
        return 0.0;
    }

    /// F(t) = int_0^t f, exact per family.
    double F(double t) const {
        if (t < 0.0) throw std::invalid_argument("NonlinearitySpec::F: t must be >= 0");
        switch (family) {
            case NonlinearityFamily::Power:
                return t == 0.0 ? 0.0 : std::pow(t, q) / q;
            case NonlinearityFamily::PowerShifted: {
                const double s = t - t0;
                return s <= 0.0 ? 0.0 : std::pow(s, q) / q;
            }
            case NonlinearityFamily::Tabulated:
                return tabulated_primitive(t);
        }
        return 0.0;
    }

    void validate(double p, double p_star, Regime regime) const {
        if (!(q > 1.0 && q < p_star))
            throw std::invalid_argument("NonlinearitySpec: need 1 < q < p* = pN/(N-p)");
        if (regime == Regime::Superlinear) {
            if (!(q > p)) throw std::invalid_argument("Superlinear regime requires q > p");
            if (!(theta_ar > p))
                throw std::invalid_argument("Superlinear regime requires theta_ar > p");
        } else {
            if (!(q < p)) throw std::invalid_argument("Sublinear regime requires q < p");
        }
        if (family == NonlinearityFamily::PowerShifted && t0 < 0.0)
            throw std::invalid_argument("PowerShifted requires t0 >= 0");
        if (family == NonlinearityFamily::Tabulated) {
            if (table.empty()) throw std::invalid_argument("Tabulated nonlinearity needs a table");
            if (table.x.front() != 0.0 || table.y.front() != 0.0)
                throw std::invalid_argument("Tabulated nonlinearity must start at (0, 0)");
            for (double v : table.y)
                if (v < 0.0) throw std::invalid_argument("Tabulated nonlinearity must be >= 0");
        }
    }

private:
    // Integral of the clamped last-slope extension: if the extension slope is
    // negative, f is cut off at its zero crossing and contributes nothing past it.
    double tabulated_primitive(double t) const {
        if (t <= table.x.back()) return table.integral(t);
        const double slope = table.last_slope();
        const double te = table.x.back();
        const double ye = table.y.back();
        if (slope >= 0.0) return table.integral(t);
        const double t_zero = te + ye / (-slope);
        if (t <= t_zero) return table.integral(t);
        return table.integral(t_zero);
    }
};

/// Radial weight h > 0. RationalDecay is h(rho) = B / (1 + rho^vartheta);
/// Tabulated weights are piecewise linear with a power-law tail fitted to the
/// last two knots. B and vartheta always carry the claimed bound of the decay
/// hypothesis h(x) < B |x|^{-vartheta}.
struct WeightSpec {
    WeightFamily family = WeightFamily::RationalDecay;
    double B = 1.0;
    double vartheta = 4.0;
    PiecewiseLinear table;  // Tabulated only

    double h(double rho) const {
        if (rho < 0.0) throw std::invalid_argument("WeightSpec::h: rho must be >= 0");
        if (family == WeightFamily::RationalDecay) return B / (1.0 + std::pow(rho, vartheta));
        if (rho <= table.x.front()) return table.y.front();
        if (rho >= table.x.back()) {
            const double s = tail_exponent();
            return table.y.back() * std::pow(rho / table.x.back(), -s);
        }
        return table.value(rho);
    }

    /// Decay exponent of the far tail: exact for RationalDecay, log-log slope
    /// of the last two knots for tables.
    double tail_exponent() const {
        if (family == WeightFamily::RationalDecay) return vartheta;
        const std::size_t n = table.x.size();
        const double x0 = table.x[n - 2], x1 = table.x[n - 1];
        const double y0 = table.y[n - 2], y1 = table.y[n - 1];
        if (!(x0 > 0.0) || !(y0 > 0.0) || !(y1 > 0.0)) return 0.0;
        return -std::log(y1 / y0) / std::log(x1 / x0);
    }

    void validate(int dim) const {
        if (!(B > 0.0)) throw std::invalid_argument("WeightSpec: B must be > 0");
        if (!(vartheta > dim))
            throw std::invalid_argument("WeightSpec: vartheta must exceed the dimension N");
        if (family == WeightFamily::Tabulated) {
            if (table.empty()) throw std::invalid_argument("Tabulated weight needs a table");
            for (double v : table.y)
                if (!(v > 0.0)) throw std::invalid_argument("Tabulated weight must be > 0");
            if (!(table.x.front() >= 0.0))
                throw std::invalid_argument("Tabulated weight knots must be >= 0");
        }
    }
};

/// Critical Sobolev exponent p* = pN/(N-p); requires 1 < p < N.
inline double critical_exponent(double p, int dim) {
    if (!(p > 1.0)) throw std::invalid_argument("critical_exponent: need p > 1");
    if (!(p < static_cast<double>(dim)))
        throw std::invalid_argument("critical_exponent: need p < N (degenerate otherwise)");
    return p * dim / (dim - p);
}

/// Full problem instance of -Delta_p u = h(x)(f(u) - a).
struct ProblemSpec {
    double p = 2.0;
    int N = 3;
    double a = 0.0;
    NonlinearitySpec f;
    WeightSpec h;
    Regime regime = Regime::Superlinear;

    double p_star() const { return critical_exponent(p, N); }
    double q() const { return f.q; }

    void validate() const {
        if (!(p > 1.0 && p < static_cast<double>(N)))
            throw std::invalid_argument("ProblemSpec: need 1 < p < N");
        if (!(a >= 0.0)) throw std::invalid_argument("ProblemSpec: need a >= 0");
        f.validate(p, p_star(), regime);
        h.validate(N);
    }
};

/// Sample points for the numeric hypothesis checks: radii probe the weight,
/// t-values probe the nonlinearity near 0 and at large argument.
struct SampleGrid {
    std::vector<double> radii;
    std::vector<double> t_values;
};

inline SampleGrid default_sample_grid() {
    SampleGrid g;
    for (int i = -24; i <= 24; ++i) g.radii.push_back(std::pow(10.0, i / 8.0));
    for (int i = -48; i <= 36; ++i) g.t_values.push_back(std::pow(10.0, i / 6.0));
    return g;
}

struct TrendDiagnostic {
    double ratio_at_smallest = 0.0;  // F(t)/t^p at the smallest sampled t
    bool monotone = false;           // moves monotonically toward its limit as t -> 0
};

struct GrowthDiagnostic {
    double fitted_constant = 0.0;  // median of f(t)/t^{q-1} over the top decade
    double max_ratio = 0.0;
    double bottom_ratio = 0.0;  // ratio at the bottom of the top decade
    double top_ratio = 0.0;     // ratio at the largest sampled t
};

/// Numeric surrogates for the standing hypotheses. Pass flags are
/// deterministic functions of the sampled diagnostics and the thresholds
/// documented with each check; they catch misconfigured instances, they do
/// not prove limits.
struct ValidationReport {
    double p_star = 0.0;
    double h_norm_1 = 0.0;
    double h_norm_inf = 0.0;
    double p2_margin = 0.0;
    TrendDiagnostic f0_trend;
    GrowthDiagnostic finf_trend;
    double ar_defect_grid = 0.0;     // superlinear only
    double ar_defect_doubled = 0.0;  // same check on a doubled grid
    bool pass_p1 = false;
    bool pass_p2 = false;
    bool pass_f0 = false;
    bool pass_fsc = false;
    bool pass_finf = false;

    bool pass() const { return pass_p1 && pass_p2 && pass_f0 && pass_fsc && pass_finf; }
};

namespace detail {

/// ||h||_{L^1(R^N)} via radial quadrature with a power-law tail estimate.
/// Returns +inf when the fitted tail decays no faster than rho^{-N}.
inline double weight_l1_norm(const WeightSpec& w, int dim, double r_max_hint) {
    const double area = sphere_area(dim);
    const double r0 = 1e-6;
    const double r_cut = std::max({1e3, 2.0 * r_max_hint, r0 * 10.0});
    const auto integrand = [&](double rho) { return w.h(rho) * std::pow(rho, dim - 1); };
    double inner = w.h(0.0) * std::pow(r0, dim) / dim;  // h ~ h(0) near the origin
    inner += integrate_log_graded(integrand, r0, r_cut, 8, 16);
    const double s = w.tail_exponent();
    if (!(s > static_cast<double>(dim))) return std::numeric_limits<double>::infinity();
    const double tail = w.h(r_cut) * std::pow(r_cut, dim) / (s - dim);
    return area * (inner + tail);
}

}  // namespace detail

/// Samples the hypotheses on f and h over the given grid and reports margins
/// and pass flags. Thresholds: the small-t ratio check uses 1e-2 (superlinear)
/// and 1e2 (sublinear); the growth check accepts ratios within 10x of the
/// fitted constant; the AR defect must not grow by more than 2x under grid
/// doubling.
inline ValidationReport validate_spec(const ProblemSpec& spec, const SampleGrid& grid) {
    if (grid.radii.empty() || grid.t_values.empty())
        throw std::invalid_argument("validate_spec: sample grid must be nonempty");
    ValidationReport rep;
    rep.p_star = spec.p_star();

    // (P1): h integrable and bounded.
    const double r_hint = *std::max_element(grid.radii.begin(), grid.radii.end());
    rep.h_norm_1 = detail::weight_l1_norm(spec.h, spec.N, r_hint);
    rep.pass_p1 = std::isfinite(rep.h_norm_1);
    rep.h_norm_inf = spec.h.h(0.0);
    for (double rho : grid.radii) rep.h_norm_inf = std::max(rep.h_norm_inf, spec.h.h(rho));

    // (P2): h(rho) rho^vartheta < B at every sampled radius.
    rep.p2_margin = std::numeric_limits<double>::infinity();
    for (double rho : grid.radii) {
        if (!(rho > 0.0)) continue;
        rep.p2_margin =
            std::min(rep.p2_margin, spec.h.B - spec.h.h(rho) * std::pow(rho, spec.h.vartheta));
    }
    rep.pass_p2 = rep.p2_margin > 0.0;

    std::vector<double> ts = grid.t_values;
    std::sort(ts.begin(), ts.end());

    // (f0) / (f0-tilde): F(t)/t^p trend as t -> 0+.
    {
        std::vector<double> small;
        for (double t : ts)
            if (t > 0.0 && t <= 1.0) small.push_back(t);
        if (small.size() < 3)
            small.assign(ts.begin(), ts.begin() + std::min<std::size_t>(ts.size(), 4));
        std::vector<double> ratio;
        ratio.reserve(small.size());
        for (double t : small) ratio.push_back(spec.f.F(t) / std::pow(t, spec.p));
        rep.f0_trend.ratio_at_smallest = ratio.front();
        bool down_toward_zero = true, up_toward_zero = true;
        for (std::size_t i = 0; i + 1 < ratio.size(); ++i) {
            if (ratio[i] > ratio[i + 1] * 1.000001) down_toward_zero = false;
            if (ratio[i] < ratio[i + 1] * 0.999999) up_toward_zero = false;
        }
        if (spec.regime == Regime::Superlinear) {
            rep.f0_trend.monotone = down_toward_zero;
            rep.pass_f0 = down_toward_zero && rep.f0_trend.ratio_at_smallest <= 1e-2;
        } else {
            rep.f0_trend.monotone = up_toward_zero;
            rep.pass_f0 = up_toward_zero && rep.f0_trend.ratio_at_smallest >= 1e2;
        }
    }

    // (f_sc): f(t)/t^{q-1} bounded over the top decade of samples. Growth
    // beyond t^{q-1} inflates the ratio across the decade; bounded (constant
    // or decaying) ratios pass.
    {
        const double t_max = ts.back();
        std::vector<double> ratio;
        for (double t : ts)
            if (t >= t_max / 10.0) ratio.push_back(spec.f.f(t) / std::pow(t, spec.q() - 1.0));
        std::vector<double> sorted = ratio;
        std::sort(sorted.begin(), sorted.end());
        rep.finf_trend.fitted_constant = sorted[sorted.size() / 2];
        rep.finf_trend.max_ratio = sorted.back();
        rep.finf_trend.bottom_ratio = ratio.front();
        rep.finf_trend.top_ratio = ratio.back();
        bool finite = true;
        for (double r : ratio)
            if (!std::isfinite(r)) finite = false;
        rep.pass_fsc = finite &&
                       rep.finf_trend.top_ratio <=
                           2.0 * rep.finf_trend.bottom_ratio +
                               1e-12 * (1.0 + rep.finf_trend.fitted_constant);
    }

    // (f_inf): AR inequality theta*F(t) <= t f(t) + T with T stable under grid
    // doubling. Checking at a = 0 suffices: the shift only lowers the defect.
    if (spec.regime == Regime::Superlinear) {
        const auto defect = [&](double scale) {
            double worst = 0.0;
            for (double t : ts) {
                const double tt = t * scale;
                const double lhs = spec.f.theta_ar * spec.f.F(tt);
                const double rhs = tt * spec.f.f(tt);
                const double d = lhs - rhs;
                if (d > 1e-12 * (std::abs(lhs) + std::abs(rhs))) worst = std::max(worst, d);
            }
            return worst;
        };
        rep.ar_defect_grid = defect(1.0);
        rep.ar_defect_doubled = defect(2.0);
        rep.pass_finf = spec.f.theta_ar > spec.p &&
                        rep.ar_defect_doubled <= 2.0 * rep.ar_defect_grid + 1e-9;
    } else {
        rep.pass_finf = spec.q() < spec.p;
    }
    return rep;
}

}  // namespace splab
