#pragma once

// Test-side oracles, kept independent of the library's own quadrature and
// differentiation paths.

#include <cmath>
#include <functional>
#include <vector>

#include "splab/radialfem.hpp"

namespace oracles {

/// Adaptive Simpson quadrature (recursive bisection).
inline double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                          double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

/// Central finite differences of the discrete energy in every free nodal
/// coordinate (independent of grad_energy's analytic formulas).
inline std::vector<double> fd_energy_gradient(const splab::RadialFunction& u,
                                              const splab::ProblemSpec& spec,
                                              double rel_step = 1e-5) {
    const int n = u.mesh().node_count();
    std::vector<double> g(n, 0.0);
    splab::RadialFunction work = u;
    auto& w = work.mutable_values();
    for (int i = 0; i + 1 < n; ++i) {
        const double h = rel_step * std::max(1.0, std::abs(u[i]));
        const double keep = w[i];
        w[i] = keep + h;
        const double ep = splab::energy(work, spec);
        w[i] = keep - h;
        const double em = splab::energy(work, spec);
        w[i] = keep;
        g[i] = (ep - em) / (2.0 * h);
    }
    return g;
}

}  // namespace oracles
