#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

#include "splab/model.hpp"

namespace splab {

/// The discontinuous shifted nonlinearity
///
///   f_a(t) = f(t) - a   for t >= 0,      f_a(t) = 0  for t < 0,
///
/// its continuous primitive F_a, and the generalized directional derivative
/// of -F_a. For a > 0 the jump sits at t = 0 and F_a has a kink there; the
/// exact piecewise formulas below feed the criticality certificates, while
/// mollified_f_a provides the single-valued field used inside descent loops.
class ShiftedNonlinearity {
public:
    ShiftedNonlinearity(NonlinearitySpec base, double shift) : base_(std::move(base)), a_(shift) {
        if (!(a_ >= 0.0)) throw std::invalid_argument("ShiftedNonlinearity: need a >= 0");
    }

    double a() const { return a_; }
    const NonlinearitySpec& base() const { return base_; }

    double f(double t) const { return base_.f(t); }
    double F(double t) const { return base_.F(t); }

    /// f_a(t): f(t) - a on [0,inf), 0 on (-inf,0).
    double f_a(double t) const { return t >= 0.0 ? base_.f(t) - a_ : 0.0; }

    /// F_a(t) = int_0^t f_a: F(t) - a t on [0,inf), 0 on (-inf,0].
    double F_a(double t) const { return t > 0.0 ? base_.F(t) - a_ * t : 0.0; }

    /// Generalized directional derivative of -F_a at t along s:
    ///
    ///   (-F_a)^0(t,s) = -(f(t)-a) s   t > 0
    ///                 = a s           t = 0, s > 0
    ///                 = 0             t < 0, or t = 0 and s <= 0.
    double clarke_neg_Fa(double t, double s) const {
        if (t > 0.0) return -(base_.f(t) - a_) * s;
        if (t == 0.0 && s > 0.0) return a_ * s;
        return 0.0;
    }

    /// Continuous selection equal to f_a on [0,inf), ramping linearly from
    /// -a at 0^- to 0 at -eps, and vanishing below -eps.
    double mollified_f_a(double t, double eps) const {
        if (!(eps > 0.0)) throw std::invalid_argument("mollified_f_a: need eps > 0");
        if (t >= 0.0) return base_.f(t) - a_;
        if (t >= -eps) return -a_ * (t + eps) / eps;
        return 0.0;
    }

    /// Smallest sampled constant T making theta*F_a(t) <= t f_a(t) + T hold on
    /// the grid: max over the grid of (theta F_a - t f_a)^+. Differences below
    /// rounding level of the two terms count as exact equality.
    double ar_defect(double theta, std::span<const double> t_grid) const {
        double worst = 0.0;
        for (double t : t_grid) {
            const double lhs = theta * F_a(t);
            const double rhs = t * f_a(t);
            const double d = lhs - rhs;
            if (d > 1e-12 * (std::abs(lhs) + std::abs(rhs))) worst = std::max(worst, d);
        }
        return worst;
    }

private:
    NonlinearitySpec base_;
    double a_;
};

}  // namespace splab
