#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace splab {

constexpr double kPi = 3.14159265358979323846;

/// Area of the unit (N-1)-sphere in R^N: 2 pi^{N/2} / Gamma(N/2).
inline double sphere_area(int dim) {
    if (dim < 1) throw std::invalid_argument("sphere_area: dimension must be >= 1");
    return 2.0 * std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/// Odd power |s|^{e-1} s, the flux nonlinearity of the p-Laplacian (e = p-1).
inline double pow_signed(double s, double e) {
    if (s == 0.0) return 0.0;
    return s > 0.0 ? std::pow(s, e) : -std::pow(-s, e);
}

inline double sqr(double x) { return x * x; }

namespace detail {

/// Composite Simpson rule on [a,b] with n panels (n rounded up to even).
template <typename F>
double simpson(F&& f, double a, double b, int n) {
    if (n < 2) n = 2;
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Integrates f over [a,b] (0 < a < b) with panels graded geometrically,
/// suitable for integrands spanning many decades.
template <typename F>
double integrate_log_graded(F&& f, double a, double b, int panels_per_decade = 8,
                            int simpson_n = 16) {
    if (!(0.0 < a && a < b)) throw std::invalid_argument("integrate_log_graded: need 0<a<b");
    const double decades = std::log10(b / a);
    const int panels = std::max(1, static_cast<int>(std::ceil(decades * panels_per_decade)));
    const double ratio = std::pow(b / a, 1.0 / panels);
    double lo = a, total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double hi = (i + 1 == panels) ? b : lo * ratio;
        total += simpson(f, lo, hi, simpson_n);
        lo = hi;
    }
    return total;
}

/// Least-squares line y = slope*x + offset.
inline std::pair<double, double> least_squares_line(const std::vector<double>& x,
                                                    const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("least_squares_line: degenerate abscissas");
    const double slope = (n * sxy - sx * sy) / denom;
    const double offset = (sy - slope * sx) / n;
    return {slope, offset};
}

}  // namespace detail
}  // namespace splab
