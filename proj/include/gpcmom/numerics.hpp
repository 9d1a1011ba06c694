#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace gpcmom {

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on [a, b].
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol = 1e-12, int max_depth = 40) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Fixed composite Gauss-Legendre panels; cheap and smooth-integrand exact
/// enough for repeated use inside optimization loops.
template <typename F>
double integrate_panels(F&& f, double a, double b, int panels = 24, int points = 12) {
    // 12-point Gauss-Legendre on [-1,1]
    static const std::array<double, 6> gx = {0.1252334085114689, 0.3678314989981802,
                                             0.5873179542866175, 0.7699026741943047,
                                             0.9041172563704749, 0.9815606342467192};
    static const std::array<double, 6> gw = {0.2491470458134028, 0.2334925365383548,
                                             0.2031674267230659, 0.1600783285433462,
                                             0.1069393259953184, 0.0471753363865118};
    (void)points;
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        const double s = 0.5 * h;
        for (int i = 0; i < 6; ++i)
            acc += s * gw[i] * (f(c - s * gx[i]) + f(c + s * gx[i]));
    }
    return acc;
}

/// Monotone cubic (Fritsch-Carlson) interpolant through (x_i, y_i); used for
/// the histogram density smoothing. Values never overshoot adjacent data, so
/// non-negative inputs stay non-negative.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw std::invalid_argument("need >= 2 interpolation points");
        slopes_.resize(n);
        std::vector<double> d(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        slopes_[0] = d[0];
        slopes_[n - 1] = d[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            slopes_[i] = (d[i - 1] * d[i] > 0.0) ? 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]) : 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (d[i] == 0.0) {
                slopes_[i] = slopes_[i + 1] = 0.0;
            } else {
                const double a = slopes_[i] / d[i], b = slopes_[i + 1] / d[i];
                const double s = a * a + b * b;
                if (s > 9.0) {
                    const double t = 3.0 / std::sqrt(s);
                    slopes_[i] = t * a * d[i];
                    slopes_[i + 1] = t * b * d[i];
                }
            }
        }
    }

    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        std::size_t i = segment(x);
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return y_[i] * (2 * t3 - 3 * t2 + 1) + h * slopes_[i] * (t3 - 2 * t2 + t) +
               y_[i + 1] * (-2 * t3 + 3 * t2) + h * slopes_[i + 1] * (t3 - t2);
    }

    /// Exact integral of the cubic over the full knot range.
    double integral() const {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
            const double h = x_[i + 1] - x_[i];
            acc += h * 0.5 * (y_[i] + y_[i + 1]) + h * h / 12.0 * (slopes_[i] - slopes_[i + 1]);
        }
        return acc;
    }

private:
    std::size_t segment(double x) const {
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            (x_[mid] <= x ? lo : hi) = mid;
        }
        return lo;
    }

    std::vector<double> x_, y_, slopes_;
};

}  // namespace gpcmom
