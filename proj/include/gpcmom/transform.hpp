#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace gpcmom {

inline double std_normal_pdf(double z) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

inline double std_normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

/// Phi^-1: Acklam's rational approximation refined by one Halley step.
inline double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal quantile requires p in (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement against erfc-based Phi
    const double e = std_normal_cdf(x) - p;
    const double u = e / std_normal_pdf(x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

/// Clipped-normal input probability model: independent components, each a
/// normal N(mu_i, sigma_i^2) restricted to (lo_i, hi_i) by CDF rescaling.
/// Infinite bounds are allowed and degenerate to the plain affine map.
struct InputProbabilityModel {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<double> lower;  // -inf allowed
    std::vector<double> upper;  // +inf allowed

    static InputProbabilityModel unclipped(std::vector<double> mu, std::vector<double> sigma) {
        const double inf = std::numeric_limits<double>::infinity();
        InputProbabilityModel m;
        m.mean = std::move(mu);
        m.stddev = std::move(sigma);
        m.lower.assign(m.mean.size(), -inf);
        m.upper.assign(m.mean.size(), inf);
        m.validate();
        return m;
    }

    int dim() const { return static_cast<int>(mean.size()); }

    void validate() const {
        if (stddev.size() != mean.size() || lower.size() != mean.size() ||
            upper.size() != mean.size())
            throw std::invalid_argument("input model field lengths disagree");
        for (std::size_t i = 0; i < mean.size(); ++i) {
            if (!(stddev[i] > 0.0)) throw std::invalid_argument("sigma must be > 0");
            if (!(lower[i] < upper[i])) throw std::invalid_argument("clip bounds must be ordered");
        }
    }
};

/// x_i = mu_i + sigma_i * clip(theta_i): the standard normal draw is mapped
/// to a uniform between Phi(theta_i^-) and Phi(theta_i^+) and back through
/// the normal quantile, which confines it to the clip interval.
inline std::vector<double> to_physical(std::span<const double> theta,
                                       const InputProbabilityModel& alpha) {
    if (static_cast<int>(theta.size()) != alpha.dim())
        throw std::invalid_argument("theta dimension mismatch");
    std::vector<double> x(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double tlo = (alpha.lower[i] - alpha.mean[i]) / alpha.stddev[i];
        const double thi = (alpha.upper[i] - alpha.mean[i]) / alpha.stddev[i];
        if (std::isinf(tlo) && std::isinf(thi)) {
            x[i] = alpha.mean[i] + alpha.stddev[i] * theta[i];
            continue;
        }
        const double plo = std_normal_cdf(tlo);
        const double phi = std_normal_cdf(thi);
        double u = plo + std_normal_cdf(theta[i]) * (phi - plo);
        u = std::min(std::max(u, 1e-15), 1.0 - 1e-15);  // transform undefined at {0,1}
        x[i] = alpha.mean[i] + alpha.stddev[i] * std_normal_quantile(u);
    }
    return x;
}

}  // namespace gpcmom
