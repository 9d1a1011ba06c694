#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "gpcmom/errors.hpp"
#include "gpcmom/gpc.hpp"
#include "gpcmom/numerics.hpp"
#include "gpcmom/transform.hpp"

namespace gpcmom {

struct GaussianDensity {
    double mean = 0.0;
    double sigma = 1.0;

    double pdf(double y) const { return std_normal_pdf((y - mean) / sigma) / sigma; }
    double log_pdf(double y) const {
        const double z = (y - mean) / sigma;
        return -0.918938533204672742 - 0.5 * z * z - std::log(sigma);
    }
};

inline GaussianDensity fit_gaussian(const MomentVector& moments) {
    if (moments.order() < 2) throw std::invalid_argument("gaussian fit needs two moments");
    const double var = moments[2] - moments[1] * moments[1];
    if (!(var > 0.0)) throw NumericError("degenerate distribution: non-positive variance");
    return {moments[1], std::sqrt(var)};
}

/// exp(-sum lambda_k x^k) on a finite support, fitted in the standardized
/// variable x = (y - shift) / scale. lambda[0] is the log partition term.
struct MaxEntDensity {
    double lower = 0.0;
    double upper = 0.0;
    double shift = 0.0;
    double scale = 1.0;
    std::vector<double> lambda;  // lambda_0 .. lambda_M, standardized coords

    double exponent(double x) const {
        // -sum_k lambda_k x^k, Horner
        double s = 0.0;
        for (int k = static_cast<int>(lambda.size()) - 1; k >= 0; --k) s = s * x + lambda[k];
        return -s;
    }

    double pdf(double y) const {
        if (y < lower || y > upper) return 0.0;
        return std::exp(exponent((y - shift) / scale)) / scale;
    }

    /// Outside the support: linear extrapolation penalty from the boundary,
    /// strictly below any in-support value.
    double log_pdf(double y) const {
        const double yb = std::clamp(y, lower, upper);
        const double base = exponent((yb - shift) / scale) - std::log(scale);
        if (y == yb) return base;
        return base - 50.0 * std::abs(y - yb) / scale;
    }
};

namespace detail {

/// E[x^k] for k = 0..kmax of exp(-poly) on [a,b] plus the log partition,
/// computed with overflow-shifted composite Gauss-Legendre panels.
inline void maxent_weighted_powers(std::span<const double> lam_tail, double a, double b, int kmax,
                                   std::vector<double>& powers, double& log_z) {
    const int panels = std::max(32, static_cast<int>((b - a) / 0.25) + 1);
    static const double gx[6] = {0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
                                 0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
    static const double gw[6] = {0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
                                 0.1600783285433462, 0.1069393259953184, 0.0471753363865118};
    const double h = (b - a) / panels;
    std::vector<double> xs, ws, es;
    xs.reserve(panels * 12);
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h, s = 0.5 * h;
        for (int i = 0; i < 6; ++i) {
            xs.push_back(c - s * gx[i]);
            ws.push_back(s * gw[i]);
            xs.push_back(c + s * gx[i]);
            ws.push_back(s * gw[i]);
        }
    }
    double emax = -1e308;
    es.resize(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        double e = 0.0;
        for (int k = static_cast<int>(lam_tail.size()) - 1; k >= 0; --k) e = e * xs[t] + lam_tail[k];
        e = -e * xs[t];  // -sum_{k>=1} lambda_k x^k
        es[t] = e;
        emax = std::max(emax, e);
    }
    powers.assign(kmax + 1, 0.0);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        double term = ws[t] * std::exp(es[t] - emax);
        for (int k = 0; k <= kmax; ++k) {
            powers[k] += term;
            term *= xs[t];
        }
    }
    log_z = emax + std::log(powers[0]);
    const double z = powers[0];
    for (double& v : powers) v /= z;
}

}  // namespace detail

/// Maximum entropy density matching raw moments mu_1..mu_M on a finite
/// support, via damped Newton on the convex dual. Converged when the
/// standardized moment residuals drop below 1e-6.
inline MaxEntDensity fit_maxent(const MomentVector& moments, double lower, double upper,
                                const std::vector<double>* init = nullptr, int max_iterations = 200) {
    moments.validate();
    const int M = moments.order();
    if (M < 1 || M > 5) throw std::invalid_argument("maxent fit supports 1..5 moments");
    if (!(lower < upper) || !std::isfinite(lower) || !std::isfinite(upper))
        throw std::invalid_argument("maxent fit needs a finite support interval");

    // standardize: conditioning of the dual Hessian
    double shift = moments[1], scale = 1.0;
    if (M >= 2) {
        const double var = moments[2] - moments[1] * moments[1];
        if (!(var > 0.0)) throw NumericError("degenerate distribution: non-positive variance");
        scale = std::sqrt(var);
    }
    std::vector<double> target(M + 1, 0.0);  // standardized raw moments, index k
    target[0] = 1.0;
    for (int k = 1; k <= M; ++k) {
        double mk = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double raw_j = (j == 0) ? 1.0 : moments[j];
            mk += binomial(k, j) * std::pow(-shift, k - j) * raw_j;
        }
        target[k] = mk / std::pow(scale, k);
    }
    const double a = (lower - shift) / scale;
    const double b = (upper - shift) / scale;

    Eigen::VectorXd lam = Eigen::VectorXd::Zero(M);  // lambda_1..lambda_M
    if (init && static_cast<int>(init->size()) == M + 1)
        for (int k = 1; k <= M; ++k) lam(k - 1) = (*init)[k];
    else if (M >= 2)
        lam(1) = 0.5;  // standard normal warm start

    std::vector<double> powers;
    double log_z = 0.0;
    auto dual = [&](const Eigen::VectorXd& l, std::vector<double>& pw, double& lz) {
        detail::maxent_weighted_powers({l.data(), static_cast<std::size_t>(M)}, a, b, 2 * M, pw, lz);
        double g = lz;
        for (int k = 1; k <= M; ++k) g += l(k - 1) * target[k];
        return g;
    };

    double gamma = dual(lam, powers, log_z);
    Eigen::VectorXd grad(M);
    std::vector<double> residuals(M);
    for (int iter = 0; iter < max_iterations; ++iter) {
        for (int k = 1; k <= M; ++k) {
            grad(k - 1) = target[k] - powers[k];
            residuals[k - 1] = std::abs(grad(k - 1));
        }
        if (grad.lpNorm<Eigen::Infinity>() < 1e-8) {
            MaxEntDensity density;
            density.lower = lower;
            density.upper = upper;
            density.shift = shift;
            density.scale = scale;
            density.lambda.assign(M + 1, 0.0);
            density.lambda[0] = log_z;
            for (int k = 1; k <= M; ++k) density.lambda[k] = lam(k - 1);
            return density;
        }
        Eigen::MatrixXd hess(M, M);
        for (int j = 1; j <= M; ++j)
            for (int k = 1; k <= M; ++k) hess(j - 1, k - 1) = powers[j + k] - powers[j] * powers[k];
        // damped Newton with a ridge fallback
        Eigen::VectorXd step;
        for (double ridge = 0.0;; ridge = std::max(1e-10, ridge * 10.0)) {
            Eigen::MatrixXd h = hess;
            if (ridge > 0.0) h.diagonal().array() += ridge;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            step = ldlt.solve(-grad);
            if (ldlt.info() == Eigen::Success && step.allFinite()) break;
            if (ridge > 1e6) throw FitError("maxent dual Hessian solve failed", residuals);
        }
        const double slope = grad.dot(step);
        double t = 1.0;
        bool accepted = false;
        std::vector<double> trial_powers;
        double trial_log_z = 0.0;
        while (t > 1e-8) {
            const Eigen::VectorXd trial = lam + t * step;
            const double g = dual(trial, trial_powers, trial_log_z);
            if (std::isfinite(g) && g <= gamma + 1e-4 * t * slope) {
                lam = trial;
                gamma = g;
                powers = trial_powers;
                log_z = trial_log_z;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) throw FitError("maxent line search stalled", residuals);
    }
    throw FitError("maxent fit did not converge", residuals);
}

// ---------------------------------------------------------------------------
// Earth Mover's Distance
// ---------------------------------------------------------------------------

/// Discrete mass distribution on the line.
struct Signature {
    std::vector<double> points;
    std::vector<double> masses;

    void validate() const {
        if (points.size() != masses.size()) throw std::invalid_argument("signature size mismatch");
        double total = 0.0;
        for (double m : masses) {
            if (m < 0.0) throw std::invalid_argument("signature masses must be >= 0");
            total += m;
        }
        if (!(total > 0.0)) throw std::domain_error("signature carries no mass");
    }
};

/// 1D transportation distance between normalized signatures: the integral of
/// the absolute CDF difference over the merged breakpoints, which solves the
/// transportation LP for equal total masses.
inline double emd_discrete(const Signature& p, const Signature& q) {
    p.validate();
    q.validate();
    double tp = 0.0, tq = 0.0;
    for (double m : p.masses) tp += m;
    for (double m : q.masses) tq += m;

    struct Event {
        double x;
        double dp;
        double dq;
    };
    std::vector<Event> events;
    events.reserve(p.points.size() + q.points.size());
    for (std::size_t i = 0; i < p.points.size(); ++i) events.push_back({p.points[i], p.masses[i] / tp, 0.0});
    for (std::size_t j = 0; j < q.points.size(); ++j) events.push_back({q.points[j], 0.0, q.masses[j] / tq});
    std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.x < b.x; });

    double cdf_p = 0.0, cdf_q = 0.0, prev = events.front().x, work = 0.0;
    for (const Event& e : events) {
        work += std::abs(cdf_p - cdf_q) * (e.x - prev);
        prev = e.x;
        cdf_p += e.dp;
        cdf_q += e.dq;
    }
    return work;
}

/// 1D Wasserstein-1 between two densities via CDF differences on a grid.
template <typename PdfA, typename PdfB>
double emd_density(PdfA&& a, PdfB&& b, double lower, double upper, int grid_points = 2048) {
    if (!(lower < upper)) throw std::invalid_argument("bad grid range");
    const int n = std::max(grid_points, 8);
    const double h = (upper - lower) / (n - 1);
    std::vector<double> fa(n), fb(n);
    for (int i = 0; i < n; ++i) {
        const double x = lower + i * h;
        fa[i] = std::max(0.0, a(x));
        fb[i] = std::max(0.0, b(x));
    }
    std::vector<double> ca(n, 0.0), cb(n, 0.0);
    for (int i = 1; i < n; ++i) {
        ca[i] = ca[i - 1] + 0.5 * h * (fa[i - 1] + fa[i]);
        cb[i] = cb[i - 1] + 0.5 * h * (fb[i - 1] + fb[i]);
    }
    const double za = ca.back() > 0.0 ? ca.back() : 1.0;
    const double zb = cb.back() > 0.0 ? cb.back() : 1.0;
    double acc = 0.0;
    for (int i = 1; i < n; ++i)
        acc += 0.5 * h * (std::abs(ca[i - 1] / za - cb[i - 1] / zb) + std::abs(ca[i] / za - cb[i] / zb));
    return acc;
}

// ---------------------------------------------------------------------------
// Histogram density for the MC / qMC baselines
// ---------------------------------------------------------------------------

/// Freedman-Diaconis histogram with monotone cubic smoothing of the bin
/// densities, renormalized to integrate to 1.
class HistogramDensity {
public:
    HistogramDensity() = default;

    explicit HistogramDensity(std::vector<double> samples) {
        if (samples.size() < 100) throw std::invalid_argument("need >= 100 samples");
        std::sort(samples.begin(), samples.end());
        const std::size_t s = samples.size();
        const double q1 = samples[s / 4], q3 = samples[(3 * s) / 4];
        const double iqr = q3 - q1;
        const double lo = samples.front(), hi = samples.back();
        if (!(hi > lo)) throw NumericError("degenerate sample set: all values identical");
        double width = 2.0 * iqr * std::pow(static_cast<double>(s), -1.0 / 3.0);
        if (!(width > 0.0)) width = (hi - lo) / 64.0;
        int bins = std::clamp(static_cast<int>(std::ceil((hi - lo) / width)), 4, 4096);

        double mean = 0.0, sq = 0.0;
        for (double v : samples) mean += v;
        mean /= static_cast<double>(s);
        for (double v : samples) sq += (v - mean) * (v - mean);
        sigma_ = std::sqrt(sq / static_cast<double>(s));

        const double h = (hi - lo) / bins;
        std::vector<double> count(bins, 0.0);
        for (double v : samples) {
            int k = std::min(bins - 1, static_cast<int>((v - lo) / h));
            count[k] += 1.0;
        }
        std::vector<double> x, y;
        x.push_back(lo);
        y.push_back(0.0);
        for (int k = 0; k < bins; ++k) {
            x.push_back(lo + (k + 0.5) * h);
            y.push_back(count[k] / (static_cast<double>(s) * h));
        }
        x.push_back(hi);
        y.push_back(0.0);
        curve_ = MonotoneCubic(std::move(x), std::move(y));
        norm_ = curve_.integral();
        if (!(norm_ > 0.0)) throw NumericError("histogram density normalization failed");
    }

    double lower() const { return curve_.xmin(); }
    double upper() const { return curve_.xmax(); }
    double sigma() const { return sigma_; }

    double pdf(double y) const {
        if (y < curve_.xmin() || y > curve_.xmax()) return 0.0;
        return std::max(0.0, curve_(y)) / norm_;
    }

    double log_pdf(double y) const {
        const double floor = 1e-12 / (curve_.xmax() - curve_.xmin());
        const double yb = std::clamp(y, curve_.xmin(), curve_.xmax());
        const double base = std::log(std::max(pdf(yb), floor));
        if (y == yb) return base;
        return base - 50.0 * std::abs(y - yb) / std::max(sigma_, 1e-12);
    }

private:
    MonotoneCubic curve_;
    double norm_ = 1.0;
    double sigma_ = 1.0;
};

}  // namespace gpcmom
