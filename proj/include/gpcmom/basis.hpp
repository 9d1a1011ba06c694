#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gpcmom/errors.hpp"

namespace gpcmom {

enum class FamilyKind { Hermite, Legendre, Laguerre, Jacobi };

inline std::string family_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::Hermite: return "hermite";
        case FamilyKind::Legendre: return "legendre";
        case FamilyKind::Laguerre: return "laguerre";
        case FamilyKind::Jacobi: return "jacobi";
    }
    return "?";
}

inline FamilyKind family_from_name(const std::string& s) {
    if (s == "hermite") return FamilyKind::Hermite;
    if (s == "legendre") return FamilyKind::Legendre;
    if (s == "laguerre") return FamilyKind::Laguerre;
    if (s == "jacobi") return FamilyKind::Jacobi;
    throw std::invalid_argument("unknown polynomial family: " + s);
}

/// One member of the Wiener-Askey scheme. The weight is always normalized to
/// a probability density: standard normal (Hermite), uniform on [-1,1]
/// (Legendre), gamma with density x^a e^-x / Gamma(a+1) (Laguerre), beta with
/// density prop. to (1-x)^a (1+x)^b on [-1,1] (Jacobi).
struct PolynomialFamily {
    FamilyKind kind = FamilyKind::Hermite;
    double a = 0.0;  // Laguerre/Jacobi parameter, > -1
    double b = 0.0;  // Jacobi parameter, > -1

    static PolynomialFamily hermite() { return {FamilyKind::Hermite}; }
    static PolynomialFamily legendre() { return {FamilyKind::Legendre}; }
    static PolynomialFamily laguerre(double shape) { return {FamilyKind::Laguerre, shape}; }
    static PolynomialFamily jacobi(double a, double b) { return {FamilyKind::Jacobi, a, b}; }

    void validate() const {
        if (kind == FamilyKind::Laguerre && !(a > -1.0))
            throw std::invalid_argument("laguerre shape parameter must be > -1");
        if (kind == FamilyKind::Jacobi && (!(a > -1.0) || !(b > -1.0)))
            throw std::invalid_argument("jacobi parameters must be > -1");
    }

    bool operator==(const PolynomialFamily&) const = default;
};

/// Monic three-term recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1} for the
/// probability-normalized weight. b_0 is the total weight mass, i.e. 1.
struct RecurrenceCoefficients {
    std::vector<double> a;
    std::vector<double> b;
};

inline RecurrenceCoefficients recurrence_coefficients(const PolynomialFamily& fam, int count) {
    fam.validate();
    RecurrenceCoefficients rc;
    rc.a.resize(count);
    rc.b.resize(count);
    if (count == 0) return rc;
    rc.b[0] = 1.0;
    switch (fam.kind) {
        case FamilyKind::Hermite:
            for (int k = 0; k < count; ++k) {
                rc.a[k] = 0.0;
                if (k > 0) rc.b[k] = static_cast<double>(k);
            }
            break;
        case FamilyKind::Legendre:
            for (int k = 0; k < count; ++k) {
                rc.a[k] = 0.0;
                if (k > 0) {
                    const double kk = static_cast<double>(k);
                    rc.b[k] = kk * kk / (4.0 * kk * kk - 1.0);
                }
            }
            break;
        case FamilyKind::Laguerre:
            for (int k = 0; k < count; ++k) {
                rc.a[k] = 2.0 * k + fam.a + 1.0;
                if (k > 0) rc.b[k] = k * (k + fam.a);
            }
            break;
        case FamilyKind::Jacobi: {
            const double al = fam.a, be = fam.b;
            for (int k = 0; k < count; ++k) {
                const double s = 2.0 * k + al + be;
                if (k == 0) {
                    rc.a[0] = (be - al) / (al + be + 2.0);
                } else {
                    // generic formula; the k=1, al+be in {0,-1} corner is the
                    // only place the denominator (s)(s+2) could vanish
                    const double den = s * (s + 2.0);
                    rc.a[k] = den != 0.0 ? (be * be - al * al) / den
                                         : (be * be - al * al) / ((s + 1.0) * (s + 2.0));
                    if (k == 1) {
                        rc.b[1] = 4.0 * (1.0 + al) * (1.0 + be) /
                                  ((2.0 + al + be) * (2.0 + al + be) * (3.0 + al + be));
                    } else {
                        rc.b[k] = 4.0 * k * (k + al) * (k + be) * (k + al + be) /
                                  (s * s * (s + 1.0) * (s - 1.0));
                    }
                }
            }
            break;
        }
    }
    return rc;
}

/// Gaussian quadrature signature {(w_j, theta_j)}; weights sum to 1.
struct QuadratureRule {
    int order = 0;
    std::vector<double> nodes;
    std::vector<double> weights;

    std::string to_text() const {
        std::string out;
        char line[64];
        for (int j = 0; j < order; ++j) {
            std::snprintf(line, sizeof line, "%+.16e %.16e\n", nodes[j], weights[j]);
            out += line;
        }
        return out;
    }
};

/// Golub-Welsch: nodes/weights from the symmetric tridiagonal recurrence matrix.
inline QuadratureRule gauss_quadrature(const PolynomialFamily& fam, int q) {
    if (q < 1) throw std::invalid_argument("quadrature order must be >= 1");
    const RecurrenceCoefficients rc = recurrence_coefficients(fam, q);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
    for (int k = 0; k < q; ++k) {
        jacobi(k, k) = rc.a[k];
        if (k > 0) {
            const double off = std::sqrt(rc.b[k]);
            jacobi(k, k - 1) = off;
            jacobi(k - 1, k) = off;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw NumericError("quadrature eigen-decomposition did not converge");

    QuadratureRule rule;
    rule.order = q;
    rule.nodes.resize(q);
    rule.weights.resize(q);
    double wsum = 0.0;
    for (int j = 0; j < q; ++j) {
        rule.nodes[j] = solver.eigenvalues()(j);
        const double v0 = solver.eigenvectors()(0, j);
        rule.weights[j] = v0 * v0;  // total weight mass is 1
        wsum += rule.weights[j];
    }
    for (double& w : rule.weights) w /= wsum;

    // symmetric weight functions give rules with x_j = -x_{q-1-j}; enforcing
    // that exactly removes the eigensolver's tiny asymmetry, which otherwise
    // biases high odd moments
    const bool symmetric = fam.kind == FamilyKind::Hermite || fam.kind == FamilyKind::Legendre ||
                           (fam.kind == FamilyKind::Jacobi && fam.a == fam.b);
    if (symmetric) {
        for (int j = 0; j < q / 2; ++j) {
            const int k = q - 1 - j;
            const double x = 0.5 * (rule.nodes[k] - rule.nodes[j]);
            const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
            rule.nodes[j] = -x;
            rule.nodes[k] = x;
            rule.weights[j] = w;
            rule.weights[k] = w;
        }
        if (q % 2 == 1) rule.nodes[q / 2] = 0.0;
    }
    return rule;
}

/// Orthonormal univariate basis phi_0..phi_d for one family.
struct UnivariateBasis {
    PolynomialFamily family;
    int max_degree = 0;
    RecurrenceCoefficients recurrence;    // monic coefficients, size d+1
    std::vector<double> squared_norms;    // <p_k^2> before normalization, diagnostics

    static UnivariateBasis create(const PolynomialFamily& fam, int d) {
        if (d < 0) throw std::invalid_argument("basis degree must be >= 0");
        UnivariateBasis basis;
        basis.family = fam;
        basis.max_degree = d;
        basis.recurrence = recurrence_coefficients(fam, d + 1);
        basis.squared_norms.resize(d + 1);
        double norm = 1.0;
        for (int k = 0; k <= d; ++k) {
            if (k > 0) norm *= basis.recurrence.b[k];
            basis.squared_norms[k] = norm;
        }
        return basis;
    }

    /// Orthonormal phi_j(x) by the normalized three-term recurrence.
    double evaluate(int j, double x) const {
        if (j < 0 || j > max_degree) throw std::out_of_range("basis degree index out of range");
        double prev = 0.0;
        double cur = 1.0;  // phi_0
        for (int k = 0; k < j; ++k) {
            const double next =
                ((x - recurrence.a[k]) * cur - (k > 0 ? std::sqrt(recurrence.b[k]) : 0.0) * prev) /
                std::sqrt(recurrence.b[k + 1]);
            prev = cur;
            cur = next;
        }
        return cur;
    }

    /// phi_0(x)..phi_d(x) in one recurrence pass.
    void evaluate_all(double x, std::span<double> out) const {
        double prev = 0.0;
        double cur = 1.0;
        out[0] = 1.0;
        for (int k = 0; k < max_degree && k + 1 < static_cast<int>(out.size()); ++k) {
            const double next =
                ((x - recurrence.a[k]) * cur - (k > 0 ? std::sqrt(recurrence.b[k]) : 0.0) * prev) /
                std::sqrt(recurrence.b[k + 1]);
            prev = cur;
            cur = next;
            out[k + 1] = next;
        }
    }
};

/// <prod_j phi_j^e> under the family weight, by quadrature exact for the
/// integrand degree. `exponents` pairs up a degree index with its power.
inline double univariate_inner_product(const UnivariateBasis& basis,
                                       std::span<const std::pair<int, int>> exponents) {
    long long total_degree = 0;
    for (const auto& [deg, pow] : exponents) {
        if (deg < 0 || deg > basis.max_degree)
            throw std::out_of_range("basis degree index out of range");
        if (pow < 0) throw std::invalid_argument("negative exponent");
        total_degree += static_cast<long long>(deg) * pow;
    }
    const int q = static_cast<int>(std::max<long long>(1, (total_degree + 2) / 2));
    const QuadratureRule rule = gauss_quadrature(basis.family, q);
    std::vector<double> phi(basis.max_degree + 1);
    double acc = 0.0;
    for (int t = 0; t < rule.order; ++t) {
        basis.evaluate_all(rule.nodes[t], phi);
        double term = rule.weights[t];
        for (const auto& [deg, pow] : exponents)
            for (int e = 0; e < pow; ++e) term *= phi[deg];
        acc += term;
    }
    return acc;
}

}  // namespace gpcmom
