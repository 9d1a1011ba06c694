#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gpcmom/basis.hpp"
#include "gpcmom/errors.hpp"
#include "gpcmom/multiindex.hpp"

namespace gpcmom {

/// Full tensor product of univariate quadrature rules, q nodes per dimension.
struct TensorQuadrature {
    int dim = 0;
    int order = 0;
    std::vector<QuadratureRule> rules;
    std::vector<double> nodes;    // flattened, node t occupies [t*dim, (t+1)*dim)
    std::vector<double> weights;  // product weights, sum 1

    static TensorQuadrature create(const std::vector<PolynomialFamily>& families, int q) {
        TensorQuadrature tq;
        tq.dim = static_cast<int>(families.size());
        tq.order = q;
        std::size_t count = 1;
        for (const auto& fam : families) {
            tq.rules.push_back(gauss_quadrature(fam, q));
            count *= static_cast<std::size_t>(q);
        }
        tq.nodes.resize(count * tq.dim);
        tq.weights.assign(count, 1.0);
        std::vector<int> digit(tq.dim, 0);
        for (std::size_t t = 0; t < count; ++t) {
            for (int j = 0; j < tq.dim; ++j) {
                tq.nodes[t * tq.dim + j] = tq.rules[j].nodes[digit[j]];
                tq.weights[t] *= tq.rules[j].weights[digit[j]];
            }
            for (int j = tq.dim - 1; j >= 0; --j) {
                if (++digit[j] < q) break;
                digit[j] = 0;
            }
        }
        return tq;
    }

    std::size_t node_count() const { return weights.size(); }
    std::span<const double> node(std::size_t t) const {
        return {nodes.data() + t * dim, static_cast<std::size_t>(dim)};
    }
};

/// Coefficient vector over the graded n-variate orthonormal basis of degree d.
struct GpcExpansion {
    int n = 0;
    int d = 0;
    std::vector<PolynomialFamily> families;
    GradedIndexSet index_set;
    std::vector<UnivariateBasis> bases;
    std::vector<double> coefficients;

    int basis_size() const { return index_set.size(); }

    /// psi_i(theta) for all i at once via per-dimension recurrence tables.
    void evaluate_basis(std::span<const double> theta, std::span<double> psi) const {
        std::vector<double> phi(static_cast<std::size_t>(n) * (d + 1));
        for (int j = 0; j < n; ++j)
            bases[j].evaluate_all(theta[j], {phi.data() + j * (d + 1), static_cast<std::size_t>(d + 1)});
        for (int i = 0; i < index_set.size(); ++i) {
            double v = 1.0;
            const MultiIndex& mi = index_set.indices[i];
            for (int j = 0; j < n; ++j) v *= phi[j * (d + 1) + mi[j]];
            psi[i] = v;
        }
    }

    double evaluate(std::span<const double> theta) const {
        std::vector<double> psi(index_set.size());
        evaluate_basis(theta, psi);
        double acc = 0.0;
        for (int i = 0; i < index_set.size(); ++i) acc += coefficients[i] * psi[i];
        return acc;
    }
};

using ForwardMap = std::function<double(std::span<const double>)>;

struct ProjectionInfo {
    long long model_evaluations = 0;
    bool quadrature_underresolved = false;  // q < d+1
};

/// Quadrature projection c_i = sum_t eta(theta_t) psi_i(theta_t) w_t.
/// The model is evaluated exactly q^n times.
inline GpcExpansion project(const ForwardMap& model,
                            const std::vector<PolynomialFamily>& families, int d, int q,
                            ProjectionInfo* info = nullptr) {
    GpcExpansion exp;
    exp.n = static_cast<int>(families.size());
    exp.d = d;
    exp.families = families;
    exp.index_set = graded_basis_indices(exp.n, d);
    for (const auto& fam : families) exp.bases.push_back(UnivariateBasis::create(fam, d));
    exp.coefficients.assign(exp.basis_size(), 0.0);

    const TensorQuadrature quad = TensorQuadrature::create(families, q);
    if (info) {
        info->model_evaluations = 0;
        info->quadrature_underresolved = q < d + 1;
    }
    std::vector<double> psi(exp.basis_size());
    for (std::size_t t = 0; t < quad.node_count(); ++t) {
        const auto theta = quad.node(t);
        double y;
        try {
            y = model(theta);
        } catch (const TimeoutError&) {
            throw;
        } catch (const std::exception& e) {
            throw ModelEvaluationError(std::string("model evaluation failed: ") + e.what(),
                                       std::vector<double>(theta.begin(), theta.end()));
        }
        if (info) ++info->model_evaluations;
        exp.evaluate_basis(theta, psi);
        for (int i = 0; i < exp.basis_size(); ++i)
            exp.coefficients[i] += y * psi[i] * quad.weights[t];
    }
    return exp;
}

/// mu_1 = c_1 and mu_2 = sum c_i^2 for an orthonormal basis.
inline std::pair<double, double> low_order_moments(const GpcExpansion& exp) {
    double mu2 = 0.0;
    for (double c : exp.coefficients) mu2 += c * c;
    return {exp.coefficients[0], mu2};
}

/// Raw moment sequence mu_1..mu_M.
struct MomentVector {
    std::vector<double> raw;

    int order() const { return static_cast<int>(raw.size()); }
    double operator[](int m) const { return raw.at(m - 1); }

    void validate() const {
        if (raw.size() >= 2) {
            const double var = raw[1] - raw[0] * raw[0];
            if (var < -1e-9 * (1.0 + std::abs(raw[1])))
                throw std::invalid_argument("invalid raw-moment sequence: mu2 < mu1^2");
        }
    }
};

struct CentralMoments {
    double mean = 0.0;
    double variance = 0.0;
    std::vector<double> central;       // central[k-2] is the k-th central moment, k >= 2
    std::vector<double> standardized;  // skewness, kurtosis, ... (order >= 3)
};

inline CentralMoments raw_to_central_standardized(const MomentVector& moments) {
    moments.validate();
    const int M = moments.order();
    if (M < 2) throw std::invalid_argument("need at least two raw moments");
    CentralMoments out;
    out.mean = moments[1];
    const double mu1 = out.mean;
    for (int k = 2; k <= M; ++k) {
        double ck = 0.0;
        for (int j = 0; j <= k; ++j) {
            const double raw_j = (j == 0) ? 1.0 : moments[j];
            ck += binomial(k, j) * std::pow(-mu1, k - j) * raw_j;
        }
        out.central.push_back(ck);
    }
    out.variance = out.central[0];
    if (!(out.variance > 0.0))
        throw NumericError("degenerate distribution: non-positive variance");
    const double sd = std::sqrt(out.variance);
    for (int k = 3; k <= M; ++k)
        out.standardized.push_back(out.central[k - 2] / std::pow(sd, k));
    return out;
}

// ---------------------------------------------------------------------------
// High-order moments: compressed nonzero inner products a^(n,d,m)
// ---------------------------------------------------------------------------

inline std::string family_tag(const PolynomialFamily& fam) {
    std::ostringstream os;
    os << family_name(fam.kind);
    if (fam.kind == FamilyKind::Laguerre) os << ":" << fam.a;
    if (fam.kind == FamilyKind::Jacobi) os << ":" << fam.a << ":" << fam.b;
    return os.str();
}

inline PolynomialFamily family_from_tag(const std::string& tag) {
    std::istringstream is(tag);
    std::string name;
    std::getline(is, name, ':');
    PolynomialFamily fam;
    fam.kind = family_from_name(name);
    std::string part;
    if (std::getline(is, part, ':')) fam.a = std::stod(part);
    if (std::getline(is, part, ':')) fam.b = std::stod(part);
    return fam;
}

/// Nonzero coefficients a_i^(n,d,m) of the multinomial moment formula
/// mu_m = sum_i a_i prod_k c_k^(i_k), keyed by the multinomial power i over
/// the p basis slots. Entries are sorted by index for reproducible files.
struct InnerProductCache {
    inline static const std::string kOrdering = "graded-lexdesc-v1";

    int n = 0;
    int d = 0;
    int m = 0;
    std::vector<PolynomialFamily> families;
    double tolerance = 1e-12;
    std::vector<std::pair<MultiIndex, double>> entries;

    bool compatible_with(const GpcExpansion& exp) const {
        return exp.n == n && exp.d == d && exp.families == families;
    }

    static InnerProductCache build(int n, int d, int m,
                                   const std::vector<PolynomialFamily>& families, int workers = 1,
                                   double tolerance = 1e-12, int max_m = 5,
                                   double capacity_guard = 1e8);

    void save(const std::filesystem::path& path) const;
    static InnerProductCache load(const std::filesystem::path& path);
};

namespace detail {

struct CacheWorkTables {
    // phi[j][deg * q_u + t]: orthonormal phi_deg of dimension j at node t
    std::vector<std::vector<double>> phi;
    std::vector<std::vector<double>> w;
    int q_u = 0;
};

inline CacheWorkTables cache_tables(int d, int m, const std::vector<PolynomialFamily>& families) {
    CacheWorkTables tab;
    tab.q_u = (m * d + 2) / 2;  // exact for the degree m*d integrand
    if (tab.q_u < 1) tab.q_u = 1;
    for (const auto& fam : families) {
        const QuadratureRule rule = gauss_quadrature(fam, tab.q_u);
        const UnivariateBasis basis = UnivariateBasis::create(fam, d);
        std::vector<double> phi(static_cast<std::size_t>(d + 1) * tab.q_u);
        std::vector<double> col(d + 1);
        for (int t = 0; t < tab.q_u; ++t) {
            basis.evaluate_all(rule.nodes[t], col);
            for (int deg = 0; deg <= d; ++deg) phi[deg * tab.q_u + t] = col[deg];
        }
        tab.phi.push_back(std::move(phi));
        tab.w.push_back(rule.weights);
    }
    return tab;
}

/// a_i = multinomial(m, i) * prod_j <prod_k phi_(k(j))^(i_k)> for one power i.
inline double cache_coefficient(const MultiIndex& power, int m, const GradedIndexSet& index_set,
                                const CacheWorkTables& tab) {
    const int n = index_set.dim;
    const int q_u = tab.q_u;
    double a = static_cast<double>(multinomial_coefficient(m, power));
    for (int j = 0; j < n && a != 0.0; ++j) {
        double integral = 0.0;
        for (int t = 0; t < q_u; ++t) {
            double prod = tab.w[j][t];
            for (std::size_t k = 0; k < power.size(); ++k) {
                const int e = power[k];
                if (e == 0) continue;
                const double v = tab.phi[j][index_set.indices[k][j] * q_u + t];
                for (int r = 0; r < e; ++r) prod *= v;
            }
            integral += prod;
        }
        a *= integral;
    }
    return a;
}

}  // namespace detail

inline InnerProductCache InnerProductCache::build(int n, int d, int m,
                                                  const std::vector<PolynomialFamily>& families,
                                                  int workers, double tolerance, int max_m,
                                                  double capacity_guard) {
    if (m < 1 || m > max_m) throw std::invalid_argument("moment order outside the configured max");
    if (static_cast<int>(families.size()) != n)
        throw std::invalid_argument("family count must equal the dimension");
    InnerProductCache cache;
    cache.n = n;
    cache.d = d;
    cache.m = m;
    cache.families = families;
    cache.tolerance = tolerance;

    const GradedIndexSet index_set = graded_basis_indices(n, d);
    const int p = index_set.size();
    const double candidates = binomial(m + p - 1, m);
    if (candidates > capacity_guard)
        throw CapacityError("inner-product enumeration would exceed the capacity guard");

    const detail::CacheWorkTables tab = detail::cache_tables(d, m, families);
    workers = std::max(1, workers);

    // every worker runs the cheap enumeration and takes each W-th candidate
    std::vector<std::vector<std::pair<MultiIndex, double>>> partial(workers);
    auto run = [&](int w) {
        ConstantSumIterator it(m, p);
        long long ordinal = 0;
        for (auto idx = it.next(); idx; idx = it.next(), ++ordinal) {
            if (ordinal % workers != w) continue;
            const double a = detail::cache_coefficient(*idx, m, index_set, tab);
            const double zero_tol =
                tolerance * std::max(1.0, static_cast<double>(multinomial_coefficient(m, *idx)));
            if (std::abs(a) > zero_tol) partial[w].emplace_back(*idx, a);
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& t : pool) t.join();
    }
    for (auto& part : partial)
        cache.entries.insert(cache.entries.end(), std::make_move_iterator(part.begin()),
                             std::make_move_iterator(part.end()));
    std::sort(cache.entries.begin(), cache.entries.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    return cache;
}

inline void InnerProductCache::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write cache file: " + path.string());
    out << "GPCCACHE v1 n=" << n << " d=" << d << " m=" << m << " fam=";
    for (std::size_t j = 0; j < families.size(); ++j)
        out << (j ? "," : "") << family_tag(families[j]);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", tolerance);
    out << " tol=" << buf << "\n";
    for (const auto& [idx, a] : entries) {
        for (std::size_t k = 0; k < idx.size(); ++k) out << (k ? "," : "") << idx[k];
        std::snprintf(buf, sizeof buf, "%a", a);
        out << " " << buf << "\n";
    }
}

inline InnerProductCache InnerProductCache::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read cache file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("GPCCACHE v1 ", 0) != 0)
        throw IncompatibilityError("not a GPCCACHE v1 file: " + path.string());
    InnerProductCache cache;
    std::istringstream header(line.substr(12));
    std::string field;
    while (header >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "n") cache.n = std::stoi(value);
        else if (key == "d") cache.d = std::stoi(value);
        else if (key == "m") cache.m = std::stoi(value);
        else if (key == "tol") cache.tolerance = std::strtod(value.c_str(), nullptr);
        else if (key == "fam") {
            std::istringstream fams(value);
            std::string tag;
            while (std::getline(fams, tag, ',')) cache.families.push_back(family_from_tag(tag));
        }
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto space = line.find(' ');
        MultiIndex idx;
        std::istringstream digits(line.substr(0, space));
        std::string tok;
        while (std::getline(digits, tok, ',')) idx.push_back(std::stoi(tok));
        cache.entries.emplace_back(std::move(idx), std::strtod(line.c_str() + space + 1, nullptr));
    }
    return cache;
}

/// Raw moment E[Y^m] of the expansion from the compressed coefficients.
inline double high_order_moment(const GpcExpansion& exp, const InnerProductCache& cache, int m) {
    if (cache.m != m || !cache.compatible_with(exp))
        throw IncompatibilityError("inner-product cache does not match the expansion");
    double mu = 0.0;
    for (const auto& [idx, a] : cache.entries) {
        double term = a;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const int e = idx[k];
            for (int r = 0; r < e; ++r) term *= exp.coefficients[k];
        }
        mu += term;
    }
    return mu;
}

/// Canonical on-disk location for a cache, keyed by its header fields.
inline std::filesystem::path cache_path_for(const std::filesystem::path& dir, int n, int d, int m,
                                            const std::vector<PolynomialFamily>& families) {
    std::ostringstream name;
    name << "gpccache_n" << n << "_d" << d << "_m" << m;
    for (const auto& fam : families) name << "_" << family_tag(fam);
    name << ".txt";
    return dir / name.str();
}

/// Load a cache if a matching file exists, otherwise build and persist it.
inline InnerProductCache load_or_build_cache(const std::filesystem::path& dir, int n, int d, int m,
                                             const std::vector<PolynomialFamily>& families,
                                             int workers = 1) {
    const auto path = cache_path_for(dir, n, d, m, families);
    if (std::filesystem::exists(path)) {
        InnerProductCache cache = InnerProductCache::load(path);
        if (cache.n == n && cache.d == d && cache.m == m && cache.families == families)
            return cache;
        // fingerprint mismatch: fall through and rebuild
    }
    InnerProductCache cache = InnerProductCache::build(n, d, m, families, workers);
    std::filesystem::create_directories(dir);
    cache.save(path);
    return cache;
}

}  // namespace gpcmom
