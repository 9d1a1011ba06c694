#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "gpcmom/gpc.hpp"

using namespace gpcmom;

namespace {

// Naive raw moment E[Y^m] = sum over all m-tuples of basis indices of
// c_{i_1}...c_{i_m} <psi_{i_1}...psi_{i_m}>, the uncompressed nested sum.
// The multivariate inner product factorizes over dimensions; each univariate
// factor is integrated with a rule exact for the product degree.
double nested_sum_moment_oracle(const GpcExpansion& exp, int m) {
    const int p = exp.basis_size();
    const int n = exp.n;
    const int q_u = (m * exp.d) / 2 + 1;

    // phi[k][deg * q_u + t] for dimension k
    std::vector<std::vector<double>> phi(n);
    std::vector<std::vector<double>> w(n);
    for (int k = 0; k < n; ++k) {
        const auto rule = gauss_quadrature(exp.families[k], q_u);
        w[k] = rule.weights;
        phi[k].resize(static_cast<std::size_t>(exp.d + 1) * q_u);
        std::vector<double> col(exp.d + 1);
        for (int t = 0; t < q_u; ++t) {
            exp.bases[k].evaluate_all(rule.nodes[t], col);
            for (int deg = 0; deg <= exp.d; ++deg) phi[k][deg * q_u + t] = col[deg];
        }
    }

    auto inner = [&](const std::vector<int>& tuple) {
        double prod = 1.0;
        for (int k = 0; k < n; ++k) {
            double acc = 0.0;
            for (int t = 0; t < q_u; ++t) {
                double term = w[k][t];
                for (int j : tuple) term *= phi[k][exp.index_set.indices[j][k] * q_u + t];
                acc += term;
            }
            prod *= acc;
        }
        return prod;
    };

    double mu = 0.0;
    std::vector<int> tuple(m, 0);
    while (true) {
        double c = 1.0;
        for (int j : tuple) c *= exp.coefficients[j];
        mu += c * inner(tuple);
        int pos = m - 1;
        while (pos >= 0 && ++tuple[pos] == p) tuple[pos--] = 0;
        if (pos < 0) break;
    }
    return mu;
}

GpcExpansion random_expansion(int n, int d, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    GpcExpansion exp;
    exp.n = n;
    exp.d = d;
    exp.families.assign(n, PolynomialFamily::hermite());
    exp.index_set = graded_basis_indices(n, d);
    for (const auto& fam : exp.families) exp.bases.push_back(UnivariateBasis::create(fam, d));
    exp.coefficients.resize(exp.basis_size());
    for (double& c : exp.coefficients) c = unif(rng);
    return exp;
}

}  // namespace

TEST_CASE("tensor quadrature weights are products and sum to one") {
    std::vector<PolynomialFamily> fams{PolynomialFamily::hermite(), PolynomialFamily::legendre()};
    const auto quad = TensorQuadrature::create(fams, 3);
    REQUIRE(quad.node_count() == 9);
    double wsum = 0.0;
    for (std::size_t t = 0; t < quad.node_count(); ++t) wsum += quad.weights[t];
    CHECK(wsum == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("projection recovers an exact polynomial expansion") {
    // theta^2 = phi_0 + sqrt(2) phi_2 in the orthonormal Hermite basis
    std::vector<PolynomialFamily> fams{PolynomialFamily::hermite()};
    ProjectionInfo info;
    const auto exp = project([](std::span<const double> t) { return t[0] * t[0]; }, fams, 2, 3,
                             &info);
    REQUIRE(exp.basis_size() == 3);
    CHECK(info.model_evaluations == 3);
    CHECK(exp.coefficients[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(exp.coefficients[1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(exp.coefficients[2] == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));

    const auto [mu1, mu2] = low_order_moments(exp);
    CHECK(mu1 == Catch::Approx(1.0).margin(1e-12));
    CHECK(mu2 == Catch::Approx(3.0).epsilon(1e-12));  // E[theta^4]

    // the expansion reproduces the map
    CHECK(exp.evaluate(std::vector<double>{1.7}) == Catch::Approx(1.7 * 1.7).epsilon(1e-12));
}

TEST_CASE("projection evaluates the model exactly q^n times") {
    std::vector<PolynomialFamily> fams(2, PolynomialFamily::hermite());
    long long calls = 0;
    ProjectionInfo info;
    project([&](std::span<const double> t) { ++calls; return t[0] + t[1]; }, fams, 4, 5, &info);
    CHECK(calls == 25);
    CHECK(info.model_evaluations == 25);
    CHECK_FALSE(info.quadrature_underresolved);

    ProjectionInfo low;
    project([](std::span<const double> t) { return t[0]; }, fams, 4, 3, &low);
    CHECK(low.quadrature_underresolved);
}

TEST_CASE("model failures are wrapped with the offending node") {
    std::vector<PolynomialFamily> fams{PolynomialFamily::hermite()};
    try {
        project([](std::span<const double>) -> double { throw std::runtime_error("boom"); }, fams,
                2, 3);
        FAIL("expected ModelEvaluationError");
    } catch (const ModelEvaluationError& e) {
        CHECK(e.point.size() == 1);
    }
    CHECK_THROWS_AS(
        project([](std::span<const double>) -> double { throw TimeoutError("late"); }, fams, 2, 3),
        TimeoutError);
}

TEST_CASE("high-order moments equal the nested-sum oracle") {
    for (auto [n, d, m] : std::vector<std::array<int, 3>>{{1, 2, 3}, {2, 2, 3}, {2, 3, 4}}) {
        const auto exp = random_expansion(n, d, 1000u + n * 100 + d * 10 + m);
        const auto cache = InnerProductCache::build(n, d, m, exp.families);
        const double fast = high_order_moment(exp, cache, m);
        const double oracle = nested_sum_moment_oracle(exp, m);
        INFO("n=" << n << " d=" << d << " m=" << m);
        CHECK(std::abs(fast - oracle) <= 1e-9 * std::max(1.0, std::abs(oracle)));
    }
}

TEST_CASE("moment orders 1 and 2 from the cache agree with the closed forms") {
    const auto exp = random_expansion(2, 3, 77);
    const auto [mu1, mu2] = low_order_moments(exp);
    const auto c1 = InnerProductCache::build(2, 3, 1, exp.families);
    const auto c2 = InnerProductCache::build(2, 3, 2, exp.families);
    CHECK(high_order_moment(exp, c1, 1) == Catch::Approx(mu1).margin(1e-12));
    CHECK(high_order_moment(exp, c2, 2) == Catch::Approx(mu2).epsilon(1e-12));
}

TEST_CASE("cache build is independent of the worker count") {
    const auto one = InnerProductCache::build(2, 3, 4, std::vector<PolynomialFamily>(2, PolynomialFamily::hermite()), 1);
    const auto four = InnerProductCache::build(2, 3, 4, std::vector<PolynomialFamily>(2, PolynomialFamily::hermite()), 4);
    REQUIRE(one.entries.size() == four.entries.size());
    for (std::size_t i = 0; i < one.entries.size(); ++i) {
        CHECK(one.entries[i].first == four.entries[i].first);
        CHECK(one.entries[i].second == four.entries[i].second);  // bit identical
    }
}

TEST_CASE("cache file round trip is bit exact") {
    const auto cache = InnerProductCache::build(2, 2, 3, std::vector<PolynomialFamily>(2, PolynomialFamily::hermite()));
    const auto path = std::filesystem::temp_directory_path() / "gpcmom_cache_roundtrip.txt";
    cache.save(path);
    const auto loaded = InnerProductCache::load(path);
    CHECK(loaded.n == cache.n);
    CHECK(loaded.d == cache.d);
    CHECK(loaded.m == cache.m);
    CHECK(loaded.families == cache.families);
    REQUIRE(loaded.entries.size() == cache.entries.size());
    for (std::size_t i = 0; i < cache.entries.size(); ++i) {
        CHECK(loaded.entries[i].first == cache.entries[i].first);
        CHECK(loaded.entries[i].second == cache.entries[i].second);
    }
    std::filesystem::remove(path);
}

TEST_CASE("incompatible cache is rejected") {
    const auto exp = random_expansion(2, 3, 5);
    const auto cache = InnerProductCache::build(2, 2, 3, std::vector<PolynomialFamily>(2, PolynomialFamily::hermite()));
    CHECK_THROWS_AS(high_order_moment(exp, cache, 3), IncompatibilityError);
}

TEST_CASE("central and standardized moments") {
    // standard normal: raw (0, 1, 0, 3) -> variance 1, skewness 0, kurtosis 3
    MomentVector mv;
    mv.raw = {0.0, 1.0, 0.0, 3.0};
    const auto cm = raw_to_central_standardized(mv);
    CHECK(cm.mean == 0.0);
    CHECK(cm.variance == Catch::Approx(1.0));
    CHECK(cm.standardized[0] == Catch::Approx(0.0).margin(1e-14));
    CHECK(cm.standardized[1] == Catch::Approx(3.0).epsilon(1e-14));

    MomentVector bad;
    bad.raw = {2.0, 1.0};  // mu2 < mu1^2
    CHECK_THROWS_AS(raw_to_central_standardized(bad), std::invalid_argument);
}
