#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "gpcmom/density.hpp"

using namespace gpcmom;

namespace {

// Transportation LP solved by successive shortest paths on the bipartite
// flow network; independent of the CDF-sweep implementation under test.
double transport_lp_oracle(const Signature& p, const Signature& q) {
    const int np = static_cast<int>(p.points.size());
    const int nq = static_cast<int>(q.points.size());
    double tp = 0.0, tq = 0.0;
    for (double m : p.masses) tp += m;
    for (double m : q.masses) tq += m;

    const int source = 0, sink = np + nq + 1, V = np + nq + 2;
    struct Edge {
        int to;
        double cap, cost;
        int rev;
    };
    std::vector<std::vector<Edge>> g(V);
    auto add_edge = [&](int u, int v, double cap, double cost) {
        g[u].push_back({v, cap, cost, static_cast<int>(g[v].size())});
        g[v].push_back({u, 0.0, -cost, static_cast<int>(g[u].size()) - 1});
    };
    for (int i = 0; i < np; ++i) add_edge(source, 1 + i, p.masses[i] / tp, 0.0);
    for (int j = 0; j < nq; ++j) add_edge(1 + np + j, sink, q.masses[j] / tq, 0.0);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nq; ++j)
            add_edge(1 + i, 1 + np + j, 2.0, std::abs(p.points[i] - q.points[j]));

    double total_cost = 0.0, flow = 0.0;
    while (flow < 1.0 - 1e-12) {
        // Bellman-Ford shortest path in the residual graph
        std::vector<double> dist(V, 1e308);
        std::vector<int> pv(V, -1), pe(V, -1);
        dist[source] = 0.0;
        for (int it = 0; it < V; ++it) {
            bool changed = false;
            for (int u = 0; u < V; ++u) {
                if (dist[u] >= 1e307) continue;
                for (int e = 0; e < static_cast<int>(g[u].size()); ++e) {
                    const Edge& ed = g[u][e];
                    if (ed.cap > 1e-15 && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
                        dist[ed.to] = dist[u] + ed.cost;
                        pv[ed.to] = u;
                        pe[ed.to] = e;
                        changed = true;
                    }
                }
            }
            if (!changed) break;
        }
        if (pv[sink] < 0) break;
        double push = 1.0 - flow;
        for (int v = sink; v != source; v = pv[v]) push = std::min(push, g[pv[v]][pe[v]].cap);
        for (int v = sink; v != source; v = pv[v]) {
            Edge& ed = g[pv[v]][pe[v]];
            ed.cap -= push;
            g[v][ed.rev].cap += push;
            total_cost += push * ed.cost;
        }
        flow += push;
    }
    return total_cost;
}

Signature random_signature(std::mt19937& rng, int max_points) {
    std::uniform_int_distribution<int> size(1, max_points);
    std::uniform_real_distribution<double> point(-5.0, 5.0);
    std::uniform_real_distribution<double> mass(0.1, 2.0);
    Signature s;
    const int k = size(rng);
    for (int i = 0; i < k; ++i) {
        s.points.push_back(point(rng));
        s.masses.push_back(mass(rng));
    }
    return s;
}

}  // namespace

TEST_CASE("gaussian fit from raw moments") {
    MomentVector mv;
    mv.raw = {2.0, 5.0};  // variance 1
    const auto g = fit_gaussian(mv);
    CHECK(g.mean == Catch::Approx(2.0));
    CHECK(g.sigma == Catch::Approx(1.0));
    CHECK(g.log_pdf(2.0) == Catch::Approx(std::log(g.pdf(2.0))).epsilon(1e-12));

    MomentVector degenerate;
    degenerate.raw = {1.0, 1.0};
    CHECK_THROWS_AS(fit_gaussian(degenerate), NumericError);
}

TEST_CASE("maxent with two moments reproduces the normal density") {
    MomentVector mv;
    mv.raw = {0.0, 1.0};
    const auto d = fit_maxent(mv, -8.0, 8.0);
    double sup = 0.0;
    for (double y = -6.0; y <= 6.0; y += 0.01)
        sup = std::max(sup, std::abs(d.pdf(y) - std_normal_pdf(y)));
    CHECK(sup < 1e-4);
}

TEST_CASE("maxent reproduces four skewed target moments") {
    // raw moments of a mildly skewed density
    MomentVector mv;
    mv.raw = {0.3, 1.2, 0.9, 4.0};
    const auto d = fit_maxent(mv, -7.0, 9.0);

    // integrate the fitted density's moments with composite Simpson
    const int N = 40000;
    std::vector<double> got(5, 0.0);
    const double h = (d.upper - d.lower) / N;
    for (int i = 0; i <= N; ++i) {
        const double y = d.lower + i * h;
        const double w = (i == 0 || i == N) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        double term = w * d.pdf(y);
        for (int k = 0; k <= 4; ++k) {
            got[k] += term;
            term *= y;
        }
    }
    for (double& v : got) v *= h / 3.0;
    CHECK(got[0] == Catch::Approx(1.0).epsilon(1e-6));

    const double sd = std::sqrt(mv[2] - mv[1] * mv[1]);
    for (int m = 1; m <= 4; ++m) {
        // standardized residual, the fit's own convergence measure
        const double resid = (got[m] - mv[m]) / std::pow(sd, m);
        INFO("m=" << m);
        CHECK(std::abs(resid) < 1e-5);
    }
}

TEST_CASE("maxent argument guards") {
    MomentVector mv;
    mv.raw = {0.0, 1.0};
    CHECK_THROWS_AS(fit_maxent(mv, 3.0, -3.0), std::invalid_argument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(fit_maxent(mv, -inf, inf), std::invalid_argument);
    MomentVector too_many;
    too_many.raw = {0.0, 1.0, 0.0, 3.0, 0.0, 15.0};
    CHECK_THROWS_AS(fit_maxent(too_many, -8.0, 8.0), std::invalid_argument);
}

TEST_CASE("discrete EMD on hand-checked signatures") {
    Signature a{{0.0}, {1.0}};
    Signature b{{1.0}, {1.0}};
    CHECK(emd_discrete(a, b) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(emd_discrete(a, a) == Catch::Approx(0.0).margin(1e-15));

    // half the mass moves by 2: EMD = 1
    Signature c{{0.0, 2.0}, {1.0, 1.0}};
    Signature d{{0.0}, {1.0}};
    CHECK(emd_discrete(c, d) == Catch::Approx(1.0).epsilon(1e-12));

    // mass normalization: scaling all masses changes nothing
    Signature c2{{0.0, 2.0}, {5.0, 5.0}};
    CHECK(emd_discrete(c2, d) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("discrete EMD equals the transportation LP oracle") {
    std::mt19937 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const Signature p = random_signature(rng, 6);
        const Signature q = random_signature(rng, 6);
        const double fast = emd_discrete(p, q);
        const double lp = transport_lp_oracle(p, q);
        INFO("trial " << trial);
        CHECK(std::abs(fast - lp) < 1e-8);
    }
}

TEST_CASE("discrete EMD satisfies the metric axioms") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Signature a = random_signature(rng, 5);
        const Signature b = random_signature(rng, 5);
        const Signature c = random_signature(rng, 5);
        const double ab = emd_discrete(a, b);
        const double ba = emd_discrete(b, a);
        const double ac = emd_discrete(a, c);
        const double cb = emd_discrete(c, b);
        CHECK(ab >= 0.0);
        CHECK(ab == Catch::Approx(ba).margin(1e-12));
        CHECK(ab <= ac + cb + 1e-10);
        CHECK(emd_discrete(a, a) < 1e-12);
    }
}

TEST_CASE("density EMD of two shifted gaussians equals the shift") {
    const GaussianDensity g1{0.0, 1.0};
    const GaussianDensity g2{0.75, 1.0};
    const double d = emd_density([&](double y) { return g1.pdf(y); },
                                 [&](double y) { return g2.pdf(y); }, -10.0, 11.0, 4096);
    CHECK(d == Catch::Approx(0.75).epsilon(1e-3));
}

TEST_CASE("histogram density approximates the sampling distribution") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(1.0, 2.0);
    std::vector<double> samples;
    for (int i = 0; i < 50000; ++i) samples.push_back(normal(rng));
    const HistogramDensity h(std::move(samples));

    // normalized and close to the generating pdf near the mode
    double mass = 0.0;
    const int N = 4000;
    const double lo = h.lower(), hi = h.upper(), step = (hi - lo) / N;
    for (int i = 0; i < N; ++i) mass += h.pdf(lo + (i + 0.5) * step) * step;
    CHECK(mass == Catch::Approx(1.0).epsilon(1e-2));
    for (double y : {-1.0, 0.0, 1.0, 2.0, 3.0}) {
        const double exact = std_normal_pdf((y - 1.0) / 2.0) / 2.0;
        CHECK(h.pdf(y) == Catch::Approx(exact).margin(0.012));
    }
    // log-density decays outside the observed support instead of hitting -inf
    CHECK(std::isfinite(h.log_pdf(hi + 5.0)));
    CHECK(h.log_pdf(hi + 5.0) < h.log_pdf(0.5 * (lo + hi)));
}

TEST_CASE("histogram density input guards") {
    CHECK_THROWS_AS(HistogramDensity(std::vector<double>(10, 1.0)), std::invalid_argument);
    std::vector<double> constant(500, 3.0);
    CHECK_THROWS_AS(HistogramDensity(std::move(constant)), NumericError);
}
