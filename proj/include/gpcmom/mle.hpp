#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "gpcmom/density.hpp"
#include "gpcmom/errors.hpp"
#include "gpcmom/gpc.hpp"
#include "gpcmom/models.hpp"
#include "gpcmom/optimize.hpp"
#include "gpcmom/transform.hpp"

namespace gpcmom {

struct Experiment {
    ExperimentConfig config;
    double observed = 0.0;  // y_l
};

struct ExperimentSet {
    std::vector<Experiment> records;

    void validate() const {
        std::vector<int> ids;
        for (const auto& r : records) {
            if (!std::isfinite(r.observed)) throw std::invalid_argument("non-finite outcome");
            ids.push_back(r.config.id);
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw std::invalid_argument("experiment ids must be unique");
    }

    static ExperimentSet load_csv(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read experiments file: " + path.string());
        ExperimentSet set;
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string field;
            Experiment e;
            std::getline(row, field, ',');
            e.config.id = std::stoi(field);
            std::getline(row, field, ',');
            e.config.dt_s = std::stod(field);
            std::getline(row, field, ',');
            e.config.u0_A = std::stod(field);
            std::getline(row, field, ',');
            e.config.du_A = std::stod(field);
            std::getline(row, field, ',');
            e.config.omega_m_rpm = std::stod(field);
            std::getline(row, field, ',');
            e.config.load = load_from_name(field);
            std::getline(row, field, ',');
            e.observed = std::stod(field);
            set.records.push_back(e);
        }
        set.validate();
        return set;
    }

    void save_csv(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write experiments file: " + path.string());
        out << "l,dt_s,u0_A,du_A,omega_m_rpm,load,y_s\n";
        out.precision(17);
        for (const auto& r : records)
            out << r.config.id << ',' << r.config.dt_s << ',' << r.config.u0_A << ','
                << r.config.du_A << ',' << r.config.omega_m_rpm << ','
                << load_name(r.config.load) << ',' << r.observed << '\n';
    }
};

/// Propagation backend for one likelihood evaluation.
struct PropagationMethod {
    enum class Kind { GpcGaussian, GpcMaxEnt, Mc, Qmc };
    Kind kind = Kind::GpcMaxEnt;
    int moments = 4;        // M for the maxent fit
    long long samples = 0;  // S for mc / qmc
    unsigned seed = 0;      // mc only

    static PropagationMethod gpc_gaussian() { return {Kind::GpcGaussian, 2, 0, 0}; }
    static PropagationMethod gpc_maxent(int M = 4) {
        if (M < 2 || M > 5) throw std::invalid_argument("maxent moment order must be in 2..5");
        return {Kind::GpcMaxEnt, M, 0, 0};
    }
    static PropagationMethod mc(long long S, unsigned seed) {
        if (S < 2) throw std::invalid_argument("sampling methods need S >= 2");
        return {Kind::Mc, 0, S, seed};
    }
    static PropagationMethod qmc(long long S) {
        if (S < 2) throw std::invalid_argument("sampling methods need S >= 2");
        return {Kind::Qmc, 0, S, 0};
    }

    bool is_gpc() const { return kind == Kind::GpcGaussian || kind == Kind::GpcMaxEnt; }

    std::string name() const {
        switch (kind) {
            case Kind::GpcGaussian: return "gpc-gauss";
            case Kind::GpcMaxEnt: return "gpc-maxent";
            case Kind::Mc: return "mc";
            case Kind::Qmc: return "qmc";
        }
        return "?";
    }
};

struct GpcSettings {
    int d = 4;
    int q = 5;  // defaults to d+1
    std::filesystem::path cache_dir;  // empty: build caches in memory only
    int workers = 1;
};

/// Caches for m = 3..M, built once per (n, d, M) and shared by every
/// likelihood evaluation; this is the offline step.
struct MomentWorkspace {
    int n = 0, d = 0, M = 2;
    std::vector<PolynomialFamily> families;
    std::vector<InnerProductCache> caches;  // order m = 3..M

    static MomentWorkspace prepare(int n, const GpcSettings& gpc, int M) {
        MomentWorkspace ws;
        ws.n = n;
        ws.d = gpc.d;
        ws.M = M;
        ws.families.assign(n, PolynomialFamily::hermite());
        for (int m = 3; m <= M; ++m) {
            if (gpc.cache_dir.empty())
                ws.caches.push_back(
                    InnerProductCache::build(n, gpc.d, m, ws.families, gpc.workers));
            else
                ws.caches.push_back(
                    load_or_build_cache(gpc.cache_dir, n, gpc.d, m, ws.families, gpc.workers));
        }
        return ws;
    }
};

struct LikelihoodResult {
    double total = 0.0;
    std::vector<double> per_experiment;  // aligned with the record order
    long long model_evaluations = 0;
    int density_fallbacks = 0;  // maxent fits replaced by a Gaussian
    int timeouts = 0;           // experiments assigned the penalty likelihood
};

namespace detail {

constexpr double kTimeoutPenaltyLogL = -1e4;

/// Moments mu_1..mu_M of one projected experiment.
inline MomentVector expansion_moments(const GpcExpansion& exp, const MomentWorkspace& ws, int M) {
    MomentVector mv;
    const auto [mu1, mu2] = low_order_moments(exp);
    mv.raw = {mu1, mu2};
    for (int m = 3; m <= M; ++m)
        mv.raw.push_back(high_order_moment(exp, ws.caches[m - 3], m));
    return mv;
}

/// Support window for the maxent fit: the 10-sigma moment window intersected
/// with the 20%-inflated range of model values seen at the quadrature nodes.
inline std::pair<double, double> maxent_support(const MomentVector& mv, double ymin, double ymax) {
    const double mu = mv[1];
    const double sd = std::sqrt(std::max(1e-300, mv[2] - mv[1] * mv[1]));
    double lo = mu - 10.0 * sd, hi = mu + 10.0 * sd;
    const double c = 0.5 * (ymin + ymax), w = 0.5 * (ymax - ymin);
    const double rlo = c - 1.2 * w, rhi = c + 1.2 * w;
    lo = std::max(lo, rlo);
    hi = std::min(hi, rhi);
    if (!(hi - lo > 1e-12)) {
        lo = mu - 10.0 * sd;
        hi = mu + 10.0 * sd;
    }
    return {lo, hi};
}

}  // namespace detail

/// Density estimate from one batch of propagated samples. Large batches get
/// the smoothed histogram; below the histogram minimum a Gaussian moment fit
/// of the samples stands in.
struct SampledDensity {
    std::optional<HistogramDensity> histogram;
    GaussianDensity gauss;
    double mean = 0.0;
    double sd = 0.0;
    long long model_evaluations = 0;

    double pdf(double y) const { return histogram ? histogram->pdf(y) : gauss.pdf(y); }
    double log_pdf(double y) const { return histogram ? histogram->log_pdf(y) : gauss.log_pdf(y); }
};

namespace detail {

inline SampledDensity density_from_samples(std::vector<double> samples) {
    SampledDensity out;
    out.model_evaluations = static_cast<long long>(samples.size());
    const double S = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= S;
    double sq = 0.0;
    for (double v : samples) sq += (v - mean) * (v - mean);
    out.mean = mean;
    out.sd = std::sqrt(sq / S);
    if (!(out.sd > 0.0)) throw NumericError("degenerate sample set: zero spread");
    out.gauss = {out.mean, out.sd};
    if (samples.size() >= 100) out.histogram = HistogramDensity(std::move(samples));
    return out;
}

}  // namespace detail

/// Standard-normal Monte Carlo propagation of one experiment: S seeded draws
/// through the clipped-normal transform and the model.
inline SampledDensity mc_propagate(const ForwardModel& model, const ExperimentConfig& cfg,
                                   const InputProbabilityModel& alpha, long long S, unsigned seed) {
    if (S < 2) throw std::invalid_argument("sampling methods need S >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = alpha.dim();
    std::vector<double> theta(n), samples;
    samples.reserve(S);
    for (long long s = 0; s < S; ++s) {
        for (int j = 0; j < n; ++j) theta[j] = normal(rng);
        samples.push_back(model.evaluate(cfg, to_physical(theta, alpha)));
    }
    return detail::density_from_samples(std::move(samples));
}

/// Deterministic equal-probability grid: per-dimension midpoint quantiles
/// Phi^-1((j - 1/2) / k), tensorized. S must be a k^n grid.
inline SampledDensity qmc_propagate(const ForwardModel& model, const ExperimentConfig& cfg,
                                    const InputProbabilityModel& alpha, long long S) {
    const int n = alpha.dim();
    const long long k = std::llround(std::pow(static_cast<double>(S), 1.0 / n));
    long long check = 1;
    for (int j = 0; j < n; ++j) check *= k;
    if (check != S) throw std::invalid_argument("qmc sample count must be a per-dimension grid k^n");

    std::vector<double> quantiles(k);
    for (long long j = 0; j < k; ++j)
        quantiles[j] = std_normal_quantile((j + 0.5) / static_cast<double>(k));

    std::vector<double> theta(n), samples;
    samples.reserve(S);
    std::vector<long long> digit(n, 0);
    for (long long s = 0; s < S; ++s) {
        for (int j = 0; j < n; ++j) theta[j] = quantiles[digit[j]];
        samples.push_back(model.evaluate(cfg, to_physical(theta, alpha)));
        for (int j = n - 1; j >= 0; --j) {
            if (++digit[j] < k) break;
            digit[j] = 0;
        }
    }
    return detail::density_from_samples(std::move(samples));
}

/// log L(alpha) = sum_l log f_{Y_l}(y_l | alpha). The gPC path is fully
/// deterministic and costs exactly q^n model calls per experiment.
inline LikelihoodResult log_likelihood(const ForwardModel& model, const ExperimentSet& experiments,
                                       const InputProbabilityModel& alpha,
                                       const PropagationMethod& method, const GpcSettings& gpc = {},
                                       const MomentWorkspace* workspace = nullptr) {
    experiments.validate();
    alpha.validate();
    const int n = model.input_dim();
    if (alpha.dim() != n) throw std::invalid_argument("input model dimension mismatch");

    std::optional<MomentWorkspace> local;
    const int M = method.is_gpc() ? std::max(2, method.moments) : 2;
    if (method.is_gpc() && !workspace) {
        local = MomentWorkspace::prepare(n, gpc, M);
        workspace = &*local;
    }

    LikelihoodResult result;
    result.per_experiment.resize(experiments.records.size(), 0.0);
    std::vector<std::pair<int, double>> by_id;

    for (std::size_t r = 0; r < experiments.records.size(); ++r) {
        const Experiment& e = experiments.records[r];
        double ll = 0.0;
        try {
            if (method.is_gpc()) {
                double ymin = 1e308, ymax = -1e308;
                ForwardMap eta = [&](std::span<const double> theta) {
                    const double y = model.evaluate(e.config, to_physical(theta, alpha));
                    ymin = std::min(ymin, y);
                    ymax = std::max(ymax, y);
                    return y;
                };
                ProjectionInfo info;
                const GpcExpansion exp =
                    project(eta, workspace->families, gpc.d, gpc.q, &info);
                result.model_evaluations += info.model_evaluations;
                const MomentVector mv = detail::expansion_moments(exp, *workspace, M);
                if (method.kind == PropagationMethod::Kind::GpcGaussian) {
                    ll = fit_gaussian(mv).log_pdf(e.observed);
                } else {
                    const auto [lo, hi] = detail::maxent_support(mv, ymin, ymax);
                    try {
                        ll = fit_maxent(mv, lo, hi).log_pdf(e.observed);
                    } catch (const FitError&) {
                        ++result.density_fallbacks;
                        ll = fit_gaussian(mv).log_pdf(e.observed);
                    }
                }
            } else if (method.kind == PropagationMethod::Kind::Mc) {
                const unsigned seed =
                    method.seed + 0x9e3779b9u * static_cast<unsigned>(e.config.id);
                const SampledDensity d = mc_propagate(model, e.config, alpha, method.samples, seed);
                result.model_evaluations += d.model_evaluations;
                ll = d.log_pdf(e.observed);
            } else {
                const SampledDensity d = qmc_propagate(model, e.config, alpha, method.samples);
                result.model_evaluations += d.model_evaluations;
                ll = d.log_pdf(e.observed);
            }
        } catch (const TimeoutError&) {
            ++result.timeouts;
            ll = detail::kTimeoutPenaltyLogL;
        } catch (const ModelEvaluationError&) {
            ++result.timeouts;
            ll = detail::kTimeoutPenaltyLogL;
        }
        result.per_experiment[r] = ll;
        by_id.emplace_back(e.config.id, ll);
    }
    // summation order fixed by experiment id, for permutation invariance
    std::sort(by_id.begin(), by_id.end());
    for (const auto& [id, ll] : by_id) result.total += ll;
    return result;
}

// ---------------------------------------------------------------------------
// Identification
// ---------------------------------------------------------------------------

/// Box bounds on the mean/sigma entries of the input probability model; the
/// clip bounds of the physical variables stay fixed during the search.
struct AlphaBounds {
    std::vector<double> mean_lower, mean_upper;
    std::vector<double> sigma_lower, sigma_upper;
    std::vector<double> clip_lower, clip_upper;

    int dim() const { return static_cast<int>(mean_lower.size()); }

    void validate() const {
        const std::size_t n = mean_lower.size();
        if (mean_upper.size() != n || sigma_lower.size() != n || sigma_upper.size() != n ||
            clip_lower.size() != n || clip_upper.size() != n)
            throw std::invalid_argument("alpha bound field lengths disagree");
        for (std::size_t j = 0; j < n; ++j)
            if (!(sigma_lower[j] > 0.0))
                throw std::invalid_argument("sigma lower bounds must be > 0");
    }

    InputProbabilityModel make(std::span<const double> v) const {
        const int n = dim();
        InputProbabilityModel alpha;
        alpha.mean.assign(v.begin(), v.begin() + n);
        alpha.stddev.assign(v.begin() + n, v.begin() + 2 * n);
        alpha.lower = clip_lower;
        alpha.upper = clip_upper;
        return alpha;
    }
};

struct IdentificationResult {
    InputProbabilityModel alpha;
    double log_likelihood = 0.0;
    std::vector<double> best_so_far;
    std::vector<double> per_experiment;  // logL_l at alpha*
    long long likelihood_evaluations = 0;
    long long model_evaluations = 0;
    bool converged = false;
};

inline IdentificationResult identify(const ForwardModel& model, const ExperimentSet& experiments,
                                     const AlphaBounds& bounds, const PropagationMethod& method,
                                     const DeConfig& optimizer, const GpcSettings& gpc = {}) {
    bounds.validate();
    const int n = bounds.dim();
    if (n != model.input_dim()) throw std::invalid_argument("bounds dimension mismatch");

    std::optional<MomentWorkspace> workspace;
    if (method.is_gpc())
        workspace = MomentWorkspace::prepare(n, gpc, std::max(2, method.moments));

    std::atomic<long long> model_evals{0};
    auto objective = [&](std::span<const double> v) {
        const InputProbabilityModel alpha = bounds.make(v);
        const LikelihoodResult ll = log_likelihood(model, experiments, alpha, method, gpc,
                                                   workspace ? &*workspace : nullptr);
        model_evals += ll.model_evaluations;
        return ll.total;
    };

    std::vector<double> lower, upper;
    lower.insert(lower.end(), bounds.mean_lower.begin(), bounds.mean_lower.end());
    lower.insert(lower.end(), bounds.sigma_lower.begin(), bounds.sigma_lower.end());
    upper.insert(upper.end(), bounds.mean_upper.begin(), bounds.mean_upper.end());
    upper.insert(upper.end(), bounds.sigma_upper.begin(), bounds.sigma_upper.end());

    DeConfig cfg = optimizer;
    if (!model.pure()) cfg.workers = 1;
    const DeResult de = de_maximize(objective, lower, upper, cfg);

    IdentificationResult out;
    out.alpha = bounds.make(de.best);
    out.log_likelihood = de.best_value;
    out.best_so_far = de.best_so_far;
    out.likelihood_evaluations = de.evaluations;
    out.model_evaluations = model_evals.load();
    out.converged = de.converged;
    out.per_experiment = log_likelihood(model, experiments, out.alpha, method, gpc,
                                        workspace ? &*workspace : nullptr)
                             .per_experiment;
    return out;
}

/// Deterministic point fit min_x sum (y_l - Y(l,x))^2, run with the same
/// population optimizer; comparison baseline only.
struct LeastSquaresResult {
    std::vector<double> x;
    double sse = 0.0;
    double implied_log_likelihood = 0.0;  // unit-variance Gaussian reading
};

inline LeastSquaresResult least_squares_baseline(const ForwardModel& model,
                                                 const ExperimentSet& experiments,
                                                 std::span<const double> lower,
                                                 std::span<const double> upper,
                                                 const DeConfig& optimizer) {
    experiments.validate();
    auto objective = [&](std::span<const double> x) {
        double sse = 0.0;
        for (const auto& e : experiments.records) {
            double y;
            try {
                y = model.evaluate(e.config, x);
            } catch (const std::exception&) {
                return -1e12;
            }
            sse += (e.observed - y) * (e.observed - y);
        }
        return -sse;
    };
    const DeResult de = de_maximize(objective, lower, upper, optimizer);
    LeastSquaresResult out;
    out.x = de.best;
    out.sse = -de.best_value;
    const double n = static_cast<double>(experiments.records.size());
    out.implied_log_likelihood = -0.5 * out.sse - 0.918938533204672742 * n;
    return out;
}

// ---------------------------------------------------------------------------
// Benchmarking against the MC reference
// ---------------------------------------------------------------------------

struct BenchmarkRow {
    std::string method;
    long long samples = 0;  // model evaluations per experiment
    double mae = 0.0;
};

struct BenchmarkTable {
    std::vector<BenchmarkRow> rows;
    double gpc_mae = 0.0;          // MAE of the gPC method under test
    long long gpc_evaluations = 0; // q^n
    double s_mc_match = 0.0;       // interpolated S where MC reaches the gPC MAE
    double s_qmc_match = 0.0;
};

namespace detail {

/// Log-log interpolation of the S at which a decreasing MAE curve crosses
/// the target; +infinity when even the largest tested S stays above it.
inline double interpolate_matching_samples(const std::vector<std::pair<long long, double>>& curve,
                                           double target) {
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve[i].second <= target) {
            if (i == 0) return static_cast<double>(curve[0].first);
            const double x0 = std::log(static_cast<double>(curve[i - 1].first));
            const double x1 = std::log(static_cast<double>(curve[i].first));
            const double y0 = std::log(std::max(curve[i - 1].second, 1e-300));
            const double y1 = std::log(std::max(curve[i].second, 1e-300));
            const double yt = std::log(std::max(target, 1e-300));
            const double t = (yt - y0) / std::min(-1e-300, y1 - y0);
            return std::exp(x0 + std::clamp(t, 0.0, 1.0) * (x1 - x0));
        }
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Per-experiment logL MAE of each method against the stored MC reference.
inline BenchmarkTable benchmark_mae(const ForwardModel& model, const ExperimentSet& experiments,
                                    const InputProbabilityModel& alpha,
                                    const PropagationMethod& gpc_method,
                                    const std::vector<long long>& sample_counts,
                                    const std::vector<double>& reference_per_experiment,
                                    unsigned mc_seed, const GpcSettings& gpc = {}) {
    auto mae_of = [&](const std::vector<double>& per) {
        double acc = 0.0;
        for (std::size_t i = 0; i < per.size(); ++i)
            acc += std::abs(per[i] - reference_per_experiment[i]);
        return acc / static_cast<double>(per.size());
    };

    BenchmarkTable table;
    const LikelihoodResult g = log_likelihood(model, experiments, alpha, gpc_method, gpc);
    table.gpc_mae = mae_of(g.per_experiment);
    table.gpc_evaluations = g.model_evaluations / static_cast<long long>(experiments.records.size());
    table.rows.push_back({gpc_method.name(), table.gpc_evaluations, table.gpc_mae});

    std::vector<std::pair<long long, double>> mc_curve, qmc_curve;
    for (long long S : sample_counts) {
        const LikelihoodResult mc =
            log_likelihood(model, experiments, alpha, PropagationMethod::mc(S, mc_seed), gpc);
        const double mc_mae = mae_of(mc.per_experiment);
        table.rows.push_back({"mc", S, mc_mae});
        mc_curve.emplace_back(S, mc_mae);

        const LikelihoodResult qmc =
            log_likelihood(model, experiments, alpha, PropagationMethod::qmc(S), gpc);
        const double qmc_mae = mae_of(qmc.per_experiment);
        table.rows.push_back({"qmc", S, qmc_mae});
        qmc_curve.emplace_back(S, qmc_mae);
    }
    table.s_mc_match = detail::interpolate_matching_samples(mc_curve, table.gpc_mae);
    table.s_qmc_match = detail::interpolate_matching_samples(qmc_curve, table.gpc_mae);
    return table;
}

// ---------------------------------------------------------------------------
// Synthetic experiment generation
// ---------------------------------------------------------------------------

/// Draw one observed outcome per experiment from the stated ground truth.
inline ExperimentSet gen_synthetic(const ForwardModel& model, const InputProbabilityModel& alpha,
                                   int count, unsigned seed,
                                   const std::vector<ExperimentConfig>* configs = nullptr) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = alpha.dim();
    ExperimentSet set;
    for (int l = 1; l <= count; ++l) {
        Experiment e;
        if (configs) {
            e.config = configs->at((l - 1) % configs->size());
            e.config.id = l;
        } else {
            e.config.id = l;
            // plausible factorial-style spread of the control settings
            e.config.dt_s = 0.20 + 0.05 * (l % 3);
            e.config.u0_A = 0.70 + 0.05 * ((l / 3) % 3);
            e.config.du_A = 0.15 + 0.10 * ((l / 9) % 2);
            e.config.omega_m_rpm = 1200.0 + 150.0 * (l % 3);
            e.config.load = (l % 2 == 0) ? LoadLevel::High : LoadLevel::Low;
        }
        std::vector<double> theta(n);
        for (int j = 0; j < n; ++j) theta[j] = normal(rng);
        e.observed = model.evaluate(e.config, to_physical(theta, alpha));
        set.records.push_back(e);
    }
    return set;
}

}  // namespace gpcmom
