// Command-line front end: propagation demos, cache building, density fitting,
// clutch simulation, synthetic data generation, identification, benchmarking.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpcmom/mle.hpp"
#include "gpcmom/numerics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gpcmom;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fnv1a_hex(const std::string& bytes) {
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json load_json(const fs::path& path) { return json::parse(read_file(path)); }

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << text;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path cand(p);
    return cand.is_absolute() ? cand : base / cand;
}

fs::path cache_directory(const json& io, const fs::path& base) {
    if (const char* env = std::getenv("GPCMOM_CACHE_DIR")) return fs::path(env);
    if (io.contains("cache_dir")) return resolve(base, io["cache_dir"].get<std::string>());
    return {};
}

InputProbabilityModel alpha_from_json(const json& j) {
    InputProbabilityModel alpha;
    alpha.mean = j.at("mean").get<std::vector<double>>();
    alpha.stddev = j.at("stddev").get<std::vector<double>>();
    const double inf = std::numeric_limits<double>::infinity();
    alpha.lower = j.value("lower", std::vector<double>(alpha.mean.size(), -inf));
    alpha.upper = j.value("upper", std::vector<double>(alpha.mean.size(), inf));
    alpha.validate();
    return alpha;
}

json alpha_to_json(const InputProbabilityModel& alpha) {
    return {{"mean", alpha.mean},
            {"stddev", alpha.stddev},
            {"lower", alpha.lower},
            {"upper", alpha.upper}};
}

std::unique_ptr<ForwardModel> make_model(const std::string& name, const json& model_cfg,
                                         const fs::path& base) {
    if (name == "camelback") return std::make_unique<CamelbackScalarModel>();
    if (name == "camelback-study") return std::make_unique<CamelbackStudyModel>();
    if (name == "clutch") {
        WetClutchParams params;
        if (model_cfg.contains("params"))
            params = load_clutch_params(resolve(base, model_cfg["params"].get<std::string>()).string());
        return std::make_unique<WetClutchModel>(params);
    }
    throw std::invalid_argument("unknown model: " + name);
}

PropagationMethod method_from_name(const std::string& name, int M, long long S, unsigned seed) {
    if (name == "gpc-gauss") return PropagationMethod::gpc_gaussian();
    if (name == "gpc-maxent") return PropagationMethod::gpc_maxent(M);
    if (name == "mc") return PropagationMethod::mc(S, seed);
    if (name == "qmc") return PropagationMethod::qmc(S);
    throw std::invalid_argument("unknown method: " + name);
}

std::string csv_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------

int run_propagate(const std::string& config_path, int workers) {
    const std::string config_text = read_file(config_path);
    const json cfg = json::parse(config_text);
    const fs::path base = fs::path(config_path).parent_path();

    const json& model_cfg = cfg.at("model");
    const std::string model_name = model_cfg.value("name", "camelback");
    const auto model = make_model(model_name, model_cfg, base);
    const InputProbabilityModel alpha = alpha_from_json(model_cfg.at("alpha"));
    const int n = model->input_dim();
    if (alpha.dim() != n) throw std::invalid_argument("alpha dimension does not match the model");

    const json gpc_cfg = cfg.value("gpc", json::object());
    const int d = gpc_cfg.value("d", 4);
    const int q = gpc_cfg.value("q", d + 1);
    const int M = cfg.value("density", json::object()).value("moments", 4);

    const json io = cfg.value("io", json::object());
    const fs::path out_dir = resolve(base, io.value("out_dir", "out"));
    fs::create_directories(out_dir);
    const long long ref_samples = io.value("mc_reference_samples", 200000LL);
    const unsigned ref_seed = io.value("mc_seed", 2024u);

    ExperimentConfig exp_cfg;
    if (model_cfg.contains("experiment")) {
        const json& e = model_cfg["experiment"];
        exp_cfg.id = e.value("l", 1);
        exp_cfg.dt_s = e.value("dt_s", exp_cfg.dt_s);
        exp_cfg.u0_A = e.value("u0_A", exp_cfg.u0_A);
        exp_cfg.du_A = e.value("du_A", exp_cfg.du_A);
        exp_cfg.omega_m_rpm = e.value("omega_m_rpm", exp_cfg.omega_m_rpm);
        exp_cfg.load = load_from_name(e.value("load", "low"));
    }

    // projection
    double ymin = 1e308, ymax = -1e308;
    ForwardMap eta = [&](std::span<const double> theta) {
        const double y = model->evaluate(exp_cfg, to_physical(theta, alpha));
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        return y;
    };
    std::vector<PolynomialFamily> families(n, PolynomialFamily::hermite());
    ProjectionInfo info;
    const GpcExpansion exp = project(eta, families, d, q, &info);

    {
        std::ostringstream os;
        os << "index,degree,coefficient\n";
        for (int i = 0; i < exp.index_set.size(); ++i) {
            int deg = 0;
            for (int e : exp.index_set.indices[i]) deg += e;
            os << i << ',' << deg << ',' << csv_double(exp.coefficients[i]) << '\n';
        }
        write_text(out_dir / "coefficients.csv", os.str());
    }

    // moments, with the integration oracle when the input is univariate
    const fs::path cache_dir = cache_directory(io, base);
    MomentVector mv;
    const auto [mu1, mu2] = low_order_moments(exp);
    mv.raw = {mu1, mu2};
    for (int m = 3; m <= M; ++m) {
        const InnerProductCache cache =
            cache_dir.empty() ? InnerProductCache::build(n, d, m, families, workers)
                              : load_or_build_cache(cache_dir, n, d, m, families, workers);
        mv.raw.push_back(high_order_moment(exp, cache, m));
    }

    std::vector<double> oracle;
    if (n == 1) {
        for (int m = 1; m <= M; ++m) {
            auto integrand = [&](double t) {
                const double y = model->evaluate(exp_cfg, to_physical(std::vector<double>{t}, alpha));
                return std::pow(y, m) * std_normal_pdf(t);
            };
            oracle.push_back(integrate_adaptive(integrand, -10.0, 10.0, 1e-12));
        }
    }
    {
        std::ostringstream os;
        os << "order,gpc" << (oracle.empty() ? "" : ",oracle,rel_error") << '\n';
        for (int m = 1; m <= M; ++m) {
            os << m << ',' << csv_double(mv[m]);
            if (!oracle.empty()) {
                const double rel =
                    std::abs(mv[m] - oracle[m - 1]) / std::max(1e-300, std::abs(oracle[m - 1]));
                os << ',' << csv_double(oracle[m - 1]) << ',' << csv_double(rel);
            }
            os << '\n';
        }
        write_text(out_dir / "moments.csv", os.str());
    }

    // density fits; a constant-only expansion degenerates to a point mass
    const double var = mv[2] - mv[1] * mv[1];
    GaussianDensity gauss;
    bool degenerate = !(var > 0.0);
    if (degenerate)
        gauss = {mv[1], 1e-9 * (1.0 + std::abs(mv[1]))};
    else
        gauss = fit_gaussian(mv);

    std::optional<MaxEntDensity> maxent;
    std::string maxent_note;
    if (!degenerate && M >= 2) {
        const double sd = std::sqrt(var);
        const double c = 0.5 * (ymin + ymax), w = std::max(0.5 * (ymax - ymin), 1e-12);
        const double lo = std::max(mv[1] - 10.0 * sd, c - 1.2 * w);
        const double hi = std::min(mv[1] + 10.0 * sd, c + 1.2 * w);
        try {
            maxent = fit_maxent(mv, lo, hi);
        } catch (const FitError& e) {
            maxent_note = e.what();
        }
    }

    const double lo = degenerate ? mv[1] - 1.0 : gauss.mean - 8.0 * gauss.sigma;
    const double hi = degenerate ? mv[1] + 1.0 : gauss.mean + 8.0 * gauss.sigma;
    {
        std::ostringstream os;
        os << "y,gaussian" << (maxent ? ",maxent" : "") << '\n';
        const int grid = 512;
        for (int i = 0; i <= grid; ++i) {
            const double y = lo + (hi - lo) * i / grid;
            os << csv_double(y) << ',' << csv_double(gauss.pdf(y));
            if (maxent) os << ',' << csv_double(maxent->pdf(y));
            os << '\n';
        }
        write_text(out_dir / "density.csv", os.str());
    }

    json summary = {{"version", kVersion},
                    {"config_hash", fnv1a_hex(config_text)},
                    {"model", model_name},
                    {"d", d},
                    {"q", q},
                    {"M", M},
                    {"model_evaluations", info.model_evaluations},
                    {"moments", mv.raw},
                    {"degenerate", degenerate}};

    // seeded sampling reference and EMD scores
    if (!degenerate && ref_samples >= 100) {
        const SampledDensity ref = mc_propagate(*model, exp_cfg, alpha, ref_samples, ref_seed);
        const double elo = std::min(lo, (ref.histogram ? ref.histogram->lower() : ref.mean - 8.0 * ref.sd));
        const double ehi = std::max(hi, (ref.histogram ? ref.histogram->upper() : ref.mean + 8.0 * ref.sd));
        auto ref_pdf = [&](double y) { return ref.pdf(y); };
        const double emd_gauss =
            emd_density([&](double y) { return gauss.pdf(y); }, ref_pdf, elo, ehi);
        summary["emd_gaussian"] = emd_gauss;
        if (maxent) {
            const double emd_me =
                emd_density([&](double y) { return maxent->pdf(y); }, ref_pdf, elo, ehi);
            summary["emd_maxent"] = emd_me;
        }
        summary["mc_reference_samples"] = ref_samples;
        summary["mc_seed"] = ref_seed;
    }
    if (!maxent_note.empty()) summary["maxent_fallback"] = maxent_note;

    write_text(out_dir / "summary.json", summary.dump(2) + "\n");
    std::cout << summary.dump(2) << std::endl;
    return 0;
}

int run_cache_build(int n, int d, int m, const std::string& family, const std::string& out,
                    int workers) {
    std::vector<PolynomialFamily> families;
    for (std::istringstream is(family); !is.eof();) {
        std::string tag;
        std::getline(is, tag, ',');
        families.push_back(family_from_tag(tag));
    }
    if (static_cast<int>(families.size()) == 1 && n > 1)
        families.assign(n, families.front());
    if (static_cast<int>(families.size()) != n)
        throw std::invalid_argument("family list length must be 1 or n");
    const InnerProductCache cache = InnerProductCache::build(n, d, m, families, workers);
    fs::path path(out);
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    cache.save(path);
    std::cout << "entries=" << cache.entries.size() << " file=" << out << std::endl;
    return 0;
}

int run_fit_density(const std::string& moments_path, const std::string& out_dir_s) {
    const json j = load_json(moments_path);
    MomentVector mv;
    mv.raw = j.at("moments").get<std::vector<double>>();
    const double sd = std::sqrt(std::max(1e-300, mv[2] - mv[1] * mv[1]));
    const double lower = j.value("lower", mv[1] - 10.0 * sd);
    const double upper = j.value("upper", mv[1] + 10.0 * sd);
    const MaxEntDensity density = fit_maxent(mv, lower, upper);

    const fs::path out_dir(out_dir_s);
    fs::create_directories(out_dir);
    json lam = {{"lambda", density.lambda},
                {"shift", density.shift},
                {"scale", density.scale},
                {"lower", density.lower},
                {"upper", density.upper}};
    write_text(out_dir / "lambda.json", lam.dump(2) + "\n");

    std::ostringstream os;
    os << "y,pdf\n";
    const int grid = 512;
    for (int i = 0; i <= grid; ++i) {
        const double y = lower + (upper - lower) * i / grid;
        os << csv_double(y) << ',' << csv_double(density.pdf(y)) << '\n';
    }
    write_text(out_dir / "pdf.csv", os.str());
    std::cout << lam.dump(2) << std::endl;
    return 0;
}

int run_simulate_clutch(const std::string& params_path, double dt, double u0, double du,
                        double omega, const std::string& load, double x1, double x2,
                        const std::string& out) {
    WetClutchParams params;
    if (!params_path.empty()) params = load_clutch_params(params_path);
    ExperimentConfig cfg;
    cfg.id = 1;
    cfg.dt_s = dt;
    cfg.u0_A = u0;
    cfg.du_A = du;
    cfg.omega_m_rpm = omega;
    cfg.load = load_from_name(load);
    const EngagementResult result = simulate_engagement(cfg, params, x1, x2, true);

    std::ostringstream os;
    os << "t,p_hc,z,omega1,omega2,Tc,u\n";
    for (const auto& s : result.trace.samples)
        os << csv_double(s.t) << ',' << csv_double(s.p_hc) << ',' << csv_double(s.z) << ','
           << csv_double(s.omega1) << ',' << csv_double(s.omega2) << ',' << csv_double(s.Tc)
           << ',' << csv_double(s.u) << '\n';
    write_text(out, os.str());
    std::cout << "shifting_time_s=" << csv_double(result.shifting_time_s) << std::endl;
    return 0;
}

int run_gen_synthetic(const std::string& model_name, const std::string& alpha_path, int count,
                      unsigned seed, const std::string& out_csv, const std::string& out_truth) {
    const json alpha_json = load_json(alpha_path);
    const InputProbabilityModel alpha = alpha_from_json(alpha_json);
    const auto model = make_model(model_name, json::object(), fs::current_path());
    const ExperimentSet set = gen_synthetic(*model, alpha, count, seed);
    set.save_csv(out_csv);
    json truth = {{"version", kVersion},
                  {"model", model_name},
                  {"seed", seed},
                  {"count", count},
                  {"alpha_true", alpha_to_json(alpha)}};
    write_text(out_truth, truth.dump(2) + "\n");
    std::cout << truth.dump(2) << std::endl;
    return 0;
}

int run_identify(const std::string& experiments_path, const std::string& model_name,
                 const std::string& method_name, int d, int q, int M, long long S, int pop,
                 int gens, unsigned seed, const std::string& bounds_path, const std::string& out,
                 int workers) {
    const ExperimentSet experiments = ExperimentSet::load_csv(experiments_path);
    const auto model = make_model(model_name, json::object(), fs::current_path());
    const json jb = load_json(bounds_path);
    AlphaBounds bounds;
    bounds.mean_lower = jb.at("mean_lower").get<std::vector<double>>();
    bounds.mean_upper = jb.at("mean_upper").get<std::vector<double>>();
    bounds.sigma_lower = jb.at("sigma_lower").get<std::vector<double>>();
    bounds.sigma_upper = jb.at("sigma_upper").get<std::vector<double>>();
    const double inf = std::numeric_limits<double>::infinity();
    bounds.clip_lower = jb.value("clip_lower", std::vector<double>(bounds.mean_lower.size(), -inf));
    bounds.clip_upper = jb.value("clip_upper", std::vector<double>(bounds.mean_lower.size(), inf));

    const PropagationMethod method = method_from_name(method_name, M, S, seed);
    DeConfig optimizer;
    optimizer.population = pop;
    optimizer.generations = gens;
    optimizer.seed = seed;
    optimizer.workers = workers;
    GpcSettings gpc;
    gpc.d = d;
    gpc.q = q > 0 ? q : d + 1;
    gpc.workers = workers;
    if (const char* env = std::getenv("GPCMOM_CACHE_DIR")) gpc.cache_dir = env;

    const IdentificationResult result =
        identify(*model, experiments, bounds, method, optimizer, gpc);
    json summary = {{"version", kVersion},
                    {"model", model_name},
                    {"method", method.name()},
                    {"seed", seed},
                    {"alpha", alpha_to_json(result.alpha)},
                    {"log_likelihood", result.log_likelihood},
                    {"best_so_far", result.best_so_far},
                    {"per_experiment", result.per_experiment},
                    {"likelihood_evaluations", result.likelihood_evaluations},
                    {"model_evaluations", result.model_evaluations},
                    {"converged", result.converged}};
    write_text(out, summary.dump(2) + "\n");
    std::cout << summary.dump(2) << std::endl;
    return 0;
}

int run_benchmark(const std::string& experiments_path, const std::string& model_name,
                  const std::string& alpha_path, const std::string& samples_arg, int d, int q,
                  int M, long long ref_samples, unsigned seed, const std::string& out_csv,
                  const std::string& out_dat) {
    const ExperimentSet experiments = ExperimentSet::load_csv(experiments_path);
    const auto model = make_model(model_name, json::object(), fs::current_path());
    const InputProbabilityModel alpha = alpha_from_json(load_json(alpha_path));

    std::vector<long long> counts;
    for (std::istringstream is(samples_arg); !is.eof();) {
        std::string tok;
        std::getline(is, tok, ',');
        if (!tok.empty()) counts.push_back(std::stoll(tok));
    }
    if (counts.empty()) throw std::invalid_argument("no sample counts given");

    GpcSettings gpc;
    gpc.d = d;
    gpc.q = q > 0 ? q : d + 1;
    if (const char* env = std::getenv("GPCMOM_CACHE_DIR")) gpc.cache_dir = env;

    const LikelihoodResult reference = log_likelihood(
        *model, experiments, alpha, PropagationMethod::mc(ref_samples, seed), gpc);
    const BenchmarkTable table =
        benchmark_mae(*model, experiments, alpha, PropagationMethod::gpc_maxent(M), counts,
                      reference.per_experiment, seed + 1, gpc);

    std::ostringstream csv;
    csv << "method,samples,mae\n";
    for (const auto& row : table.rows)
        csv << row.method << ',' << row.samples << ',' << csv_double(row.mae) << '\n';
    write_text(out_csv, csv.str());

    std::ostringstream dat;
    dat << "# samples mc_mae qmc_mae gpc_mae\n";
    for (long long S : counts) {
        double mc = 0.0, qmc = 0.0;
        for (const auto& row : table.rows) {
            if (row.samples != S) continue;
            if (row.method == "mc") mc = row.mae;
            if (row.method == "qmc") qmc = row.mae;
        }
        dat << S << ' ' << csv_double(mc) << ' ' << csv_double(qmc) << ' '
            << csv_double(table.gpc_mae) << '\n';
    }
    write_text(out_dat, dat.str());

    // an infinite match point means the curve never reached the gPC MAE
    auto match_field = [](double s) {
        return std::isfinite(s) ? json(s) : json("unreached");
    };
    json summary = {{"version", kVersion},
                    {"gpc_mae", table.gpc_mae},
                    {"gpc_evaluations", table.gpc_evaluations},
                    {"s_mc_match", match_field(table.s_mc_match)},
                    {"s_qmc_match", match_field(table.s_qmc_match)}};
    std::cout << summary.dump(2) << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"uncertainty propagation and identification toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // propagate
    auto* propagate = app.add_subcommand("propagate", "run one propagation demo from a config");
    std::string prop_config;
    int prop_workers = 1;
    propagate->add_option("--config", prop_config, "JSON run configuration")->required();
    propagate->add_option("--workers", prop_workers, "worker threads");

    // cache-build
    auto* cache_build = app.add_subcommand("cache-build", "precompute a high-order moment cache");
    int cb_n = 2, cb_d = 4, cb_m = 3, cb_workers = 1;
    std::string cb_family = "hermite", cb_out;
    cache_build->add_option("--n", cb_n, "input dimension")->required();
    cache_build->add_option("--d", cb_d, "expansion degree")->required();
    cache_build->add_option("--m", cb_m, "moment order")->required();
    cache_build->add_option("--family", cb_family, "family tag(s), comma separated");
    cache_build->add_option("--out", cb_out, "output file")->required();
    cache_build->add_option("--workers", cb_workers, "worker threads");

    // fit-density
    auto* fit_density = app.add_subcommand("fit-density", "moment-matched density from a JSON moment vector");
    std::string fd_moments, fd_out = "out";
    fit_density->add_option("--moments", fd_moments, "JSON with moments/lower/upper")->required();
    fit_density->add_option("--out", fd_out, "output directory");

    // simulate-clutch
    auto* sim = app.add_subcommand("simulate-clutch", "one engagement simulation, trace as CSV");
    std::string sc_params, sc_load = "low", sc_out = "trace.csv";
    double sc_dt = 0.25, sc_u0 = 0.75, sc_du = 0.20, sc_omega = 1200.0, sc_x1 = 1.0, sc_x2 = 1.0;
    sim->add_option("--params", sc_params, "JSON parameter file");
    sim->add_option("--dt", sc_dt, "initial pulse duration [s]");
    sim->add_option("--u0", sc_u0, "post-pulse current [A]");
    sim->add_option("--du", sc_du, "second pulse height [A]");
    sim->add_option("--omega", sc_omega, "motor speed [rpm]");
    sim->add_option("--load", sc_load, "load level: low|high");
    sim->add_option("--x1", sc_x1, "bulk modulus scaler");
    sim->add_option("--x2", sc_x2, "friction scaler");
    sim->add_option("--out", sc_out, "trace CSV path");

    // gen-synthetic
    auto* gen = app.add_subcommand("gen-synthetic", "draw a synthetic experiment set");
    std::string gs_model = "camelback-study", gs_alpha, gs_csv = "experiments.csv",
                gs_truth = "truth.json";
    int gs_count = 20;
    unsigned gs_seed = 1;
    gen->add_option("--model", gs_model, "forward model");
    gen->add_option("--alpha", gs_alpha, "ground-truth input model JSON")->required();
    gen->add_option("--count", gs_count, "number of experiments");
    gen->add_option("--seed", gs_seed, "RNG seed");
    gen->add_option("--out", gs_csv, "experiments CSV path");
    gen->add_option("--truth", gs_truth, "ground-truth JSON path");

    // identify
    auto* ident = app.add_subcommand("identify", "maximum-likelihood input model identification");
    std::string id_experiments, id_model = "camelback-study", id_method = "gpc-maxent", id_bounds,
                id_out = "identified.json";
    int id_d = 4, id_q = 0, id_M = 4, id_pop = 50, id_gens = 60, id_workers = 1;
    long long id_S = 10000;
    unsigned id_seed = 1;
    ident->add_option("--experiments", id_experiments, "experiments CSV")->required();
    ident->add_option("--model", id_model, "forward model");
    ident->add_option("--method", id_method, "gpc-gauss|gpc-maxent|mc|qmc");
    ident->add_option("--d", id_d, "expansion degree");
    ident->add_option("--q", id_q, "quadrature order (default d+1)");
    ident->add_option("--M", id_M, "moment order for the density fit");
    ident->add_option("--S", id_S, "sample count for mc/qmc");
    ident->add_option("--pop", id_pop, "optimizer population");
    ident->add_option("--gens", id_gens, "optimizer generations");
    ident->add_option("--seed", id_seed, "optimizer seed");
    ident->add_option("--bounds", id_bounds, "alpha bounds JSON")->required();
    ident->add_option("--out", id_out, "result JSON path");
    ident->add_option("--workers", id_workers, "worker threads");

    // benchmark
    auto* bench = app.add_subcommand("benchmark", "logL MAE of methods vs the MC reference");
    std::string bm_experiments, bm_model = "camelback-study", bm_alpha,
                bm_samples = "25,100,400,1600", bm_csv = "benchmark.csv", bm_dat = "benchmark.dat";
    int bm_d = 4, bm_q = 0, bm_M = 4;
    long long bm_ref = 200000;
    unsigned bm_seed = 2024;
    bench->add_option("--experiments", bm_experiments, "experiments CSV")->required();
    bench->add_option("--model", bm_model, "forward model");
    bench->add_option("--alpha", bm_alpha, "input model JSON")->required();
    bench->add_option("--samples", bm_samples, "sample counts, comma separated");
    bench->add_option("--d", bm_d, "expansion degree");
    bench->add_option("--q", bm_q, "quadrature order (default d+1)");
    bench->add_option("--M", bm_M, "moment order");
    bench->add_option("--ref-samples", bm_ref, "MC reference sample count");
    bench->add_option("--seed", bm_seed, "reference/MC seed");
    bench->add_option("--out", bm_csv, "MAE table CSV path");
    bench->add_option("--dat", bm_dat, "gnuplot-ready data path");

    try {
        app.parse(argc, argv);
        if (*propagate) return run_propagate(prop_config, prop_workers);
        if (*cache_build) return run_cache_build(cb_n, cb_d, cb_m, cb_family, cb_out, cb_workers);
        if (*fit_density) return run_fit_density(fd_moments, fd_out);
        if (*sim)
            return run_simulate_clutch(sc_params, sc_dt, sc_u0, sc_du, sc_omega, sc_load, sc_x1,
                                       sc_x2, sc_out);
        if (*gen) return run_gen_synthetic(gs_model, gs_alpha, gs_count, gs_seed, gs_csv, gs_truth);
        if (*ident)
            return run_identify(id_experiments, id_model, id_method, id_d, id_q, id_M, id_S,
                                id_pop, id_gens, id_seed, id_bounds, id_out, id_workers);
        if (*bench)
            return run_benchmark(bm_experiments, bm_model, bm_alpha, bm_samples, bm_d, bm_q, bm_M,
                                 bm_ref, bm_seed, bm_csv, bm_dat);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << std::endl;
        return 1;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << std::endl;
        return 1;
    } catch (const TimeoutError& e) {
        std::cerr << "timeout: " << e.what() << std::endl;
        return 1;
    } catch (const ModelEvaluationError& e) {
        std::cerr << "model evaluation error: " << e.what() << std::endl;
        return 1;
    } catch (const CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << std::endl;
        return 1;
    } catch (const IncompatibilityError& e) {
        std::cerr << "incompatibility: " << e.what() << std::endl;
        return 1;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "config error: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
