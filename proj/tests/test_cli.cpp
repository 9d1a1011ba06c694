#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("GPCMOM_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path sandbox() {
    const auto dir = fs::temp_directory_path() / "gpcmom_cli_test";
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("") == 2);
    CHECK(run("no-such-subcommand") == 2);
    CHECK(run("propagate --config /nonexistent/run.json") == 2);
    CHECK(run("identify --experiments /nonexistent.csv --bounds /nonexistent.json") == 2);
}

TEST_CASE("cache-build writes a loadable cache file") {
    const auto dir = sandbox();
    const auto out = dir / "cache.txt";
    CHECK(run("cache-build --n 2 --d 3 --m 3 --family hermite --out " + out.string()) == 0);
    REQUIRE(fs::exists(out));
    CHECK(first_line(out).rfind("GPCCACHE v1", 0) == 0);
}

TEST_CASE("simulate-clutch emits the documented trace header") {
    const auto dir = sandbox();
    const auto out = dir / "trace.csv";
    CHECK(run("simulate-clutch --out " + out.string()) == 0);
    REQUIRE(fs::exists(out));
    CHECK(first_line(out) == "t,p_hc,z,omega1,omega2,Tc,u");
    CHECK(run("simulate-clutch --load sideways --out " + out.string()) == 2);
}

TEST_CASE("fit-density writes lambda and a pdf curve") {
    const auto dir = sandbox();
    const auto moments = dir / "moments.json";
    write(moments, R"({"moments": [0.0, 1.0, 0.0, 3.0], "lower": -8.0, "upper": 8.0})");
    CHECK(run("fit-density --moments " + moments.string() + " --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "lambda.json"));
    CHECK(first_line(dir / "pdf.csv") == "y,pdf");
}

TEST_CASE("propagate produces the camelback artifact set") {
    const auto dir = sandbox();
    const auto out_dir = dir / "prop";
    const auto config = dir / "run.json";
    std::ostringstream cfg;
    cfg << R"({
  "model": {"name": "camelback",
            "alpha": {"mean": [0.8], "stddev": [0.6], "lower": [-5.5], "upper": [5.5]}},
  "gpc": {"d": 6, "q": 7},
  "density": {"moments": 4},
  "io": {"out_dir": ")" << out_dir.string() << R"(", "mc_reference_samples": 20000, "mc_seed": 7}
})";
    write(config, cfg.str());
    CHECK(run("propagate --config " + config.string()) == 0);
    CHECK(fs::exists(out_dir / "coefficients.csv"));
    CHECK(fs::exists(out_dir / "moments.csv"));
    CHECK(fs::exists(out_dir / "density.csv"));
    REQUIRE(fs::exists(out_dir / "summary.json"));
    std::ifstream summary(out_dir / "summary.json");
    std::stringstream body;
    body << summary.rdbuf();
    CHECK(body.str().find("emd_maxent") != std::string::npos);
    CHECK(body.str().find("config_hash") != std::string::npos);
}

TEST_CASE("propagate completes with a constant-only expansion") {
    const auto dir = sandbox();
    const auto out_dir = dir / "prop0";
    const auto config = dir / "run0.json";
    std::ostringstream cfg;
    cfg << R"({
  "model": {"name": "camelback", "alpha": {"mean": [0.5], "stddev": [0.4]}},
  "gpc": {"d": 0, "q": 1},
  "density": {"moments": 2},
  "io": {"out_dir": ")" << out_dir.string() << R"(", "mc_reference_samples": 0}
})";
    write(config, cfg.str());
    CHECK(run("propagate --config " + config.string()) == 0);
    std::ifstream summary(out_dir / "summary.json");
    std::stringstream body;
    body << summary.rdbuf();
    CHECK(body.str().find("\"degenerate\": true") != std::string::npos);
}

TEST_CASE("gen-synthetic, identify, benchmark run end to end") {
    const auto dir = sandbox();
    const auto alpha = dir / "alpha.json";
    write(alpha, R"({"mean": [0.9, 0.5], "stddev": [0.08, 0.05],
                    "lower": [-3.0, -3.0], "upper": [3.0, 3.0]})");
    const auto csv = dir / "experiments.csv";
    const auto truth = dir / "truth.json";
    CHECK(run("gen-synthetic --model camelback-study --alpha " + alpha.string() +
              " --count 6 --seed 5 --out " + csv.string() + " --truth " + truth.string()) == 0);
    REQUIRE(fs::exists(csv));
    CHECK(first_line(csv) == "l,dt_s,u0_A,du_A,omega_m_rpm,load,y_s");
    CHECK(fs::exists(truth));

    const auto bounds = dir / "bounds.json";
    write(bounds, R"({"mean_lower": [0.5, 0.1], "mean_upper": [1.3, 0.9],
                     "sigma_lower": [0.02, 0.02], "sigma_upper": [0.3, 0.3],
                     "clip_lower": [-3.0, -3.0], "clip_upper": [3.0, 3.0]})");
    const auto identified = dir / "identified.json";
    CHECK(run("identify --experiments " + csv.string() + " --model camelback-study" +
              " --method gpc-gauss --d 2 --pop 8 --gens 2 --seed 1 --bounds " + bounds.string() +
              " --out " + identified.string()) == 0);
    CHECK(fs::exists(identified));

    const auto bench_csv = dir / "bench.csv";
    const auto bench_dat = dir / "bench.dat";
    CHECK(run("benchmark --experiments " + csv.string() + " --model camelback-study --alpha " +
              alpha.string() + " --samples 100 --d 2 --M 2 --ref-samples 1000 --out " +
              bench_csv.string() + " --dat " + bench_dat.string()) == 0);
    REQUIRE(fs::exists(bench_csv));
    CHECK(first_line(bench_csv) == "method,samples,mae");
    CHECK(fs::exists(bench_dat));
}
