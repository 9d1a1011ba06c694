#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "gpcmom/models.hpp"

using namespace gpcmom;

TEST_CASE("camelback values and domain guard") {
    CHECK(camelback(0.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(camelback(3.0) ==
          Catch::Approx(std::tan(0.75) + 1.0 + std::tanh(3.0)).epsilon(1e-15));
    CHECK(camelback(-6.0) == Catch::Approx(std::tan(-1.5) + std::exp(-3.0) + std::tanh(-6.0))
                                 .epsilon(1e-14));
    CHECK_THROWS_AS(camelback(6.5), std::domain_error);
    CHECK_THROWS_AS(camelback(std::nan("")), std::domain_error);
}

TEST_CASE("feedforward profile matches the frozen reference table") {
    ExperimentConfig cfg;  // dt=0.25, u0=0.75, du=0.20
    // (t, u) pairs on the plateaus and flanks of the default profile
    const std::vector<std::pair<double, double>> golden = {
        {0.0, 1.0},     {0.10, 1.0},    {0.25, 1.0},     {0.251, 0.75},
        {0.30, 0.75},   {0.351, 0.75},  {0.352, 0.95},   {0.40, 0.95},
        {0.502, 0.95},  {0.702, 0.85},  {0.902, 0.75},   {1.0, 0.75},
        {1.202, 0.75},  {1.203, 1.0},   {2.0, 1.0},
    };
    for (const auto& [t, u] : golden) {
        INFO("t=" << t);
        CHECK(feedforward_current(t, cfg) == Catch::Approx(u).margin(1e-12));
    }
    CHECK_THROWS_AS(feedforward_current(-0.1, cfg), std::invalid_argument);
}

TEST_CASE("feedforward profile is continuous with a matching analytic rate") {
    ExperimentConfig cfg;
    cfg.dt_s = 0.3;
    cfg.u0_A = 0.7;
    cfg.du_A = 0.25;
    for (double t = 1e-4; t < 2.0; t += 1e-3) {
        const double jump = std::abs(feedforward_current(t + 1e-9, cfg) -
                                     feedforward_current(t, cfg));
        CHECK(jump < 1e-5);  // ramps cap the slope at (u_max-u0)/ramp_s
    }
    // central difference vs the analytic rate away from breakpoints
    for (double t : {0.1, 0.5, 0.75, 1.1, 1.8}) {
        const double h = 1e-7;
        const double fd =
            (feedforward_current(t + h, cfg) - feedforward_current(t - h, cfg)) / (2.0 * h);
        CHECK(feedforward_current_rate(t, cfg) == Catch::Approx(fd).margin(1e-5));
    }
}

TEST_CASE("clutch parameter JSON round trip") {
    WetClutchParams p;
    p.a1 = -750.0;
    p.z_p = 0.0065;
    p.torque_ratio = {1.9, -1.1, 0.15};
    nlohmann::json j = p;
    const WetClutchParams back = j;
    CHECK(back.a1 == p.a1);
    CHECK(back.z_p == p.z_p);
    CHECK(back.torque_ratio.c1 == p.torque_ratio.c1);
    CHECK(back.step_s == p.step_s);

    const auto path = std::filesystem::temp_directory_path() / "gpcmom_clutch_params.json";
    std::ofstream(path) << j.dump(2);
    const WetClutchParams loaded = load_clutch_params(path.string());
    CHECK(loaded.a1 == p.a1);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_clutch_params("/nonexistent/params.json"), std::runtime_error);
}

TEST_CASE("engagement simulation produces the frozen shifting time") {
    ExperimentConfig cfg;
    cfg.id = 1;
    WetClutchParams prm;
    const auto r = simulate_engagement(cfg, prm, 1.0, 1.0);
    CHECK(r.shifting_time_s == Catch::Approx(0.545193).margin(5e-5));
}

TEST_CASE("shifting time is stable under step halving") {
    ExperimentConfig cfg;
    WetClutchParams prm;
    WetClutchParams fine = prm;
    fine.step_s = prm.step_s / 2.0;
    const double t1 = simulate_engagement(cfg, prm, 1.0, 1.0).shifting_time_s;
    const double t2 = simulate_engagement(cfg, fine, 1.0, 1.0).shifting_time_s;
    CHECK(std::abs(t1 - t2) < 1e-4);
}

TEST_CASE("shifting time responds monotonically to the uncertainty scalers") {
    ExperimentConfig cfg;
    WetClutchParams prm;
    double prev = 0.0;
    for (double x1 : {0.7, 1.0, 1.3}) {
        const double ts = simulate_engagement(cfg, prm, x1, 1.0).shifting_time_s;
        CHECK(ts > prev);
        prev = ts;
    }
    prev = 0.0;
    for (double x2 : {0.85, 1.0, 1.15, 1.3}) {
        const double ts = simulate_engagement(cfg, prm, 1.0, x2).shifting_time_s;
        CHECK(ts > prev);
        prev = ts;
    }
}

TEST_CASE("higher load brakes the output shaft harder") {
    ExperimentConfig low;
    ExperimentConfig high = low;
    high.load = LoadLevel::High;
    WetClutchParams prm;
    CHECK(simulate_engagement(high, prm, 1.0, 1.0).shifting_time_s >
          simulate_engagement(low, prm, 1.0, 1.0).shifting_time_s);
}

TEST_CASE("a torque-free clutch never synchronizes") {
    ExperimentConfig cfg;
    WetClutchParams dead;
    dead.couette_gamma = 0.0;
    dead.plate_alpha = 0.0;
    CHECK_THROWS_AS(simulate_engagement(cfg, dead, 1.0, 1.0), TimeoutError);
}

TEST_CASE("scaled kiss point must stay below full engagement") {
    ExperimentConfig cfg;
    WetClutchParams prm;
    CHECK_THROWS_AS(simulate_engagement(cfg, prm, 1.0, prm.z_M / prm.z_p + 0.01),
                    std::invalid_argument);
}

TEST_CASE("trace starts at rest and flags the synchronous phase") {
    ExperimentConfig cfg;
    WetClutchParams prm;
    const auto r = simulate_engagement(cfg, prm, 1.0, 1.0, true);
    REQUIRE(!r.trace.samples.empty());
    const auto& first = r.trace.samples.front();
    CHECK(first.t == 0.0);
    CHECK(first.p_hc == 0.0);
    CHECK(first.omega2 == 0.0);
    CHECK(first.omega1 > 0.0);
    bool seen_sync = false;
    for (const auto& s : r.trace.samples) {
        if (s.synchronous) seen_sync = true;
        if (seen_sync) {
            CHECK(s.synchronous);  // once locked, stays locked
            CHECK(s.omega1 == Catch::Approx(prm.gear_ratio * s.omega2).epsilon(1e-9));
        }
    }
    CHECK(seen_sync);
}

TEST_CASE("clutch torque is continuous across the contact blend") {
    ExperimentConfig cfg;
    WetClutchParams prm;
    detail::ClutchContext ctx;
    ctx.cfg = &cfg;
    ctx.prm = &prm;
    ctx.x1 = 1.0;
    ctx.x2 = 1.0;
    ctx.omega_m = cfg.omega_m_rpm * (2.0 * M_PI / 60.0);
    ctx.z_p_eff = prm.z_p;
    ctx.brake_T0 = prm.brake_T0_low;

    const double p_hc = 8.0, w1 = 120.0, w2 = 10.0;
    // across the kiss point and up to full engagement
    for (double z : {prm.z_p - 1e-9, prm.z_p, prm.z_p + 1e-9}) {
        const double below = detail::clutch_torque(ctx, p_hc, z, w1, w2);
        CHECK(std::isfinite(below));
    }
    // the smooth Couette slope is ~1.5e4 N*m per m, so the probe spacing must
    // stay well below 1e-12 m for a 1e-8 N*m continuity bound
    const double at_kiss_lo = detail::clutch_torque(ctx, p_hc, prm.z_p - 1e-13, w1, w2);
    const double at_kiss_hi = detail::clutch_torque(ctx, p_hc, prm.z_p + 1e-13, w1, w2);
    CHECK(std::abs(at_kiss_hi - at_kiss_lo) < 1e-8);

    const double near_full = detail::clutch_torque(ctx, p_hc, prm.z_M - 1e-13, w1, w2);
    const double at_full = detail::clutch_torque(ctx, p_hc, prm.z_M, w1, w2);
    CHECK(std::abs(near_full - at_full) < 1e-8);
}

TEST_CASE("forward model wrappers") {
    const CamelbackScalarModel scalar;
    ExperimentConfig cfg;
    CHECK(scalar.input_dim() == 1);
    CHECK(scalar.evaluate(cfg, std::vector<double>{1.0}) == Catch::Approx(camelback(1.0)));

    const CamelbackStudyModel study;
    CHECK(study.input_dim() == 2);
    cfg.id = 3;
    const double y1 = study.evaluate(cfg, std::vector<double>{0.4, -0.2});
    CHECK(y1 == study.evaluate(cfg, std::vector<double>{0.4, -0.2}));  // deterministic
    cfg.id = 4;
    CHECK(y1 != study.evaluate(cfg, std::vector<double>{0.4, -0.2}));  // id matters

    // projections keep clipped inputs inside the camelback domain
    for (int id = 1; id <= 40; ++id) {
        const auto [a, b, s] = CamelbackStudyModel::projection(id);
        CHECK(std::abs(a) * 3.0 + std::abs(b) * 3.0 + std::abs(s) < 6.0);
    }

    const WetClutchModel clutch;
    CHECK(clutch.input_dim() == 2);
    cfg = ExperimentConfig{};
    const double ts = clutch.evaluate(cfg, std::vector<double>{1.0, 1.0});
    CHECK(ts == Catch::Approx(simulate_engagement(cfg, clutch.params(), 1.0, 1.0).shifting_time_s));
}
