#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "gpcmom/errors.hpp"

namespace gpcmom {

/// Univariate demonstration model: tan(x/4) + exp(x/3 - 1) + tanh(x).
/// The domain guard keeps x/4 away from the tangent singularity.
inline double camelback(double x) {
    if (!(std::abs(x) <= 6.0)) throw std::domain_error("camelback model requires |x| <= 6");
    return std::tan(0.25 * x) + std::exp(x / 3.0 - 1.0) + std::tanh(x);
}

enum class LoadLevel { Low, High };

inline std::string load_name(LoadLevel l) { return l == LoadLevel::Low ? "low" : "high"; }
inline LoadLevel load_from_name(const std::string& s) {
    if (s == "low") return LoadLevel::Low;
    if (s == "high") return LoadLevel::High;
    throw std::invalid_argument("load level must be 'low' or 'high'");
}

/// Operator-controlled settings of one clutch experiment.
struct ExperimentConfig {
    int id = 0;
    double dt_s = 0.25;          // duration of the initial maximum current pulse
    double u0_A = 0.75;          // post-pulse current level
    double du_A = 0.20;          // height of the second pulse above u0
    double omega_m_rpm = 1200.0; // controlled motor speed
    LoadLevel load = LoadLevel::Low;

    void validate() const {
        if (!(dt_s > 0.0)) throw std::invalid_argument("dt must be > 0");
        if (!(omega_m_rpm > 0.0)) throw std::invalid_argument("motor speed must be > 0");
    }
};

/// Shape of the feedforward current profile beyond the three per-experiment
/// settings. Breakpoints past dt are not fixed by the profile description,
/// so they are explicit named parameters.
struct FeedforwardShape {
    double u_max_A = 1.0;
    double ramp_s = 1e-3;           // flank ramp replacing discontinuities
    double pulse2_delay_s = 0.10;   // gap between first-pulse end and second pulse
    double pulse2_plateau_s = 0.15;
    double flank_s = 0.40;          // slow downward flank of the second pulse
    double hold_delay_s = 0.30;     // gap before the final high hold
};

namespace detail {

struct ProfileSegment {
    double t0, t1, u0, u1;  // linear in between
};

inline std::vector<ProfileSegment> profile_segments(const ExperimentConfig& cfg,
                                                    const FeedforwardShape& sh) {
    const double r = sh.ramp_s;
    const double t_drop = cfg.dt_s;
    const double t2 = t_drop + r + sh.pulse2_delay_s;
    const double t2_top = t2 + r;
    const double t_flank = t2_top + sh.pulse2_plateau_s;
    const double t_flank_end = t_flank + sh.flank_s;
    const double t_hold = t_flank_end + sh.hold_delay_s;
    const double up = cfg.u0_A + cfg.du_A;
    return {
        {0.0, t_drop, sh.u_max_A, sh.u_max_A},
        {t_drop, t_drop + r, sh.u_max_A, cfg.u0_A},
        {t_drop + r, t2, cfg.u0_A, cfg.u0_A},
        {t2, t2_top, cfg.u0_A, up},
        {t2_top, t_flank, up, up},
        {t_flank, t_flank_end, up, cfg.u0_A},
        {t_flank_end, t_hold, cfg.u0_A, cfg.u0_A},
        {t_hold, t_hold + r, cfg.u0_A, sh.u_max_A},
    };
}

}  // namespace detail

/// Feedforward valve current u(t) in ampere.
inline double feedforward_current(double t, const ExperimentConfig& cfg,
                                  const FeedforwardShape& shape = {}) {
    if (t < 0.0) throw std::invalid_argument("time must be >= 0");
    const auto segments = detail::profile_segments(cfg, shape);
    for (const auto& s : segments) {
        if (t <= s.t1) {
            const double f = (s.t1 > s.t0) ? (t - s.t0) / (s.t1 - s.t0) : 1.0;
            return s.u0 + f * (s.u1 - s.u0);
        }
    }
    return shape.u_max_A;
}

/// Analytic du/dt of the piecewise-linear profile.
inline double feedforward_current_rate(double t, const ExperimentConfig& cfg,
                                       const FeedforwardShape& shape = {}) {
    if (t < 0.0) throw std::invalid_argument("time must be >= 0");
    const auto segments = detail::profile_segments(cfg, shape);
    for (const auto& s : segments)
        if (t <= s.t1) return (s.t1 > s.t0) ? (s.u1 - s.u0) / (s.t1 - s.t0) : 0.0;
    return 0.0;
}

/// Quadratic surrogate map over the torque-converter speed ratio.
struct SpeedRatioMap {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double operator()(double r) const { return c0 + c1 * r + c2 * r * r; }
};

/// Lumped wet-clutch parameters. The defaults are synthetic: they are tuned
/// only so traces show the expected fill ripple and speed synchronization,
/// and carry no physical identification.
struct WetClutchParams {
    // sparse affine pressure/piston subsystem
    double a1 = -900.0, a2 = -15.0, a3 = 0.011, a4 = 1e-4, a5 = -8.0;
    double b1 = 9000.0, b2 = 0.5;
    double c1 = -180.0, c2 = -0.032;  // c2 is scaled by the uncertainty factor x1
    // piston geometry: z = clamp(z_scale * z_tilde + z_offset, 0, z_M)
    double z_scale = 1.0, z_offset = 0.0;
    double z_p = 0.007, z_M = 0.010;  // z_p is scaled by the uncertainty factor x2
    // torque path
    double couette_gamma = 1.5e-3;   // N*m*s
    double plate_alpha = 20.0;       // N*m per bar of plate pressure
    double gear_ratio = 3.0;
    double J1 = 0.2, J2 = 2.5;       // kg*m^2
    double brake_T0_low = 10.0, brake_T0_high = 25.0, brake_visc = 0.05;
    SpeedRatioMap torque_ratio{2.0, -1.2, 0.2};      // f_t
    SpeedRatioMap capacity_factor{30.0, 0.0, 10.0};  // f_c
    // operating point and integration
    double omega1_ratio0 = 1.0;  // omega_1(0) = ratio * omega_m (converter operating point)
    double horizon_s = 5.0;
    double step_s = 5e-4;
    FeedforwardShape feedforward;

    void validate() const {
        if (!(z_p < z_M)) throw std::invalid_argument("need z_p < z_M");
        if (!(J1 > 0.0 && J2 > 0.0)) throw std::invalid_argument("inertias must be > 0");
        if (!(gear_ratio > 0.0)) throw std::invalid_argument("gear ratio must be > 0");
        if (!(step_s > 0.0 && horizon_s > step_s)) throw std::invalid_argument("bad time grid");
    }
};

inline void to_json(nlohmann::json& j, const SpeedRatioMap& m) {
    j = {m.c0, m.c1, m.c2};
}
inline void from_json(const nlohmann::json& j, SpeedRatioMap& m) {
    m.c0 = j.at(0);
    m.c1 = j.at(1);
    m.c2 = j.at(2);
}

inline void to_json(nlohmann::json& j, const FeedforwardShape& s) {
    j = {{"u_max_A", s.u_max_A},       {"ramp_s", s.ramp_s},
         {"pulse2_delay_s", s.pulse2_delay_s}, {"pulse2_plateau_s", s.pulse2_plateau_s},
         {"flank_s", s.flank_s},       {"hold_delay_s", s.hold_delay_s}};
}
inline void from_json(const nlohmann::json& j, FeedforwardShape& s) {
    s.u_max_A = j.value("u_max_A", s.u_max_A);
    s.ramp_s = j.value("ramp_s", s.ramp_s);
    s.pulse2_delay_s = j.value("pulse2_delay_s", s.pulse2_delay_s);
    s.pulse2_plateau_s = j.value("pulse2_plateau_s", s.pulse2_plateau_s);
    s.flank_s = j.value("flank_s", s.flank_s);
    s.hold_delay_s = j.value("hold_delay_s", s.hold_delay_s);
}

inline void to_json(nlohmann::json& j, const WetClutchParams& p) {
    j = {{"a1", p.a1}, {"a2", p.a2}, {"a3", p.a3}, {"a4", p.a4}, {"a5", p.a5},
         {"b1", p.b1}, {"b2", p.b2}, {"c1", p.c1}, {"c2", p.c2},
         {"z_scale", p.z_scale}, {"z_offset", p.z_offset}, {"z_p", p.z_p}, {"z_M", p.z_M},
         {"couette_gamma", p.couette_gamma}, {"plate_alpha", p.plate_alpha},
         {"gear_ratio", p.gear_ratio}, {"J1", p.J1}, {"J2", p.J2},
         {"brake_T0_low", p.brake_T0_low}, {"brake_T0_high", p.brake_T0_high},
         {"brake_visc", p.brake_visc}, {"torque_ratio", p.torque_ratio},
         {"capacity_factor", p.capacity_factor}, {"omega1_ratio0", p.omega1_ratio0},
         {"horizon_s", p.horizon_s}, {"step_s", p.step_s}, {"feedforward", p.feedforward}};
}
inline void from_json(const nlohmann::json& j, WetClutchParams& p) {
    WetClutchParams defaults;
    p = defaults;
#define GPCMOM_FIELD(name) p.name = j.value(#name, defaults.name)
    GPCMOM_FIELD(a1); GPCMOM_FIELD(a2); GPCMOM_FIELD(a3); GPCMOM_FIELD(a4); GPCMOM_FIELD(a5);
    GPCMOM_FIELD(b1); GPCMOM_FIELD(b2); GPCMOM_FIELD(c1); GPCMOM_FIELD(c2);
    GPCMOM_FIELD(z_scale); GPCMOM_FIELD(z_offset); GPCMOM_FIELD(z_p); GPCMOM_FIELD(z_M);
    GPCMOM_FIELD(couette_gamma); GPCMOM_FIELD(plate_alpha); GPCMOM_FIELD(gear_ratio);
    GPCMOM_FIELD(J1); GPCMOM_FIELD(J2);
    GPCMOM_FIELD(brake_T0_low); GPCMOM_FIELD(brake_T0_high); GPCMOM_FIELD(brake_visc);
    GPCMOM_FIELD(omega1_ratio0); GPCMOM_FIELD(horizon_s); GPCMOM_FIELD(step_s);
#undef GPCMOM_FIELD
    if (j.contains("torque_ratio")) p.torque_ratio = j.at("torque_ratio");
    if (j.contains("capacity_factor")) p.capacity_factor = j.at("capacity_factor");
    if (j.contains("feedforward")) p.feedforward = j.at("feedforward");
}

inline WetClutchParams load_clutch_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read parameter file: " + path);
    nlohmann::json j;
    in >> j;
    WetClutchParams p = j;
    p.validate();
    return p;
}

struct TraceSample {
    double t, p_hc, z, omega1, omega2, Tc, u;
    bool synchronous;
};

struct SimulationTrace {
    std::vector<TraceSample> samples;
};

struct EngagementResult {
    double shifting_time_s = 0.0;
    SimulationTrace trace;
};

namespace detail {

struct ClutchState {
    double p_hc, dp_hc, z_tilde, omega1, omega2;
};

struct ClutchContext {
    const ExperimentConfig* cfg;
    const WetClutchParams* prm;
    double x1, x2;  // scaling factors for c2 and z_p
    double omega_m; // rad/s
    double z_p_eff;
    double brake_T0;
};

inline double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

inline double piston_position(const ClutchContext& ctx, double z_tilde) {
    return std::clamp(ctx.prm->z_scale * z_tilde + ctx.prm->z_offset, 0.0, ctx.prm->z_M);
}

inline double clutch_torque(const ClutchContext& ctx, double p_hc, double z, double omega1,
                            double omega2) {
    const WetClutchParams& prm = *ctx.prm;
    const double frac = std::max(0.0, (z - ctx.z_p_eff) / (prm.z_M - ctx.z_p_eff));
    const double p = std::max(0.0, frac * p_hc);
    const double delta = smoothstep01((z - ctx.z_p_eff) / (prm.z_M - ctx.z_p_eff));
    const double slip = omega1 - prm.gear_ratio * omega2;
    double couette = 0.0;
    if (delta < 1.0) {
        const double gap = prm.z_M - z;
        if (!(gap > 0.0)) throw NumericError("couette gap closed while still blending");
        couette = prm.couette_gamma / gap * slip;
    }
    return delta * prm.plate_alpha * p + (1.0 - delta) * couette;
}

inline double drive_torque(const ClutchContext& ctx, double omega1) {
    const double r = omega1 / ctx.omega_m;
    const double ft = ctx.prm->torque_ratio(r);
    const double fc = ctx.prm->capacity_factor(r);
    if (!(fc > 0.0)) throw NumericError("capacity factor surrogate not positive");
    return ctx.omega_m * ctx.omega_m * ft / (fc * fc);
}

inline ClutchState derivative(const ClutchContext& ctx, double t, const ClutchState& s) {
    const WetClutchParams& prm = *ctx.prm;
    const double u = feedforward_current(t, *ctx.cfg, prm.feedforward);
    const double du = feedforward_current_rate(t, *ctx.cfg, prm.feedforward);
    ClutchState ds;
    ds.p_hc = s.dp_hc;
    ds.dp_hc = prm.a1 * s.p_hc + prm.a2 * s.dp_hc + prm.b1 * u + prm.b2 * du + prm.c1;
    ds.z_tilde = prm.a3 * s.p_hc + prm.a4 * s.dp_hc + prm.a5 * s.z_tilde + prm.c2 * ctx.x1;

    const double z = piston_position(ctx, s.z_tilde);
    const double tc = clutch_torque(ctx, s.p_hc, z, s.omega1, s.omega2);
    ds.omega1 = (drive_torque(ctx, s.omega1) - tc) / prm.J1;
    const double brake = ctx.brake_T0 + prm.brake_visc * s.omega2;
    double acc2 = (prm.gear_ratio * tc - brake) / prm.J2;
    if (s.omega2 <= 0.0 && acc2 < 0.0) acc2 = 0.0;  // brake holds the load at rest
    ds.omega2 = acc2;
    return ds;
}

inline ClutchState rk4_step(const ClutchContext& ctx, double t, const ClutchState& s, double h) {
    auto axpy = [](const ClutchState& a, const ClutchState& d, double f) {
        return ClutchState{a.p_hc + f * d.p_hc, a.dp_hc + f * d.dp_hc, a.z_tilde + f * d.z_tilde,
                           a.omega1 + f * d.omega1, a.omega2 + f * d.omega2};
    };
    const ClutchState k1 = derivative(ctx, t, s);
    const ClutchState k2 = derivative(ctx, t + 0.5 * h, axpy(s, k1, 0.5 * h));
    const ClutchState k3 = derivative(ctx, t + 0.5 * h, axpy(s, k2, 0.5 * h));
    const ClutchState k4 = derivative(ctx, t + h, axpy(s, k3, h));
    ClutchState out = s;
    out.p_hc += h / 6.0 * (k1.p_hc + 2 * k2.p_hc + 2 * k3.p_hc + k4.p_hc);
    out.dp_hc += h / 6.0 * (k1.dp_hc + 2 * k2.dp_hc + 2 * k3.dp_hc + k4.dp_hc);
    out.z_tilde += h / 6.0 * (k1.z_tilde + 2 * k2.z_tilde + 2 * k3.z_tilde + k4.z_tilde);
    out.omega1 += h / 6.0 * (k1.omega1 + 2 * k2.omega1 + 2 * k3.omega1 + k4.omega1);
    out.omega2 += h / 6.0 * (k1.omega2 + 2 * k2.omega2 + 2 * k3.omega2 + k4.omega2);
    if (out.omega2 < 0.0) out.omega2 = 0.0;
    return out;
}

}  // namespace detail

/// Integrate the engagement and return the shifting time: the instant where
/// omega_1 = R * omega_2, located by bisection to 1e-6 s. x = (x1, x2) scale
/// c2 and z_p. Throws TimeoutError when no synchronization occurs within the
/// horizon, NumericError on a closed Couette gap.
inline EngagementResult simulate_engagement(const ExperimentConfig& cfg,
                                            const WetClutchParams& prm, double x1, double x2,
                                            bool keep_trace = false) {
    cfg.validate();
    prm.validate();
    detail::ClutchContext ctx;
    ctx.cfg = &cfg;
    ctx.prm = &prm;
    ctx.x1 = x1;
    ctx.x2 = x2;
    ctx.omega_m = cfg.omega_m_rpm * (2.0 * M_PI / 60.0);
    ctx.z_p_eff = prm.z_p * x2;
    if (!(ctx.z_p_eff < prm.z_M))
        throw std::invalid_argument("scaled z_p must stay below z_M");
    ctx.brake_T0 = (cfg.load == LoadLevel::Low) ? prm.brake_T0_low : prm.brake_T0_high;

    detail::ClutchState s{0.0, 0.0, 0.0, prm.omega1_ratio0 * ctx.omega_m, 0.0};
    EngagementResult result;
    const double h = prm.step_s;
    double t = 0.0;

    auto slip = [&](const detail::ClutchState& st) {
        return st.omega1 - prm.gear_ratio * st.omega2;
    };
    auto record = [&](double tt, const detail::ClutchState& st, bool sync) {
        if (!keep_trace) return;
        const double z = detail::piston_position(ctx, st.z_tilde);
        const double tc = sync ? 0.0 : detail::clutch_torque(ctx, st.p_hc, z, st.omega1, st.omega2);
        result.trace.samples.push_back({tt, st.p_hc, z, st.omega1, st.omega2, tc,
                                        feedforward_current(tt, cfg, prm.feedforward), sync});
    };

    record(0.0, s, false);
    while (t < prm.horizon_s) {
        const detail::ClutchState next = detail::rk4_step(ctx, t, s, h);
        if (!std::isfinite(next.p_hc) || !std::isfinite(next.omega1) || !std::isfinite(next.omega2))
            throw NumericError("clutch state became non-finite");
        if (slip(next) <= 0.0) {
            // bisect the crossing inside [t, t+h]
            double lo = 0.0, hi = h;
            detail::ClutchState at_hi = next;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                const detail::ClutchState sm = detail::rk4_step(ctx, t, s, mid);
                if (slip(sm) <= 0.0) {
                    hi = mid;
                    at_hi = sm;
                } else {
                    lo = mid;
                }
            }
            result.shifting_time_s = t + hi;
            // the recorded state is on the locked manifold from this row on
            at_hi.omega2 = at_hi.omega1 / prm.gear_ratio;
            record(result.shifting_time_s, at_hi, true);
            if (keep_trace) {
                // synchronous phase: shafts locked, lumped inertia, for the trace only
                detail::ClutchState ss = at_hi;
                ss.omega2 = ss.omega1 / prm.gear_ratio;
                double ts = result.shifting_time_s;
                const double t_end = std::min(prm.horizon_s, ts + 1.0);
                const double Jlock = prm.J1 + prm.J2 / (prm.gear_ratio * prm.gear_ratio);
                while (ts < t_end) {
                    const double brake = ctx.brake_T0 + prm.brake_visc * ss.omega2;
                    const double acc =
                        (detail::drive_torque(ctx, ss.omega1) - brake / prm.gear_ratio) / Jlock;
                    ss.omega1 += h * acc;
                    ss.omega2 = ss.omega1 / prm.gear_ratio;
                    const double u = feedforward_current(ts, cfg, prm.feedforward);
                    const double du = feedforward_current_rate(ts, cfg, prm.feedforward);
                    ss.p_hc += h * ss.dp_hc;
                    ss.dp_hc += h * (prm.a1 * ss.p_hc + prm.a2 * ss.dp_hc + prm.b1 * u +
                                     prm.b2 * du + prm.c1);
                    ss.z_tilde += h * (prm.a3 * ss.p_hc + prm.a4 * ss.dp_hc +
                                       prm.a5 * ss.z_tilde + prm.c2 * ctx.x1);
                    ts += h;
                    record(ts, ss, true);
                }
            }
            return result;
        }
        t += h;
        s = next;
        record(t, s, false);
    }
    throw TimeoutError("no synchronization within the simulation horizon");
}

// ---------------------------------------------------------------------------
// Forward-model interface
// ---------------------------------------------------------------------------

/// Deterministic map from (experiment config, parameter vector) to the scalar
/// outcome. Pure models may be evaluated from several threads at once.
class ForwardModel {
public:
    virtual ~ForwardModel() = default;
    virtual int input_dim() const = 0;
    virtual bool pure() const { return true; }
    virtual double evaluate(const ExperimentConfig& cfg, std::span<const double> x) const = 0;
};

/// The univariate demonstration model; ignores the experiment config.
class CamelbackScalarModel final : public ForwardModel {
public:
    int input_dim() const override { return 1; }
    double evaluate(const ExperimentConfig&, std::span<const double> x) const override {
        return camelback(x[0]);
    }
};

/// Two-parameter synthetic study built on the camelback nonlinearity: each
/// experiment sees a different 1D projection a_l x1 + b_l x2 + s_l, so a set
/// of experiments is jointly informative about both means and both spreads.
class CamelbackStudyModel final : public ForwardModel {
public:
    int input_dim() const override { return 2; }
    double evaluate(const ExperimentConfig& cfg, std::span<const double> x) const override {
        const auto [a, b, s] = projection(cfg.id);
        return camelback(a * x[0] + b * x[1] + s);
    }

    /// Direction/offset derived from the experiment id alone (golden-angle
    /// spacing keeps consecutive directions well separated).
    static std::tuple<double, double, double> projection(int id) {
        const double angle = 2.39996322972865332 * id;
        const double offset = 1.5 * std::sin(0.9 * id + 0.4);
        return {std::cos(angle), std::sin(angle), offset};
    }
};

/// Shifting-time model: the scalar output is the synchronization instant.
class WetClutchModel final : public ForwardModel {
public:
    explicit WetClutchModel(WetClutchParams params = {}) : params_(std::move(params)) {}

    const WetClutchParams& params() const { return params_; }
    int input_dim() const override { return 2; }
    double evaluate(const ExperimentConfig& cfg, std::span<const double> x) const override {
        return simulate_engagement(cfg, params_, x[0], x[1]).shifting_time_s;
    }

private:
    WetClutchParams params_;
};

}  // namespace gpcmom
