#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ntband/constvol.hpp"
#include "ntband/fastscale.hpp"
#include "ntband/market.hpp"
#include "ntband/simulate.hpp"
#include "ntband/slowscale.hpp"
#include "ntband/vol_model.hpp"

namespace ntband {

using json = nlohmann::json;

// full-precision decimal form, stable across runs
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct SweepSpec {
    std::string axis; // mu | sigma_bar | gamma | z
    double lo = 0.0, hi = 0.0;
    int steps = 0;
};

struct SimSpec {
    double horizon = 50.0;
    double dt = 1.0 / 2500;
    long n_paths = 10000;
    std::uint64_t seed = 1;
    int batch_count = 50;
    std::string band = "zeroth"; // zeroth | corrected
    double zeta0 = 0.0;
};

struct RunConfig {
    MarketParams market;
    double sigma = 0.2; // constant vol / sigma-bar when no model is given
    std::optional<VolFactorModel> model;
    std::string regime = "fast"; // which correction family to report
    double epsilon = 1e-3;       // used for corrected-band output
    std::optional<double> V3_override;
    std::optional<double> V1_override;
    double z = 0.0; // slow-scale evaluation point
    std::optional<SweepSpec> sweep;
    SimSpec sim;
};

inline VolFactorModel model_from_json(const json& j) {
    const double rho = j.value("rho", 0.0);
    const double eps = j.value("epsilon", 1e-3);
    const Regime reg = (j.value("regime", "fast") == std::string("slow")) ? Regime::Slow : Regime::Fast;
    if (j.contains("tabulated")) {
        std::vector<std::array<double, 4>> rows;
        for (const auto& r : j.at("tabulated"))
            rows.push_back({r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                            r.at(3).get<double>()});
        return VolFactorModel::tabulated(rows, rho, eps, reg);
    }
    const std::string family = j.value("family", "ou-logistic");
    if (family != "ou-logistic")
        throw DomainError("model: unknown family '" + family + "'");
    return VolFactorModel::ou_logistic(j.value("m", 0.0), j.value("nu", 1.0),
                                       j.at("sigma_lo").get<double>(),
                                       j.at("sigma_hi").get<double>(), rho, eps, reg);
}

inline RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    const auto& mk = j.at("market");
    cfg.market.mu = mk.at("mu").get<double>();
    cfg.market.r = mk.value("r", 0.0);
    cfg.market.gamma = mk.at("gamma").get<double>();
    cfg.market.lambda = mk.at("lambda").get<double>();
    cfg.sigma = j.value("sigma", 0.2);
    cfg.regime = j.value("regime", "fast");
    cfg.epsilon = j.value("epsilon", 1e-3);
    if (j.contains("V3")) cfg.V3_override = j.at("V3").get<double>();
    if (j.contains("V1")) cfg.V1_override = j.at("V1").get<double>();
    cfg.z = j.value("z", 0.0);
    if (j.contains("model")) {
        cfg.model = model_from_json(j.at("model"));
        cfg.epsilon = cfg.model->epsilon;
        cfg.regime = (cfg.model->regime == Regime::Slow) ? "slow" : "fast";
    }
    if (j.contains("sweep")) {
        SweepSpec s;
        s.axis = j.at("sweep").at("axis").get<std::string>();
        s.lo = j.at("sweep").at("lo").get<double>();
        s.hi = j.at("sweep").at("hi").get<double>();
        s.steps = j.at("sweep").at("steps").get<int>();
        cfg.sweep = s;
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        cfg.sim.horizon = s.value("T", 50.0);
        cfg.sim.dt = s.value("dt", 1.0 / 2500);
        cfg.sim.n_paths = s.value("n_paths", 10000L);
        cfg.sim.seed = s.value("seed", std::uint64_t{1});
        cfg.sim.batch_count = s.value("batch_count", 50);
        cfg.sim.band = s.value("band", "zeroth");
        cfg.sim.zeta0 = s.value("zeta0", 0.0);
    }
    return cfg;
}

// The four reference settings as named presets.
inline RunConfig preset_config(const std::string& name) {
    RunConfig cfg;
    cfg.market = {0.07, 0.0, 2.0, 0.01};
    cfg.sigma = 0.2;
    if (name == "fast-real") {
        cfg.regime = "fast";
        cfg.epsilon = 1e-3;
        cfg.V3_override = -1.0;
    } else if (name == "fast-complex") {
        cfg.market.mu = 0.05;
        cfg.regime = "fast";
        cfg.epsilon = 1e-4;
        cfg.V3_override = -1.0;
    } else if (name == "slow-real") {
        cfg.regime = "slow";
        cfg.epsilon = 1e-6;
        cfg.V1_override = -1.0;
    } else if (name == "slow-complex") {
        cfg.market.mu = 0.05;
        cfg.regime = "slow";
        cfg.epsilon = 1e-3;
        cfg.V1_override = -1.0;
    } else {
        throw DomainError("unknown preset '" + name +
                          "' (expected fast-real|fast-complex|slow-real|slow-complex)");
    }
    return cfg;
}

inline json theta_to_json(const ThetaRoots& t) {
    json j;
    j["case"] = to_string(t.kind);
    if (t.kind == ThetaCase::Real) {
        j["theta_plus"] = t.plus;
        j["theta_minus"] = t.minus;
    } else {
        j["theta_r"] = t.re;
        j["theta_i"] = t.im;
    }
    return j;
}

inline json zeroth_to_json(const ZerothOrderSolution& sol) {
    json j;
    j["sigma"] = sol.sigma;
    j["Delta0"] = sol.Delta0;
    j["pi_minus"] = sol.pi_minus;
    j["pi_plus"] = sol.pi_plus;
    j["L0"] = sol.L0;
    j["U0"] = sol.U0;
    j["theta"] = theta_to_json(sol.theta);
    j["c_plus"] = sol.c_plus;
    j["c_minus"] = sol.c_minus;
    j["k"] = sol.k;
    j["k_l"] = sol.k_l;
    j["k_u"] = sol.k_u;
    j["k_minus"] = sol.k_minus;
    j["k_plus"] = sol.k_plus;
    j["case"] = to_string(sol.theta.kind);
    j["metadata"] = {{"eigenvalues_bracketed", sol.all_roots},
                     {"selected", "largest"},
                     {"det_residual", sol.det_residual}};
    return j;
}

// single CSV row form of the zeroth-order record (for sweeps and reports)
inline std::string zeroth_csv_header() {
    return "sigma,Delta0,pi_minus,pi_plus,L0,U0,case";
}
inline std::string zeroth_csv_row(const ZerothOrderSolution& sol) {
    std::ostringstream os;
    os << fmt_g17(sol.sigma) << ',' << fmt_g17(sol.Delta0) << ',' << fmt_g17(sol.pi_minus) << ','
       << fmt_g17(sol.pi_plus) << ',' << fmt_g17(sol.L0) << ',' << fmt_g17(sol.U0) << ','
       << to_string(sol.theta.kind);
    return os.str();
}

inline json fast_to_json(const FastCorrection& c, const ZerothOrderSolution& sol, double epsilon) {
    const double se = std::sqrt(epsilon);
    json j;
    j["V3"] = c.V3;
    j["delta1"] = c.delta1;
    j["l1"] = c.l1;
    j["u1"] = c.u1;
    j["case"] = to_string(c.kind);
    j["epsilon"] = epsilon;
    j["l_corrected"] = sol.L0 + se * c.l1;
    j["u_corrected"] = sol.U0 + se * c.u1;
    j["delta_corrected"] = sol.Delta0 + se * c.delta1;
    json coeff;
    if (c.kind == ThetaCase::Real) {
        coeff["C_plus"] = c.real.C_plus;
        coeff["c_tilde_plus"] = c.real.c_tilde_plus;
        coeff["c_tilde_minus"] = c.real.c_tilde_minus;
    } else {
        coeff["C_plus"] = c.cplx.C_plus;
        coeff["q_plus"] = c.cplx.q_plus;
        coeff["q_minus"] = c.cplx.q_minus;
        coeff["q_tilde_plus"] = c.cplx.q_tilde_plus;
        coeff["q_tilde_minus"] = c.cplx.q_tilde_minus;
    }
    coeff["xi"] = c.xi;
    j["coefficients"] = coeff;
    j["fredholm_residual"] = c.fredholm_residual;
    return j;
}

inline json slow_to_json(const SlowCorrection& c, const ZerothOrderSolution& sol, double epsilon) {
    const double se = std::sqrt(epsilon);
    json j;
    j["z"] = c.z;
    j["sigma_z"] = c.sigma_z;
    j["V1"] = c.V1;
    j["delta1"] = c.delta1;
    j["l1"] = c.l1;
    j["u1"] = c.u1;
    j["case"] = to_string(c.kind);
    j["method"] = c.numeric_path ? "numeric" : "closed-form";
    j["epsilon"] = epsilon;
    j["l_corrected"] = sol.L0 + se * c.l1;
    j["u_corrected"] = sol.U0 + se * c.u1;
    j["delta_corrected"] = sol.Delta0 + se * c.delta1;
    if (!c.numeric_path) {
        j["coefficients"] = {{"c_tilde_plus", c.coeffs.c_tilde_plus},
                             {"c_tilde_minus", c.coeffs.c_tilde_minus},
                             {"d_tilde_plus", c.coeffs.d_tilde_plus},
                             {"d_tilde_minus", c.coeffs.d_tilde_minus},
                             {"C_plus", c.coeffs.C_plus}};
        j["intermediates"] = {{"Q_plus", c.Q_plus},   {"Q_minus", c.Q_minus},
                              {"R_plus", c.R_plus},   {"R_minus", c.R_minus},
                              {"D", c.D},             {"dpr", c.vega.dpr}};
        j["fredholm_residual"] = c.coeffs.fredholm_residual;
    }
    return j;
}

// solve + requested corrections, as one report document
inline json solve_report(const RunConfig& cfg) {
    json j;
    j["market"] = {{"mu", cfg.market.mu},
                   {"r", cfg.market.r},
                   {"gamma", cfg.market.gamma},
                   {"lambda", cfg.market.lambda}};

    double sigma = cfg.sigma;
    std::optional<InvariantDistribution> dist;
    if (cfg.model) {
        dist = invariant_distribution(*cfg.model);
        sigma = (cfg.regime == "slow") ? cfg.model->f(cfg.z) : sigma_bar(*cfg.model, *dist);
        j["sigma_source"] = (cfg.regime == "slow") ? "f(z)" : "sigma_bar(model)";
    } else {
        j["sigma_source"] = "config";
    }

    const auto sol = solve_zeroth(cfg.market, sigma);
    j["zeroth"] = zeroth_to_json(sol);

    if (cfg.regime == "fast") {
        double V3 = 0.0;
        if (cfg.V3_override) V3 = *cfg.V3_override;
        else if (cfg.model) V3 = v3(*cfg.model, *dist);
        const auto corr = fast_correction(sol, V3);
        j["fast"] = fast_to_json(corr, sol, cfg.epsilon);
    } else if (cfg.regime == "slow") {
        double V1 = 0.0;
        if (cfg.V1_override) V1 = *cfg.V1_override;
        else if (cfg.model) V1 = v1_slow(*cfg.model, cfg.z);
        const auto corr = slow_correction(cfg.market, sigma, V1, cfg.z);
        j["slow"] = slow_to_json(corr, sol, cfg.epsilon);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Sweeps: one row per grid point, inadmissible points become skipped rows.
// ---------------------------------------------------------------------------

inline std::string sweep_csv(const RunConfig& cfg, const SweepSpec& spec) {
    std::ostringstream os;
    os << "axis_value,Delta0,delta1,L0,U0,l1,u1,l_corr,u_corr,case\n";
    const double se = std::sqrt(cfg.epsilon);

    std::optional<InvariantDistribution> dist;
    double v3_model = 0.0;
    if (cfg.model && !cfg.V3_override && cfg.regime == "fast") {
        dist = invariant_distribution(*cfg.model);
        v3_model = v3(*cfg.model, *dist);
    }

    for (int i = 0; i <= spec.steps; ++i) {
        const double x = spec.lo + (spec.hi - spec.lo) * static_cast<double>(i) /
                                       std::max(1, spec.steps);
        MarketParams p = cfg.market;
        double sigma = cfg.sigma;
        double z = cfg.z;
        if (spec.axis == "mu") p.mu = x;
        else if (spec.axis == "sigma_bar") sigma = x;
        else if (spec.axis == "gamma") p.gamma = x;
        else if (spec.axis == "z") z = x;
        else throw DomainError("sweep: unknown axis '" + spec.axis + "'");

        if (spec.axis == "z") {
            if (!cfg.model) throw DomainError("sweep over z requires a factor model");
            sigma = cfg.model->f(z);
        }

        std::string row;
        try {
            const auto sol = solve_zeroth(p, sigma);
            double delta1 = 0.0, l1 = 0.0, u1 = 0.0;
            std::string case_label = to_string(sol.theta.kind);
            if (cfg.regime == "slow" || spec.axis == "z") {
                const double V1 = cfg.V1_override ? *cfg.V1_override
                                                  : (cfg.model ? v1_slow(*cfg.model, z) : 0.0);
                const auto corr = slow_correction(p, sigma, V1, z);
                delta1 = corr.delta1;
                l1 = corr.l1;
                u1 = corr.u1;
                if (corr.numeric_path) case_label += ";numeric";
            } else {
                const double V3 = cfg.V3_override ? *cfg.V3_override : v3_model;
                const auto corr = fast_correction(sol, V3);
                delta1 = corr.delta1;
                l1 = corr.l1;
                u1 = corr.u1;
            }
            if (p.merton_proportion(sigma) > 0.97) case_label += ";near-limit";
            std::ostringstream r;
            r << fmt_g17(x) << ',' << fmt_g17(sol.Delta0) << ',' << fmt_g17(delta1) << ','
              << fmt_g17(sol.L0) << ',' << fmt_g17(sol.U0) << ',' << fmt_g17(l1) << ','
              << fmt_g17(u1) << ',' << fmt_g17(sol.L0 + se * l1) << ','
              << fmt_g17(sol.U0 + se * u1) << ',' << case_label;
            row = r.str();
        } catch (const DomainError&) {
            row = fmt_g17(x) + ",,,,,,,,,skipped:A1";
        } catch (const SolverError&) {
            row = fmt_g17(x) + ",,,,,,,,,skipped:solver";
        }
        os << row << '\n';
    }
    return os.str();
}

// Slow-scale z-grid sweep in the slowscale row form (explicit f(z) column).
inline std::string slow_sweep_csv(const VolFactorModel& model, const MarketParams& params,
                                  double z_lo, double z_hi, int steps, double epsilon,
                                  std::optional<double> V1_override = std::nullopt) {
    std::ostringstream os;
    os << "z,f_z,Delta0,delta1,L0,U0,l1,u1,l_corrected,u_corrected\n";
    const double se = std::sqrt(epsilon);
    for (int i = 0; i <= steps; ++i) {
        const double z = z_lo + (z_hi - z_lo) * static_cast<double>(i) / std::max(1, steps);
        const double sigma_z = model.f(z);
        os << fmt_g17(z) << ',' << fmt_g17(sigma_z) << ',';
        try {
            const double V1 = V1_override ? *V1_override : v1_slow(model, z);
            const auto sol = solve_zeroth(params, sigma_z);
            const auto corr = slow_correction(params, sigma_z, V1, z);
            os << fmt_g17(sol.Delta0) << ',' << fmt_g17(corr.delta1) << ',' << fmt_g17(sol.L0)
               << ',' << fmt_g17(sol.U0) << ',' << fmt_g17(corr.l1) << ',' << fmt_g17(corr.u1)
               << ',' << fmt_g17(sol.L0 + se * corr.l1) << ',' << fmt_g17(sol.U0 + se * corr.u1);
        } catch (const DomainError&) {
            os << ",,,,,,,skipped:A1";
        } catch (const SolverError&) {
            os << ",,,,,,,skipped:solver";
        }
        os << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Simulation driver: resolves the band from the solve, runs the paths.
// ---------------------------------------------------------------------------

inline json simulate_report(const RunConfig& cfg) {
    double sigma = cfg.sigma;
    std::optional<InvariantDistribution> dist;
    if (cfg.model) {
        dist = invariant_distribution(*cfg.model);
        sigma = (cfg.regime == "slow") ? cfg.model->f(cfg.z) : sigma_bar(*cfg.model, *dist);
    }
    const auto sol = solve_zeroth(cfg.market, sigma);
    double l = sol.L0, u = sol.U0;
    double delta1 = 0.0;
    if (cfg.sim.band == "corrected") {
        const double se = std::sqrt(cfg.epsilon);
        if (cfg.regime == "fast") {
            const double V3 = cfg.V3_override ? *cfg.V3_override
                                              : (cfg.model ? v3(*cfg.model, *dist) : 0.0);
            const auto corr = fast_correction(sol, V3);
            l += se * corr.l1;
            u += se * corr.u1;
            delta1 = corr.delta1;
        } else {
            const double V1 = cfg.V1_override ? *cfg.V1_override
                                              : (cfg.model ? v1_slow(*cfg.model, cfg.z) : 0.0);
            const auto corr = slow_correction(cfg.market, sigma, V1, cfg.z);
            l += se * corr.l1;
            u += se * corr.u1;
            delta1 = corr.delta1;
        }
    }

    SimConfig sc;
    sc.params = cfg.market;
    sc.model = cfg.model;
    sc.sigma_const = sigma;
    sc.lower = [l](double) { return l; };
    sc.upper = [u](double) { return u; };
    sc.band_depends_on_z = false;
    sc.horizon = cfg.sim.horizon;
    sc.dt = cfg.sim.dt;
    sc.n_paths = cfg.sim.n_paths;
    sc.seed = cfg.sim.seed;
    sc.batch_count = cfg.sim.batch_count;
    sc.z0 = cfg.z;
    sc.zeta0 = cfg.sim.zeta0;
    const auto res = simulate_growth(sc);

    json j;
    j["band"] = {{"l", l}, {"u", u}, {"kind", cfg.sim.band}};
    j["expected_rate"] = {{"r_plus_Delta0", cfg.market.r + sol.Delta0},
                          {"sqrt_eps_delta1", std::sqrt(cfg.epsilon) * delta1}};
    j["growth_rate_estimate"] = res.growth_rate_estimate;
    j["standard_error"] = res.standard_error;
    j["mean_trade_volume"] = res.mean_trade_volume;
    j["fraction_time_at_boundaries"] = res.fraction_time_at_boundaries;
    j["paths_bankrupt"] = res.paths_bankrupt;
    j["config"] = {{"T", cfg.sim.horizon}, {"dt", cfg.sim.dt},     {"n_paths", cfg.sim.n_paths},
                   {"seed", cfg.sim.seed}, {"batch_count", cfg.sim.batch_count}};
    return j;
}

inline std::string simulate_csv_summary(const json& r) {
    std::ostringstream os;
    os << "growth_rate_estimate,standard_error,mean_trade_volume,fraction_time_at_boundaries,"
          "paths_bankrupt\n";
    os << fmt_g17(r.at("growth_rate_estimate").get<double>()) << ','
       << fmt_g17(r.at("standard_error").get<double>()) << ','
       << fmt_g17(r.at("mean_trade_volume").get<double>()) << ','
       << fmt_g17(r.at("fraction_time_at_boundaries").get<double>()) << ','
       << r.at("paths_bankrupt").get<long>() << '\n';
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DomainError("cannot open output file: " + path);
    f << content;
}

} // namespace ntband
