// Acceptance suite: one pass/fail line per criterion, tolerances pinned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ntband/ntband.hpp"

#ifndef NTBAND_CLI_PATH
#define NTBAND_CLI_PATH "ntband_cli"
#endif

using namespace ntband;

namespace {

struct Criterion {
    int id;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Criterion> results;

template <class Fn>
void run(int id, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    Criterion c;
    c.id = id;
    try {
        auto [pass, detail] = fn();
        c.pass = pass;
        c.detail = detail;
    } catch (const std::exception& e) {
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
    }
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    results.push_back(c);
    std::printf("%s criterion %2d (%7.2fs): %s\n", c.pass ? "PASS" : "FAIL", c.id, c.seconds,
                c.detail.c_str());
    std::fflush(stdout);
}

double relerr(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

const MarketParams kRealSet{0.07, 0.0, 2.0, 0.01};
const MarketParams kCplxSet{0.05, 0.0, 2.0, 0.01};
const double kSigma = 0.2;

} // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IONBF, 0);

    // 1. Merton collapse at lambda = 1e-8
    run(1, [] {
        MarketParams p = kRealSet;
        p.lambda = 1e-8;
        const auto sol = solve_zeroth(p, kSigma);
        const double d_err = std::abs(sol.Delta0 - 0.030625);
        const double l_err = std::abs(sol.L0 - 7.0);
        const double u_err = std::abs(sol.U0 - 7.0);
        const bool pass = d_err < 1e-5 && l_err < 1e-2 && u_err < 1e-2;
        std::ostringstream os;
        os << "Merton collapse: |Delta0-0.030625|=" << d_err << " (tol 1e-5), |L0-7|=" << l_err
           << ", |U0-7|=" << u_err << " (tol 1e-2); L0=" << sol.L0 << " U0=" << sol.U0;
        return std::make_pair(pass, os.str());
    });

    // 2. Gap scaling: lambda^(1/3) exponent and prefactor
    run(2, [] {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        double coeff = 0.0;
        for (double lam : {1e-5, 1e-4, 1e-3}) {
            MarketParams p = kRealSet;
            p.lambda = lam;
            const auto sol = solve_zeroth(p, kSigma);
            const auto gd = gap_diagnostic(p, kSigma, sol.Delta0);
            coeff = gd.leading_coeff;
            const double x = std::log(lam), y = std::log(gd.lambda_tilde);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
            ++n;
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / n;
        const double fitted_prefactor =
            std::exp(intercept + slope * std::log(1e-4)) / std::cbrt(1e-4);
        const bool pass =
            std::abs(slope - 1.0 / 3.0) < 0.05 && relerr(fitted_prefactor, coeff) < 0.10;
        std::ostringstream os;
        os << "gap scaling: slope=" << slope << " (1/3 +- 0.05), prefactor fit=" << fitted_prefactor
           << " vs coeff=" << coeff << " (rel " << relerr(fitted_prefactor, coeff) << ", tol 10%)";
        return std::make_pair(pass, os.str());
    });

    // 3. Case classification of the two parameter sets
    run(3, [] {
        const auto a = solve_zeroth(kRealSet, kSigma);
        const auto b = solve_zeroth(kCplxSet, kSigma);
        const bool pass = a.theta.kind == ThetaCase::Real && b.theta.kind == ThetaCase::Complex &&
                          classify_case(kRealSet, kSigma) == ThetaCase::Real &&
                          classify_case(kCplxSet, kSigma) == ThetaCase::Complex;
        std::ostringstream os;
        os << "cases: mu=7% -> " << to_string(a.theta.kind) << ", mu=5% -> "
           << to_string(b.theta.kind);
        return std::make_pair(pass, os.str());
    });

    // 4. Shooting BVP vs closed form, both sets, 1e-7 relative
    run(4, [] {
        double worst = 0.0;
        for (const auto& p : {kRealSet, kCplxSet}) {
            const auto sol = solve_zeroth(p, kSigma);
            const auto sh = shoot_zeroth(p, kSigma);
            worst = std::max({worst, relerr(sh.Delta0, sol.Delta0), relerr(sh.L0, sol.L0),
                              relerr(sh.U0, sol.U0)});
        }
        std::ostringstream os;
        os << "shooting vs closed form: worst rel diff " << worst << " (tol 1e-7)";
        return std::make_pair(worst < 1e-7, os.str());
    });

    // 5. delta1 fast closed forms vs quadrature, 1e-8 relative
    run(5, [] {
        double worst = 0.0;
        for (const auto& p : {kRealSet, kCplxSet}) {
            const auto sol = solve_zeroth(p, kSigma);
            const double c = delta1_fast(sol, -1.0);
            const double q = delta1_quadrature(sol, -1.0, Delta1Mode::FastD1D2);
            worst = std::max(worst, relerr(c, q));
        }
        std::ostringstream os;
        os << "delta1 fast closed vs quadrature: worst rel diff " << worst << " (tol 1e-8)";
        return std::make_pair(worst < 1e-8, os.str());
    });

    // 6. Residual suite: ODEs and the eight pasting/boundary conditions
    run(6, [] {
        using namespace validate_detail;
        double worst_ode = 0.0, worst_bc = 0.0;
        for (const auto& p : {kRealSet, kCplxSet}) {
            const auto sol = solve_zeroth(p, kSigma);
            const auto pts = chebyshev_points(sol.L0, sol.U0, 100);
            auto v0fn = [&](double z) {
                return std::array<double, 4>{eval_v0(sol, z, 0), eval_v0(sol, z, 1),
                                             eval_v0(sol, z, 2), eval_v0(sol, z, 3)};
            };
            worst_ode = std::max(worst_ode,
                                 ode_residual(v0fn, op_lnt(p.mu, p.gamma, kSigma, sol.Delta0), pts));
            auto wfn = [&](double z) {
                return std::array<double, 4>{eval_w(sol, z, 0), eval_w(sol, z, 1),
                                             eval_w(sol, z, 2), 0.0};
            };
            worst_ode = std::max(
                worst_ode, ode_residual(wfn, op_lnt_adjoint(p.mu, p.gamma, kSigma, sol.Delta0), pts));

            const double V3 = -1.0;
            const double d1 = delta1_fast(sol, V3);
            const auto corr = v1_fast(sol, V3, d1);
            auto v1fn = [&](double z) {
                return std::array<double, 4>{eval_v1(corr, sol, z, 0), eval_v1(corr, sol, z, 1),
                                             eval_v1(corr, sol, z, 2), 0.0};
            };
            auto srcf = [&](double z) {
                const double d1d2 = 2.0 * z * z * eval_v0(sol, z, 2) + z * z * z * eval_v0(sol, z, 3);
                return V3 * d1d2 - (1.0 - p.gamma) * d1 * eval_v0(sol, z);
            };
            worst_ode = std::max(
                worst_ode,
                ode_residual(v1fn, op_lnt_with_source(p.mu, p.gamma, kSigma, sol.Delta0, srcf), pts));

            auto v0e = [&](double z, int o) { return eval_v0(sol, z, o); };
            auto v1e = [&](double z, int o) { return eval_v1(corr, sol, z, o); };
            worst_bc = std::max({worst_bc, std::abs(scaled_buy(v0e, sol.L0, p.gamma)),
                                 std::abs(scaled_buy_prime(v0e, sol.L0, p.gamma)),
                                 std::abs(scaled_sell(v0e, sol.U0, p.gamma, p.lambda)),
                                 std::abs(scaled_sell_prime(v0e, sol.U0, p.gamma, p.lambda)),
                                 std::abs(scaled_buy(v1e, sol.L0, p.gamma)),
                                 std::abs(scaled_sell(v1e, sol.U0, p.gamma, p.lambda))});
        }
        // slow-scale v1 on the real set
        {
            const auto sol = solve_zeroth(kRealSet, kSigma);
            const auto vb = vega_block(sol, delta_prime(sol));
            const double V1 = -1.0;
            const double d1 = delta1_slow_closed(sol, vb, V1);
            const auto blk = v1_slow_coeffs(sol, vb, V1, d1);
            const auto pts = chebyshev_points(sol.L0, sol.U0, 100);
            auto fn4 = [&](double z) {
                return std::array<double, 4>{blk.v1.eval(z, 0), blk.v1.eval(z, 1),
                                             blk.v1.eval(z, 2), 0.0};
            };
            auto srcf = [&](double z) {
                return V1 * z * eval_vega(vb, z, 1) - (1.0 - kRealSet.gamma) * d1 * eval_v0(sol, z);
            };
            worst_ode = std::max(
                worst_ode, ode_residual(fn4, op_lnt_with_source(kRealSet.mu, kRealSet.gamma, kSigma,
                                                                sol.Delta0, srcf),
                                        pts));
            auto v1e = [&](double z, int o) { return blk.v1.eval(z, o); };
            worst_bc = std::max({worst_bc, std::abs(scaled_buy(v1e, sol.L0, kRealSet.gamma)),
                                 std::abs(scaled_sell(v1e, sol.U0, kRealSet.gamma, kRealSet.lambda))});
        }
        std::ostringstream os;
        os << "residual suite: worst ODE " << worst_ode << ", worst boundary " << worst_bc
           << " (tol 1e-8)";
        return std::make_pair(worst_ode < 1e-8 && worst_bc < 1e-8, os.str());
    });

    // 7. Vega suite vs finite differences + collapse limit
    run(7, [] {
        using namespace validate_detail;
        const auto sol = solve_zeroth(kRealSet, kSigma);
        const double dpr = delta_prime(sol);
        const double h = 1e-4 * kSigma;
        double worst = relerr(dpr, fd_sigma(kRealSet, kSigma, h,
                                            [](const ZerothOrderSolution& s) { return s.Delta0; }));
        const auto vb = vega_block(sol, dpr);
        auto fd = [&](auto field) { return fd_sigma(kRealSet, kSigma, h, field); };
        worst = std::max(worst, relerr(vb.pi_dot_minus, fd([](const ZerothOrderSolution& s) { return s.pi_minus; })));
        worst = std::max(worst, relerr(vb.pi_dot_plus, fd([](const ZerothOrderSolution& s) { return s.pi_plus; })));
        worst = std::max(worst, relerr(vb.L0_dot, fd([](const ZerothOrderSolution& s) { return s.L0; })));
        worst = std::max(worst, relerr(vb.U0_dot, fd([](const ZerothOrderSolution& s) { return s.U0; })));
        worst = std::max(worst, relerr(vb.k_l_dot, fd([](const ZerothOrderSolution& s) { return s.k_l; })));
        worst = std::max(worst, relerr(vb.k_u_dot, fd([](const ZerothOrderSolution& s) { return s.k_u; })));
        worst = std::max(worst, relerr(vb.theta_dot_plus, fd([](const ZerothOrderSolution& s) { return s.theta.plus; })));
        worst = std::max(worst, relerr(vb.theta_dot_minus, fd([](const ZerothOrderSolution& s) { return s.theta.minus; })));
        worst = std::max(worst, relerr(vb.c_dot_plus, fd([](const ZerothOrderSolution& s) { return s.c_plus; })));
        worst = std::max(worst, relerr(vb.c_dot_minus, fd([](const ZerothOrderSolution& s) { return s.c_minus; })));
        for (int i = 1; i <= 20; ++i) {
            const double z = sol.L0 + (sol.U0 - sol.L0) * i / 21.0;
            worst = std::max(worst, relerr(eval_vega(vb, z), fd([z](const ZerothOrderSolution& s) {
                                              return eval_v0(s, z);
                                          })));
        }
        MarketParams tiny = kRealSet;
        tiny.lambda = 1e-8;
        const double limit = -kRealSet.mu * kRealSet.mu / (kRealSet.gamma * kSigma * kSigma * kSigma);
        const double limit_err = std::abs(delta_prime(solve_zeroth(tiny, kSigma)) - limit);
        std::ostringstream os;
        os << "vega suite: worst FD rel diff " << worst << " (tol 1e-5), collapse-limit err "
           << limit_err << " (tol 1e-3)";
        return std::make_pair(worst < 1e-5 && limit_err < 1e-3, os.str());
    });

    // 8. Null-correction law at rho = 0 / V3 = 0 / f' = 0
    run(8, [] {
        auto mdl = VolFactorModel::ou_logistic(0.0, 1.0, 0.15, 0.25, 0.0, 1e-3, Regime::Fast);
        auto dist = invariant_distribution(mdl, 64);
        const double V3 = v3(mdl, dist);
        const auto sol = solve_zeroth(kRealSet, kSigma);
        const auto fc = fast_correction(sol, V3);
        auto flat = mdl;
        flat.f = [](double) { return 0.2; };
        flat.f_deriv = [](double) { return 0.0; };
        const double V1 = v1_slow(flat, 0.0);
        const auto scv = slow_correction(kRealSet, kSigma, V1, 0.0);
        const double total = std::abs(V3) + std::abs(fc.delta1) + std::abs(fc.l1) + std::abs(fc.u1) +
                             std::abs(V1) + std::abs(scv.delta1) + std::abs(scv.l1) + std::abs(scv.u1);
        std::ostringstream os;
        os << "null corrections: |V3|+|V1|+all first-order terms = " << total << " (exact zero)";
        return std::make_pair(total == 0.0, os.str());
    });

    // 9. Direction of the boundary shift with V3 = -1 / V1 = -1
    run(9, [] {
        const auto sol = solve_zeroth(kRealSet, kSigma);
        const auto fc = fast_correction(sol, -1.0);
        const auto sc = slow_correction(kRealSet, kSigma, -1.0, 0.0);
        const bool pass = fc.l1 < 0.0 && fc.u1 < 0.0 && sc.l1 < 0.0 && sc.u1 < 0.0;
        std::ostringstream os;
        os << "shift direction: fast (l1=" << fc.l1 << ", u1=" << fc.u1 << "), slow (l1=" << sc.l1
           << ", u1=" << sc.u1 << ") all < 0";
        return std::make_pair(pass, os.str());
    });

    // 10. Monte Carlo consistency (seed pinned)
    run(10, [] {
        std::ostringstream os;
        bool pass = true;

        // constant volatility against r + Delta0
        const auto sol = solve_zeroth(kRealSet, kSigma);
        {
            SimConfig cfg;
            cfg.params = kRealSet;
            cfg.sigma_const = kSigma;
            const double l = sol.L0, u = sol.U0;
            cfg.lower = [l](double) { return l; };
            cfg.upper = [u](double) { return u; };
            cfg.horizon = 50.0;
            cfg.dt = 1.0 / 2500;
            cfg.n_paths = 10000;
            cfg.batch_count = 50;
            cfg.seed = 12345;
            const auto res = simulate_growth(cfg);
            const double target = kRealSet.r + sol.Delta0;
            const double dev = std::abs(res.growth_rate_estimate - target);
            pass = pass && dev < 2.0 * res.standard_error;
            os << "const-vol: est=" << res.growth_rate_estimate << " target=" << target
               << " dev=" << dev << " 2SE=" << 2.0 * res.standard_error << "; ";
        }

        // fast stochastic volatility against r + Delta0(sigma_bar) + sqrt(eps) delta1
        {
            auto mdl = VolFactorModel::ou_logistic(0.0, 1.0, 0.15, 0.25, -0.5, 1e-3, Regime::Fast);
            auto dist = invariant_distribution(mdl, 96);
            const double sb = sigma_bar(mdl, dist);
            const auto solb = solve_zeroth(kRealSet, sb);
            const double V3 = v3(mdl, dist);
            const auto corr = fast_correction(solb, V3);
            const double se_eps = std::sqrt(mdl.epsilon);
            SimConfig cfg;
            cfg.params = kRealSet;
            cfg.model = mdl;
            const double l = solb.L0 + se_eps * corr.l1, u = solb.U0 + se_eps * corr.u1;
            cfg.lower = [l](double) { return l; };
            cfg.upper = [u](double) { return u; };
            cfg.horizon = 50.0;
            cfg.dt = 1.0 / 2500;
            cfg.n_paths = 10000;
            cfg.batch_count = 50;
            cfg.seed = 67890;
            const auto res = simulate_growth(cfg);
            const double target = kRealSet.r + solb.Delta0 + se_eps * corr.delta1;
            const double dev = std::abs(res.growth_rate_estimate - target);
            pass = pass && dev < 2.0 * res.standard_error;
            os << "fast-SV: est=" << res.growth_rate_estimate << " target=" << target
               << " dev=" << dev << " 2SE=" << 2.0 * res.standard_error;
        }
        return std::make_pair(pass, os.str());
    });

    // 11. Byte-identical CLI outputs across two runs
    run(11, [] {
        auto sh = [](const std::string& cmd) { return std::system(cmd.c_str()); };
        const std::string cli = NTBAND_CLI_PATH;
        int rc = 0;
        rc |= sh(cli + " solve --preset fast-real --out acc_solve_a.json");
        rc |= sh(cli + " solve --preset fast-real --out acc_solve_b.json");
        rc |= sh(cli + " sweep --preset fast-real --out acc_sweep_a.csv");
        rc |= sh(cli + " sweep --preset fast-real --out acc_sweep_b.csv");
        const bool same_solve = slurp("acc_solve_a.json") == slurp("acc_solve_b.json");
        const bool same_sweep = slurp("acc_sweep_a.csv") == slurp("acc_sweep_b.csv");
        const bool nonempty = !slurp("acc_solve_a.json").empty() && !slurp("acc_sweep_a.csv").empty();
        for (const char* f : {"acc_solve_a.json", "acc_solve_b.json", "acc_sweep_a.csv",
                              "acc_sweep_b.csv", "acc_sweep_a.csv.meta.json",
                              "acc_sweep_b.csv.meta.json"})
            std::remove(f);
        std::ostringstream os;
        os << "determinism: solve " << (same_solve ? "identical" : "DIFFERS") << ", sweep "
           << (same_sweep ? "identical" : "DIFFERS");
        return std::make_pair(rc == 0 && same_solve && same_sweep && nonempty, os.str());
    });

    int failures = 0;
    for (const auto& c : results) failures += c.pass ? 0 : 1;
    std::printf("acceptance: %d/%zu criteria passed\n", static_cast<int>(results.size()) - failures,
                results.size());
    return failures == 0 ? 0 : 1;
}
