#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ntband/constvol.hpp"
#include "ntband/fastscale.hpp"
#include "ntband/oracles.hpp"
#include "ntband/slowscale.hpp"

namespace ntband {

struct CheckRow {
    std::string name;
    double value = 0.0; // measured quantity (residual / relative error)
    double tol = 0.0;
    bool pass = false;
    bool expect_fail = false; // negative controls
};

namespace validate_detail {

inline CheckRow row(std::string name, double value, double tol) {
    CheckRow r;
    r.name = std::move(name);
    r.value = value;
    r.tol = tol;
    r.pass = std::abs(value) < tol;
    return r;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

// scaled residual of the buy/sell pasting operators applied to fn at zeta
template <class Fn>
inline double scaled_buy(const Fn& fn, double zeta, double gamma) {
    const double t1 = (1.0 + zeta) * fn(zeta, 1), t2 = (1.0 - gamma) * fn(zeta, 0);
    return (t1 - t2) / std::max(std::abs(t1) + std::abs(t2), 1e-300);
}
template <class Fn>
inline double scaled_buy_prime(const Fn& fn, double zeta, double gamma) {
    const double t1 = (1.0 + zeta) * fn(zeta, 2), t2 = gamma * fn(zeta, 1);
    return (t1 + t2) / std::max(std::abs(t1) + std::abs(t2), 1e-300);
}
template <class Fn>
inline double scaled_sell(const Fn& fn, double zeta, double gamma, double lambda) {
    const double a = 1.0 / (1.0 - lambda) + zeta;
    const double t1 = a * fn(zeta, 1), t2 = (1.0 - gamma) * fn(zeta, 0);
    return (t1 - t2) / std::max(std::abs(t1) + std::abs(t2), 1e-300);
}
template <class Fn>
inline double scaled_sell_prime(const Fn& fn, double zeta, double gamma, double lambda) {
    const double a = 1.0 / (1.0 - lambda) + zeta;
    const double t1 = a * fn(zeta, 2), t2 = gamma * fn(zeta, 1);
    return (t1 + t2) / std::max(std::abs(t1) + std::abs(t2), 1e-300);
}

// Richardson-extrapolated central difference of a field of the re-solved
// zeroth-order problem with respect to sigma.
template <class Field>
inline double fd_sigma(const MarketParams& p, double sigma, double h, const Field& field) {
    const auto d = [&](double step) {
        return (field(solve_zeroth(p, sigma + step)) - field(solve_zeroth(p, sigma - step))) /
               (2.0 * step);
    };
    return (4.0 * d(0.5 * h) - d(h)) / 3.0;
}

} // namespace validate_detail

// Cross-validation suite on the two reference parameter sets. Returns one row per
// check; CLI `validate` prints the table, the acceptance suite aggregates it.
inline std::vector<CheckRow> run_validation_suite() {
    using namespace validate_detail;
    std::vector<CheckRow> rows;
    const MarketParams real_p{0.07, 0.0, 2.0, 0.01};
    const MarketParams cplx_p{0.05, 0.0, 2.0, 0.01};
    const double sigma = 0.2;

    for (const auto& [p, tag] : {std::pair{real_p, std::string("real")},
                                 std::pair{cplx_p, std::string("complex")}}) {
        const auto sol = solve_zeroth(p, sigma);
        const auto sh = shoot_zeroth(p, sigma);
        rows.push_back(row("shoot-vs-closed Delta0 (" + tag + ")", rel(sh.Delta0, sol.Delta0), 1e-7));
        rows.push_back(row("shoot-vs-closed L0 (" + tag + ")", rel(sh.L0, sol.L0), 1e-7));
        rows.push_back(row("shoot-vs-closed U0 (" + tag + ")", rel(sh.U0, sol.U0), 1e-7));

        const double V3 = -1.0;
        const double d1c = delta1_fast(sol, V3);
        const double d1q = delta1_quadrature(sol, V3, Delta1Mode::FastD1D2);
        rows.push_back(row("delta1 fast closed-vs-quadrature (" + tag + ")", rel(d1c, d1q), 1e-8));

        // residual probes
        const auto pts = chebyshev_points(sol.L0, sol.U0, 100);
        auto v0fn = [&](double z) {
            return std::array<double, 4>{eval_v0(sol, z, 0), eval_v0(sol, z, 1),
                                         eval_v0(sol, z, 2), eval_v0(sol, z, 3)};
        };
        rows.push_back(row("v0 ODE residual (" + tag + ")",
                           ode_residual(v0fn, op_lnt(p.mu, p.gamma, sigma, sol.Delta0), pts), 1e-8));
        auto wfn = [&](double z) {
            return std::array<double, 4>{eval_w(sol, z, 0), eval_w(sol, z, 1), eval_w(sol, z, 2),
                                         0.0};
        };
        rows.push_back(row("w adjoint ODE residual (" + tag + ")",
                           ode_residual(wfn, op_lnt_adjoint(p.mu, p.gamma, sigma, sol.Delta0), pts),
                           1e-8));
        // w boundary conditions
        {
            const double bl = sol.L0 * eval_w(sol, sol.L0, 1) - sol.k_minus * eval_w(sol, sol.L0);
            const double sl = std::abs(sol.L0 * eval_w(sol, sol.L0, 1)) +
                              std::abs(sol.k_minus * eval_w(sol, sol.L0));
            const double bu = sol.U0 * eval_w(sol, sol.U0, 1) - sol.k_plus * eval_w(sol, sol.U0);
            const double su = std::abs(sol.U0 * eval_w(sol, sol.U0, 1)) +
                              std::abs(sol.k_plus * eval_w(sol, sol.U0));
            rows.push_back(row("w boundary (" + tag + ")",
                               std::max(std::abs(bl) / sl, std::abs(bu) / su), 1e-8));
        }

        const auto corr = fast_correction(sol, V3);
        auto v1fn4 = [&](double z) {
            return std::array<double, 4>{eval_v1(corr, sol, z, 0), eval_v1(corr, sol, z, 1),
                                         eval_v1(corr, sol, z, 2), 0.0};
        };
        auto src = [&](double z) {
            const double d1d2 = 2.0 * z * z * eval_v0(sol, z, 2) + z * z * z * eval_v0(sol, z, 3);
            return V3 * d1d2 - (1.0 - p.gamma) * d1c * eval_v0(sol, z);
        };
        rows.push_back(row("v1 fast ODE residual (" + tag + ")",
                           ode_residual(v1fn4, op_lnt_with_source(p.mu, p.gamma, sigma, sol.Delta0, src),
                                        pts),
                           1e-8));
        auto v1e = [&](double z, int o) { return eval_v1(corr, sol, z, o); };
        auto v0e = [&](double z, int o) { return eval_v0(sol, z, o); };
        rows.push_back(row("v0 pasting B (" + tag + ")", scaled_buy(v0e, sol.L0, p.gamma), 1e-8));
        rows.push_back(row("v0 pasting B' (" + tag + ")", scaled_buy_prime(v0e, sol.L0, p.gamma), 1e-8));
        rows.push_back(row("v0 pasting S (" + tag + ")", scaled_sell(v0e, sol.U0, p.gamma, p.lambda), 1e-8));
        rows.push_back(
            row("v0 pasting S' (" + tag + ")", scaled_sell_prime(v0e, sol.U0, p.gamma, p.lambda), 1e-8));
        rows.push_back(row("v1 fast boundary B (" + tag + ")", scaled_buy(v1e, sol.L0, p.gamma), 1e-8));
        rows.push_back(
            row("v1 fast boundary S (" + tag + ")", scaled_sell(v1e, sol.U0, p.gamma, p.lambda), 1e-8));
        rows.push_back(row("fast shifts negative (" + tag + ")",
                           (corr.l1 < 0.0 && corr.u1 < 0.0) ? 0.0 : 1.0, 0.5));
    }

    // slow-scale real case: Vega suite and delta1 cross-check
    {
        const MarketParams& p = real_p;
        const auto sol = solve_zeroth(p, sigma);
        const double dpr = delta_prime(sol);
        const double h = 1e-4 * sigma;
        const double dpr_fd = fd_sigma(p, sigma, h, [](const ZerothOrderSolution& s) { return s.Delta0; });
        rows.push_back(row("dpr vs FD", rel(dpr, dpr_fd), 1e-6));

        const auto vb = vega_block(sol, dpr);
        auto check_fd = [&](const std::string& name, double closed, auto field) {
            rows.push_back(row("vega " + name + " vs FD", rel(closed, fd_sigma(p, sigma, h, field)), 1e-5));
        };
        check_fd("pi_dot_minus", vb.pi_dot_minus, [](const ZerothOrderSolution& s) { return s.pi_minus; });
        check_fd("pi_dot_plus", vb.pi_dot_plus, [](const ZerothOrderSolution& s) { return s.pi_plus; });
        check_fd("L0_dot", vb.L0_dot, [](const ZerothOrderSolution& s) { return s.L0; });
        check_fd("U0_dot", vb.U0_dot, [](const ZerothOrderSolution& s) { return s.U0; });
        check_fd("k_l_dot", vb.k_l_dot, [](const ZerothOrderSolution& s) { return s.k_l; });
        check_fd("k_u_dot", vb.k_u_dot, [](const ZerothOrderSolution& s) { return s.k_u; });
        check_fd("theta_dot_plus", vb.theta_dot_plus,
                 [](const ZerothOrderSolution& s) { return s.theta.plus; });
        check_fd("theta_dot_minus", vb.theta_dot_minus,
                 [](const ZerothOrderSolution& s) { return s.theta.minus; });
        check_fd("c_dot_plus", vb.c_dot_plus, [](const ZerothOrderSolution& s) { return s.c_plus; });
        check_fd("c_dot_minus", vb.c_dot_minus, [](const ZerothOrderSolution& s) { return s.c_minus; });

        // vega function vs FD across the band
        double worst = 0.0;
        for (int i = 1; i <= 20; ++i) {
            const double z = sol.L0 + (sol.U0 - sol.L0) * i / 21.0;
            const double fd = fd_sigma(p, sigma, h, [z](const ZerothOrderSolution& s) { return eval_v0(s, z); });
            worst = std::max(worst, rel(eval_vega(vb, z), fd));
        }
        rows.push_back(row("vega function vs FD (20 pts)", worst, 1e-5));

        // lambda -> 0 limit of dpr
        MarketParams tiny = p;
        tiny.lambda = 1e-8;
        const auto sol0 = solve_zeroth(tiny, sigma);
        const double limit = -p.mu * p.mu / (p.gamma * sigma * sigma * sigma);
        rows.push_back(row("dpr lambda->0 limit", std::abs(delta_prime(sol0) - limit), 1e-3));

        // delta1 slow closed vs quadrature (vega evaluator from the closed form)
        const double V1 = -1.0;
        const double d1c = delta1_slow_closed(sol, vb, V1);
        const double d1q = delta1_quadrature(sol, V1, Delta1Mode::SlowVega,
                                             [&](double z, int o) { return eval_vega(vb, z, o); });
        rows.push_back(row("delta1 slow closed-vs-quadrature", rel(d1c, d1q), 1e-7));

        const auto blk = v1_slow_coeffs(sol, vb, V1, d1c);
        const auto pts = chebyshev_points(sol.L0, sol.U0, 100);
        auto v1fn4 = [&](double z) {
            return std::array<double, 4>{blk.v1.eval(z, 0), blk.v1.eval(z, 1), blk.v1.eval(z, 2), 0.0};
        };
        auto src = [&](double z) {
            return V1 * z * eval_vega(vb, z, 1) - (1.0 - p.gamma) * d1c * eval_v0(sol, z);
        };
        rows.push_back(row("v1 slow ODE residual",
                           ode_residual(v1fn4, op_lnt_with_source(p.mu, p.gamma, sigma, sol.Delta0, src), pts),
                           1e-8));
        auto v1e = [&](double z, int o) { return blk.v1.eval(z, o); };
        rows.push_back(row("v1 slow boundary B", scaled_buy(v1e, sol.L0, p.gamma), 1e-8));
        rows.push_back(row("v1 slow boundary S", scaled_sell(v1e, sol.U0, p.gamma, p.lambda), 1e-8));

        const auto sh = boundary_corrections_slow(sol, blk);
        rows.push_back(row("slow shifts negative", (sh.l1 < 0.0 && sh.u1 < 0.0) ? 0.0 : 1.0, 0.5));
    }

    // null-correction law: rho = 0 (V3 = 0, V1 = 0) gives exact zeros
    {
        const auto sol = solve_zeroth(real_p, sigma);
        const auto corr = fast_correction(sol, 0.0);
        const double total = std::abs(corr.delta1) + std::abs(corr.l1) + std::abs(corr.u1);
        rows.push_back(row("null correction V3=0", total, 1e-300 + 1e-15));
        const auto scorr = slow_correction(real_p, sigma, 0.0, 0.0);
        const double stotal = std::abs(scorr.delta1) + std::abs(scorr.l1) + std::abs(scorr.u1);
        rows.push_back(row("null correction V1=0", stotal, 1e-300 + 1e-15));
    }

    // negative control: a perturbed eigenvalue must fail the determinant check
    {
        const auto sol = solve_zeroth(cplx_p, sigma);
        const double d_bad = sol.Delta0 - 1e-3;
        const auto g = detail::band_at(cplx_p, sigma, d_bad);
        const auto t = detail::theta_at(cplx_p, sigma, d_bad);
        double m11, m12, m21, m22;
        if (t.kind == ThetaCase::Real) {
            auto entry = [&](double x, double kx, double th) {
                return std::pow(x, th) - kx * th * std::pow(x, th - 1.0);
            };
            m11 = entry(g.L0, g.k_l, t.plus);
            m12 = entry(g.L0, g.k_l, t.minus);
            m21 = entry(g.U0, g.k_u, t.plus);
            m22 = entry(g.U0, g.k_u, t.minus);
        } else {
            auto entry = [&](double x, double kx, bool cosine) {
                const double e = std::log(x), pw = std::pow(x, t.re);
                const double v = pw * (cosine ? std::cos(t.im * e) : std::sin(t.im * e));
                const double vd = pw / x * (cosine ? (t.re * std::cos(t.im * e) - t.im * std::sin(t.im * e))
                                                   : (t.re * std::sin(t.im * e) + t.im * std::cos(t.im * e)));
                return v - kx * vd;
            };
            m11 = entry(g.L0, g.k_l, true);
            m12 = entry(g.L0, g.k_l, false);
            m21 = entry(g.U0, g.k_u, true);
            m22 = entry(g.U0, g.k_u, false);
        }
        const double r1 = std::max(std::abs(m11), std::abs(m12));
        const double r2 = std::max(std::abs(m21), std::abs(m22));
        const double det = std::abs(m11 * m22 - m12 * m21) / (r1 * r2);
        CheckRow r;
        r.name = "negative control: det check rejects Delta0 - 1e-3";
        r.value = det;
        r.tol = 1e-10;
        r.expect_fail = true;
        r.pass = det > 1e-6; // perturbation must be detected
        rows.push_back(r);
    }

    return rows;
}

} // namespace ntband
