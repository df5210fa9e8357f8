#pragma once

#include <cmath>
#include <functional>

#include "ntband/basis_sum.hpp"
#include "ntband/constvol.hpp"
#include "ntband/errors.hpp"
#include "ntband/fastscale.hpp"
#include "ntband/numerics.hpp"
#include "ntband/oracles.hpp"
#include "ntband/vol_model.hpp"

namespace ntband {

// sigma-derivatives of the zeroth-order solution (the "Vega" algebra).
// Closed forms exist for the real-theta case; the complex case falls back to
// finite differences of re-solved problems.
struct VegaBlock {
    double dpr = 0.0; // d_sigma Delta0
    double pi_dot_minus = 0.0, pi_dot_plus = 0.0;
    double L0_dot = 0.0, U0_dot = 0.0;
    double k_l_dot = 0.0, k_u_dot = 0.0;
    double theta_dot_plus = 0.0, theta_dot_minus = 0.0;
    double c_dot_plus = 0.0, c_dot_minus = 0.0;
    BasisSum vega; // d_sigma V0 as a function of zeta
};

// Delta0'(sigma) by the solvability ratio, avoiding differentiation of the
// transcendental equation:
//   dpr = sigma int w D2 V0 / ((1-gamma) int w V0).
inline double delta_prime(const ZerothOrderSolution& sol) {
    auto numer = integrate_adaptive(
        [&](double z) { return eval_w(sol, z) * z * z * eval_v0(sol, z, 2); }, sol.L0, sol.U0,
        1e-13);
    auto denom = integrate_adaptive([&](double z) { return eval_w(sol, z) * eval_v0(sol, z); },
                                    sol.L0, sol.U0, 1e-13);
    if (std::abs(denom) < 1e-300) throw SolverError("delta_prime: vanishing denominator integral");
    return sol.sigma * numer / ((1.0 - sol.params.gamma) * denom);
}

inline VegaBlock vega_block(const ZerothOrderSolution& sol, double dpr) {
    if (sol.theta.kind == ThetaCase::Complex)
        throw DomainError("vega_block: closed-form Vega algebra covers the real case only; "
                          "use the finite-difference fallback for complex theta");
    const MarketParams& p = sol.params;
    const double sigma = sol.sigma, gamma = p.gamma, mu = p.mu;

    VegaBlock vb;
    vb.dpr = dpr;
    auto pi_dot = [&](double pi) {
        return (dpr + gamma * sigma * pi * pi) / (mu - gamma * sigma * sigma * pi);
    };
    vb.pi_dot_minus = pi_dot(sol.pi_minus);
    vb.pi_dot_plus = pi_dot(sol.pi_plus);
    vb.L0_dot = (1.0 + sol.L0) * (1.0 + sol.L0) * vb.pi_dot_minus;
    const double a = 1.0 / (1.0 - p.lambda) + sol.U0;
    // dU0/dpi_+ = a/(1-pi_+)^2 = (1-lambda) a^2
    vb.U0_dot = (1.0 - p.lambda) * a * a * vb.pi_dot_plus;
    vb.k_l_dot = vb.L0_dot / (1.0 - gamma);
    vb.k_u_dot = vb.U0_dot / (1.0 - gamma);

    auto theta_dot = [&](double th) {
        return (sigma * th * (1.0 - th) + (1.0 - gamma) * dpr) /
               (sigma * sigma * th + (mu - 0.5 * sigma * sigma));
    };
    const double thp = sol.theta.plus, thm = sol.theta.minus;
    vb.theta_dot_plus = theta_dot(thp);
    vb.theta_dot_minus = theta_dot(thm);

    // total sigma-derivative of c_pm = -+(v_mp(L0) - k_l v_mp'(L0)),
    // v_pm = zeta^{theta_pm}
    const double L = sol.L0, lnL = std::log(L);
    auto cdot = [&](double th, double thd, double sign) {
        const double v = std::pow(L, th);
        const double vp = th * std::pow(L, th - 1.0);
        const double vpp = th * (th - 1.0) * std::pow(L, th - 2.0);
        return sign * (vp * vb.L0_dot + v * thd * lnL - vb.L0_dot / (1.0 - gamma) * vp -
                       sol.k_l * (thd * v / L + vpp * vb.L0_dot + vp * thd * lnL));
    };
    vb.c_dot_plus = cdot(thm, vb.theta_dot_minus, +1.0);
    vb.c_dot_minus = cdot(thp, vb.theta_dot_plus, -1.0);

    vb.vega = BasisSum::power(vb.c_dot_plus, thp) +
              BasisSum::power(vb.theta_dot_plus * sol.c_plus, thp, 1) +
              BasisSum::power(vb.c_dot_minus, thm) +
              BasisSum::power(vb.theta_dot_minus * sol.c_minus, thm, 1);
    return vb;
}

inline double eval_vega(const VegaBlock& vb, double zeta, int order = 0) {
    return vb.vega.eval(zeta, order);
}

// Closed-form delta1(z) for real theta: exact antiderivatives of the
// solvability ratio with the Vega source,
//   delta1 = V1 int w D1 (d_sigma V0) / ((1-gamma) int w V0).
inline double delta1_slow_closed(const ZerothOrderSolution& sol, const VegaBlock& vb, double V1) {
    if (V1 == 0.0) return 0.0;
    if (sol.theta.kind != ThetaCase::Real)
        throw DomainError("delta1_slow_closed: real case only");
    const double gamma = sol.params.gamma;
    const double dth = sol.theta.delta();
    const double thp = sol.theta.plus, thm = sol.theta.minus;
    const double cp = sol.c_plus, cm = sol.c_minus;
    const double Qp = thp * vb.c_dot_plus + cp * vb.theta_dot_plus;
    const double Qm = thm * vb.c_dot_minus + cm * vb.theta_dot_minus;
    const double L = sol.L0, U = sol.U0, lnL = std::log(L), lnU = std::log(U);
    const double lr = lnU - lnL;
    const double Rp = std::pow(U, dth) - std::pow(L, dth);
    const double Rm = std::pow(U, -dth) - std::pow(L, -dth);

    double num = cp * Qp * Rp - cm * Qm * Rm + (cp * Qm + cm * Qp) * dth * lr;
    num += cp * cp * thp * vb.theta_dot_plus *
           (std::pow(U, dth) * lnU - std::pow(L, dth) * lnL - Rp / dth);
    num -= cm * cm * thm * vb.theta_dot_minus *
           (std::pow(U, -dth) * lnU - std::pow(L, -dth) * lnL + Rm / dth);
    num += cp * cm * (thp * vb.theta_dot_plus + thm * vb.theta_dot_minus) * dth * 0.5 *
           (lnU * lnU - lnL * lnL);
    const double D = cp * cp * Rp - cm * cm * Rm + 2.0 * cp * cm * dth * lr;
    return V1 * num / ((1.0 - gamma) * D);
}

// v1 coefficient block for the slow real case (gauge xi = 0, C_- = 0).
struct SlowV1Block {
    double c_tilde_plus = 0.0, c_tilde_minus = 0.0;
    double d_tilde_plus = 0.0, d_tilde_minus = 0.0;
    double C_plus = 0.0;
    double fredholm_residual = 0.0;
    BasisSum v1;
};

inline SlowV1Block v1_slow_coeffs(const ZerothOrderSolution& sol, const VegaBlock& vb, double V1,
                                  double delta1) {
    if (sol.theta.kind != ThetaCase::Real)
        throw DomainError("v1_slow_coeffs: real case only");
    const double gamma = sol.params.gamma;
    const double f2 = sol.sigma * sol.sigma;
    const double dth = sol.theta.delta();
    const double thp = sol.theta.plus, thm = sol.theta.minus;
    const double cp = sol.c_plus, cm = sol.c_minus;
    const double Qp = thp * vb.c_dot_plus + cp * vb.theta_dot_plus;
    const double Qm = thm * vb.c_dot_minus + cm * vb.theta_dot_minus;

    SlowV1Block out;
    out.c_tilde_plus = 2.0 / (f2 * dth) * (V1 * Qp - (1.0 - gamma) * delta1 * cp);
    out.c_tilde_minus = 2.0 / (f2 * dth) * (V1 * Qm - (1.0 - gamma) * delta1 * cm);
    out.d_tilde_plus = 2.0 * V1 / (f2 * dth) * cp * thp * vb.theta_dot_plus;
    out.d_tilde_minus = 2.0 * V1 / (f2 * dth) * cm * thm * vb.theta_dot_minus;

    BasisSum part = BasisSum::power(-(out.c_tilde_plus - out.d_tilde_plus / dth), thp, 1) +
                    BasisSum::power(out.c_tilde_minus + out.d_tilde_minus / dth, thm, 1) +
                    BasisSum::power(-0.5 * out.d_tilde_plus, thp, 2) +
                    BasisSum::power(0.5 * out.d_tilde_minus, thm, 2);

    const double m11 = sol.k_l * thp * std::pow(sol.L0, thp - 1.0) - std::pow(sol.L0, thp);
    const double b1 = -detail::apply_buy(part, sol.L0, gamma) / (1.0 - gamma);
    if (std::abs(m11) <
        1e-14 * (std::abs(sol.k_l * thp * std::pow(sol.L0, thp - 1.0)) + std::pow(sol.L0, thp)))
        throw InternalConsistencyError("v1_slow_coeffs: reduced system is singular (M11 ~ 0)");
    out.C_plus = b1 / m11;
    out.v1 = BasisSum::power(out.C_plus, thp) + part;

    const double m21 = sol.k_u * thp * std::pow(sol.U0, thp - 1.0) - std::pow(sol.U0, thp);
    const double b2 = -detail::apply_sell(part, sol.U0, gamma, sol.params.lambda) / (1.0 - gamma);
    const double scale = std::abs(m21 * out.C_plus) + std::abs(b2);
    out.fredholm_residual = (scale > 0.0) ? std::abs(m21 * out.C_plus - b2) / scale : 0.0;
    return out;
}

inline BoundaryShifts boundary_corrections_slow(const ZerothOrderSolution& sol,
                                                const SlowV1Block& blk) {
    return detail::boundary_shifts(
        sol, [&](double z, int order) { return blk.v1.empty() ? 0.0 : blk.v1.eval(z, order); });
}

// Full slow-scale correction at one factor level.
struct SlowCorrection {
    double z = 0.0;
    double sigma_z = 0.0;
    double V1 = 0.0;
    double delta1 = 0.0;
    double l1 = 0.0, u1 = 0.0;
    ThetaCase kind = ThetaCase::Real;
    bool numeric_path = false; // complex case: quadrature + numeric integration

    // real-case algebra intermediates
    double Q_plus = 0.0, Q_minus = 0.0, R_plus = 0.0, R_minus = 0.0, D = 0.0;
    SlowV1Block coeffs;
    VegaBlock vega;
};

namespace detail {

// Complex-theta slow correction: d_sigma V0 by centered differences of
// re-solves, delta1 by quadrature, v1 by numeric variation of parameters with
// A_pm(L0) = 0 and C_+ fixed by the sell condition at U0.
inline SlowCorrection slow_correction_numeric(const ZerothOrderSolution& sol, double V1, double z) {
    SlowCorrection out;
    out.z = z;
    out.sigma_z = sol.sigma;
    out.V1 = V1;
    out.kind = sol.theta.kind;
    out.numeric_path = true;
    if (V1 == 0.0) return out;

    const MarketParams& p = sol.params;
    const double gamma = p.gamma;
    // Richardson-extrapolated centered differences of re-solves for d_sigma V0
    const double h = 1e-4 * sol.sigma;
    const auto sol_lo = solve_zeroth(p, sol.sigma - h);
    const auto sol_hi = solve_zeroth(p, sol.sigma + h);
    const auto sol_lo2 = solve_zeroth(p, sol.sigma - 0.5 * h);
    const auto sol_hi2 = solve_zeroth(p, sol.sigma + 0.5 * h);
    auto vega = [&](double zeta, int order) {
        const double d1 = (eval_v0(sol_hi, zeta, order) - eval_v0(sol_lo, zeta, order)) / (2.0 * h);
        const double d2 = (eval_v0(sol_hi2, zeta, order) - eval_v0(sol_lo2, zeta, order)) / h;
        return (4.0 * d2 - d1) / 3.0;
    };
    out.delta1 = delta1_quadrature(sol, V1, Delta1Mode::SlowVega, vega);

    const double tr = sol.theta.re, ti = sol.theta.im;
    const BasisSum vp = BasisSum::trig_power(1.0, tr, ti, Trig::Cos);
    const BasisSum vm = BasisSum::trig_power(1.0, tr, ti, Trig::Sin);
    auto F = [&](double zeta) {
        const double src = -V1 * zeta * vega(zeta, 1) + (1.0 - gamma) * out.delta1 * eval_v0(sol, zeta);
        return src / (0.5 * sol.sigma * sol.sigma * zeta * zeta);
    };
    auto wronsk = [&](double zeta) { return ti * std::pow(zeta, 2.0 * tr - 1.0); };
    auto Aplus = [&](double zeta) {
        return -integrate_adaptive([&](double u) { return vm.eval(u) * F(u) / wronsk(u); }, sol.L0,
                                   zeta, 1e-13);
    };
    auto Aminus = [&](double zeta) {
        return integrate_adaptive([&](double u) { return vp.eval(u) * F(u) / wronsk(u); }, sol.L0,
                                  zeta, 1e-13);
    };
    // particular solution and derivatives (A' v terms cancel at first order;
    // second derivative picks up the source F)
    auto part = [&](double zeta, int order) {
        const double ap = Aplus(zeta), am = Aminus(zeta);
        if (order == 0) return ap * vp.eval(zeta) + am * vm.eval(zeta);
        if (order == 1) return ap * vp.eval(zeta, 1) + am * vm.eval(zeta, 1);
        return ap * vp.eval(zeta, 2) + am * vm.eval(zeta, 2) + F(zeta);
    };
    const double a = 1.0 / (1.0 - p.lambda) + sol.U0;
    const double sell_part = a * part(sol.U0, 1) - (1.0 - gamma) * part(sol.U0, 0);
    const double sell_vp = a * vp.eval(sol.U0, 1) - (1.0 - gamma) * vp.eval(sol.U0);
    if (std::abs(sell_vp) < 1e-300)
        throw InternalConsistencyError("slow numeric v1: S v_+ vanishes at U0");
    const double Cp = -sell_part / sell_vp;
    out.coeffs.C_plus = Cp;
    auto v1 = [&](double zeta, int order) { return Cp * vp.eval(zeta, order) + part(zeta, order); };
    const auto shifts = detail::boundary_shifts(sol, v1);
    out.l1 = shifts.l1;
    out.u1 = shifts.u1;
    return out;
}

} // namespace detail

// delta1(z) and the rest of the slow block, built from the zeroth-order solve
// at sigma = f(z). Real theta takes the closed forms; complex theta is
// computed numerically and flagged.
inline SlowCorrection slow_correction(const MarketParams& params, double sigma_z, double V1,
                                      double z = 0.0) {
    const auto sol = solve_zeroth(params, sigma_z);
    if (sol.theta.kind == ThetaCase::Complex)
        return detail::slow_correction_numeric(sol, V1, z);

    SlowCorrection out;
    out.z = z;
    out.sigma_z = sigma_z;
    out.V1 = V1;
    out.kind = sol.theta.kind;
    const double dpr = delta_prime(sol);
    out.vega = vega_block(sol, dpr);
    out.delta1 = delta1_slow_closed(sol, out.vega, V1);
    out.coeffs = v1_slow_coeffs(sol, out.vega, V1, out.delta1);
    const auto shifts = boundary_corrections_slow(sol, out.coeffs);
    out.l1 = shifts.l1;
    out.u1 = shifts.u1;

    const double dth = sol.theta.delta();
    out.Q_plus = sol.theta.plus * out.vega.c_dot_plus + sol.c_plus * out.vega.theta_dot_plus;
    out.Q_minus = sol.theta.minus * out.vega.c_dot_minus + sol.c_minus * out.vega.theta_dot_minus;
    out.R_plus = std::pow(sol.U0, dth) - std::pow(sol.L0, dth);
    out.R_minus = std::pow(sol.U0, -dth) - std::pow(sol.L0, -dth);
    out.D = sol.c_plus * sol.c_plus * out.R_plus - sol.c_minus * sol.c_minus * out.R_minus +
            2.0 * sol.c_plus * sol.c_minus * dth * std::log(sol.U0 / sol.L0);
    return out;
}

// Model-level entry point: correction at factor level z for a full model.
inline SlowCorrection delta1_slow(const VolFactorModel& model, const MarketParams& params,
                                  double z) {
    model.validate();
    const double sigma_z = model.f(z);
    const double V1 = v1_slow(model, z);
    return slow_correction(params, sigma_z, V1, z);
}

} // namespace ntband
