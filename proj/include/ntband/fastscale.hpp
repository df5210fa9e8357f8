#pragma once

#include <array>
#include <cmath>

#include "ntband/basis_sum.hpp"
#include "ntband/constvol.hpp"
#include "ntband/errors.hpp"

namespace ntband {

// First-order fast-scale correction block. All entries scale linearly with the
// group parameter V3; l1 and u1 are constants, independent of the factor level.
struct FastCorrection {
    double V3 = 0.0;
    double delta1 = 0.0;
    double l1 = 0.0, u1 = 0.0;
    double xi = 0.0; // gauge multiple of v0, fixed to zero
    ThetaCase kind = ThetaCase::Real;

    struct RealCoeffs {
        double C_plus = 0.0, c_tilde_plus = 0.0, c_tilde_minus = 0.0;
    } real;
    struct ComplexCoeffs {
        double C_plus = 0.0, q_plus = 0.0, q_minus = 0.0, q_tilde_plus = 0.0, q_tilde_minus = 0.0;
    } cplx;

    double fredholm_residual = 0.0; // scaled residual of the second boundary row
    BasisSum v1;                    // particular solution, xi = 0, C_- = 0
};

namespace detail {

// apply the buy operator B to a representation at zeta
inline double apply_buy(const BasisSum& fn, double zeta, double gamma) {
    double d[2];
    fn.eval_zeta(zeta, std::span<double>(d, 2));
    return (1.0 + zeta) * d[1] - (1.0 - gamma) * d[0];
}

inline double apply_sell(const BasisSum& fn, double zeta, double gamma, double lambda) {
    double d[2];
    fn.eval_zeta(zeta, std::span<double>(d, 2));
    return (1.0 / (1.0 - lambda) + zeta) * d[1] - (1.0 - gamma) * d[0];
}

struct Mat2 {
    double re, im;
};

} // namespace detail

// Growth-rate correction delta1 = V3/(1-gamma) * int w D1 D2 v0 / int w v0,
// evaluated by the case-appropriate closed form.
inline double delta1_fast(const ZerothOrderSolution& sol, double V3) {
    if (V3 == 0.0) return 0.0;
    const double gamma = sol.params.gamma;
    const double lr = std::log(sol.U0 / sol.L0);
    if (sol.theta.kind == ThetaCase::Real) {
        const double dth = sol.theta.delta();
        if (std::abs(dth) < 1e-9)
            throw SolverError("delta1_fast: theta_+ - theta_- below guard threshold");
        const double thp = sol.theta.plus, thm = sol.theta.minus;
        const double Lp = (thp - 1.0) * thp * thp;
        const double Lm = (thm - 1.0) * thm * thm;
        const double Rp = std::pow(sol.U0, dth) - std::pow(sol.L0, dth);
        const double Rm = std::pow(sol.U0, -dth) - std::pow(sol.L0, -dth);
        const double cp = sol.c_plus, cm = sol.c_minus;
        const double num = Lp * cp * cp * Rp - Lm * cm * cm * Rm + cp * cm * dth * (Lp + Lm) * lr;
        const double den = cp * cp * Rp - cm * cm * Rm + 2.0 * cp * cm * dth * lr;
        return V3 / (1.0 - gamma) * num / den;
    }
    // complex case: q = (Theta^3 - Theta^2) c with Theta the rotation-scaling
    // matrix of (theta_r, theta_i)
    const double tr = sol.theta.re, ti = sol.theta.im;
    auto mul = [](const std::array<double, 4>& A, const std::array<double, 4>& B) {
        return std::array<double, 4>{A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3],
                                     A[2] * B[0] + A[3] * B[2], A[2] * B[1] + A[3] * B[3]};
    };
    const std::array<double, 4> Th = {tr, ti, -ti, tr};
    const auto Th2 = mul(Th, Th);
    const auto Th3 = mul(Th2, Th);
    const double cp = sol.c_plus, cm = sol.c_minus;
    const double qp = (Th3[0] - Th2[0]) * cp + (Th3[1] - Th2[1]) * cm;
    const double qm = (Th3[2] - Th2[2]) * cp + (Th3[3] - Th2[3]) * cm;
    // [ (a.b-hat)/2 sin(2 ti eta) + (a.b) ti eta - (a.b-check)/2 cos(2 ti eta) ]
    auto bracket = [&](double bp, double bm, double eta) {
        const double hat = cp * bp - cm * bm;
        const double dot = cp * bp + cm * bm;
        const double chk = cp * bm + cm * bp;
        return 0.5 * hat * std::sin(2.0 * ti * eta) + dot * ti * eta -
               0.5 * chk * std::cos(2.0 * ti * eta);
    };
    const double el = std::log(sol.L0), eu = std::log(sol.U0);
    const double i1 = bracket(qp, qm, eu) - bracket(qp, qm, el);
    const double i2 = bracket(cp, cm, eu) - bracket(cp, cm, el);
    return V3 / (1.0 - gamma) * i1 / i2;
}

// Coefficients of v1 in the gauge xi = 0, C_- = 0. The particular part is the
// variation-of-parameters solution; C_+ enforces B v1 = 0 at L0 and the sell
// condition at U0 then holds by Fredholm solvability (residual recorded).
inline FastCorrection v1_fast(const ZerothOrderSolution& sol, double V3, double delta1) {
    FastCorrection out;
    out.V3 = V3;
    out.delta1 = delta1;
    out.kind = sol.theta.kind;
    const double gamma = sol.params.gamma;
    const double hs2 = 0.5 * sol.sigma * sol.sigma;

    if (sol.theta.kind == ThetaCase::Real) {
        const double dth = sol.theta.delta();
        if (std::abs(dth) < 1e-9)
            throw SolverError("v1_fast: theta_+ - theta_- below guard threshold");
        const double thp = sol.theta.plus, thm = sol.theta.minus;
        const double Lp = (thp - 1.0) * thp * thp;
        const double Lm = (thm - 1.0) * thm * thm;
        const double ctp = -sol.c_plus * ((1.0 - gamma) * delta1 - V3 * Lp) / (hs2 * dth);
        const double ctm = -sol.c_minus * ((1.0 - gamma) * delta1 - V3 * Lm) / (hs2 * dth);
        out.real.c_tilde_plus = ctp;
        out.real.c_tilde_minus = ctm;

        BasisSum part = BasisSum::power(-ctp, thp, 1) + BasisSum::power(ctm, thm, 1);
        const double m11 = sol.k_l * thp * std::pow(sol.L0, thp - 1.0) - std::pow(sol.L0, thp);
        if (std::abs(m11) < 1e-14 * (std::abs(sol.k_l * thp * std::pow(sol.L0, thp - 1.0)) +
                                     std::pow(sol.L0, thp)))
            throw InternalConsistencyError("v1_fast: reduced system is singular (M11 ~ 0)");
        const double b1 = -detail::apply_buy(part, sol.L0, gamma) / (1.0 - gamma);
        const double Cp = b1 / m11;
        out.real.C_plus = Cp;
        out.v1 = BasisSum::power(Cp, thp) + part;

        const double m21 = sol.k_u * thp * std::pow(sol.U0, thp - 1.0) - std::pow(sol.U0, thp);
        const double b2 = -detail::apply_sell(part, sol.U0, gamma, sol.params.lambda) / (1.0 - gamma);
        const double scale = std::abs(m21 * Cp) + std::abs(b2);
        out.fredholm_residual = (scale > 0.0) ? std::abs(m21 * Cp - b2) / scale : 0.0;
        return out;
    }

    // complex case
    const double tr = sol.theta.re, ti = sol.theta.im;
    const double cp = sol.c_plus, cm = sol.c_minus;
    auto mul = [](const std::array<double, 4>& A, const std::array<double, 4>& B) {
        return std::array<double, 4>{A[0] * B[0] + A[1] * B[2], A[0] * B[1] + A[1] * B[3],
                                     A[2] * B[0] + A[3] * B[2], A[2] * B[1] + A[3] * B[3]};
    };
    const std::array<double, 4> Th = {tr, ti, -ti, tr};
    const auto Th2 = mul(Th, Th);
    const auto Th3 = mul(Th2, Th);
    const double qp = (Th3[0] - Th2[0]) * cp + (Th3[1] - Th2[1]) * cm;
    const double qm = (Th3[2] - Th2[2]) * cp + (Th3[3] - Th2[3]) * cm;
    const double qtp = (-V3 * qp + (1.0 - gamma) * delta1 * cp) / hs2;
    const double qtm = (-V3 * qm + (1.0 - gamma) * delta1 * cm) / hs2;
    out.cplx.q_plus = qp;
    out.cplx.q_minus = qm;
    out.cplx.q_tilde_plus = qtp;
    out.cplx.q_tilde_minus = qtm;

    const BasisSum vplus = BasisSum::trig_power(1.0, tr, ti, Trig::Cos);
    const BasisSum vminus = BasisSum::trig_power(1.0, tr, ti, Trig::Sin);
    // A_+ = -(qtm/(2 ti)) log z + (qtm/(4 ti^2)) sin(2 ti log z) + (qtp/(4 ti^2)) cos(2 ti log z)
    BasisSum Ap = BasisSum::power(-qtm / (2.0 * ti), 0.0, 1) +
                  BasisSum::trig_power(qtm / (4.0 * ti * ti), 0.0, 2.0 * ti, Trig::Sin) +
                  BasisSum::trig_power(qtp / (4.0 * ti * ti), 0.0, 2.0 * ti, Trig::Cos);
    BasisSum Am = BasisSum::power(qtp / (2.0 * ti), 0.0, 1) +
                  BasisSum::trig_power(qtp / (4.0 * ti * ti), 0.0, 2.0 * ti, Trig::Sin) +
                  BasisSum::trig_power(-qtm / (4.0 * ti * ti), 0.0, 2.0 * ti, Trig::Cos);
    BasisSum part = Ap * vplus + Am * vminus;

    const double denom = detail::apply_buy(vplus, sol.L0, gamma);
    if (std::abs(denom) < 1e-300)
        throw InternalConsistencyError("v1_fast: B v_+ vanishes at L0");
    const double Cp = -detail::apply_buy(part, sol.L0, gamma) / denom;
    out.cplx.C_plus = Cp;
    out.v1 = Cp * vplus + part;

    const double su = detail::apply_sell(out.v1, sol.U0, gamma, sol.params.lambda);
    double d2[2];
    out.v1.eval_zeta(sol.U0, std::span<double>(d2, 2));
    const double scale = std::abs((1.0 / (1.0 - sol.params.lambda) + sol.U0) * d2[1]) +
                         std::abs((1.0 - gamma) * d2[0]);
    out.fredholm_residual = (scale > 0.0) ? std::abs(su) / scale : 0.0;
    return out;
}

// v1 and derivatives up to order 2 (gauge term xi * v0 included if nonzero).
inline double eval_v1(const FastCorrection& corr, const ZerothOrderSolution& sol, double zeta,
                      int order = 0) {
    if (!(zeta > 0.0)) throw DomainError("eval_v1: zeta must be positive");
    if (order < 0 || order > 2) throw DomainError("eval_v1: order must be 0..2");
    double v = corr.v1.empty() ? 0.0 : corr.v1.eval(zeta, order);
    if (corr.xi != 0.0) v += corr.xi * sol.v0.eval(zeta, order);
    return v;
}

struct BoundaryShifts {
    double l1 = 0.0, u1 = 0.0;
};

namespace detail {

template <class V1Eval>
inline BoundaryShifts boundary_shifts(const ZerothOrderSolution& sol, V1Eval&& v1) {
    const double gamma = sol.params.gamma;
    const double v0_2L = eval_v0(sol, sol.L0, 2), v0_3L = eval_v0(sol, sol.L0, 3);
    const double v0_2U = eval_v0(sol, sol.U0, 2), v0_3U = eval_v0(sol, sol.U0, 3);
    const double denL = (1.0 + sol.L0) * v0_3L + (1.0 + gamma) * v0_2L;
    const double a = 1.0 / (1.0 - sol.params.lambda) + sol.U0;
    const double denU = a * v0_3U + (1.0 + gamma) * v0_2U;
    const double scaleL = std::abs((1.0 + sol.L0) * v0_3L) + std::abs((1.0 + gamma) * v0_2L);
    const double scaleU = std::abs(a * v0_3U) + std::abs((1.0 + gamma) * v0_2U);
    if (std::abs(denL) < 1e-12 * scaleL || std::abs(denU) < 1e-12 * scaleU)
        throw SolverError("boundary correction: degenerate boundary (vanishing denominator)");
    BoundaryShifts s;
    s.l1 = -((1.0 + sol.L0) * v1(sol.L0, 2) + gamma * v1(sol.L0, 1)) / denL;
    s.u1 = -(a * v1(sol.U0, 2) + gamma * v1(sol.U0, 1)) / denU;
    return s;
}

} // namespace detail

inline BoundaryShifts boundary_corrections_fast(const ZerothOrderSolution& sol,
                                                const FastCorrection& corr) {
    return detail::boundary_shifts(
        sol, [&](double z, int order) { return eval_v1(corr, sol, z, order); });
}

// Full first-order fast block for a given group parameter.
inline FastCorrection fast_correction(const ZerothOrderSolution& sol, double V3) {
    const double d1 = delta1_fast(sol, V3);
    FastCorrection corr = v1_fast(sol, V3, d1);
    const auto s = boundary_corrections_fast(sol, corr);
    corr.l1 = s.l1;
    corr.u1 = s.u1;
    return corr;
}

} // namespace ntband
