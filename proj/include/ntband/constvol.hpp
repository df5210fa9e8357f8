#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ntband/basis_sum.hpp"
#include "ntband/errors.hpp"
#include "ntband/market.hpp"
#include "ntband/numerics.hpp"

namespace ntband {

enum class ThetaCase { Real, Complex };

inline const char* to_string(ThetaCase c) { return c == ThetaCase::Real ? "real" : "complex"; }

// Roots of (sigma^2/2) theta^2 + (mu - sigma^2/2) theta - (1-gamma) Delta0 = 0.
struct ThetaRoots {
    ThetaCase kind = ThetaCase::Real;
    double plus = 0.0, minus = 0.0; // real case, plus > minus
    double re = 0.0, im = 0.0;      // complex case, im > 0
    double delta() const { return plus - minus; }
};

struct MertonPoint {
    double pi;        // mu / (gamma sigma^2)
    double delta_max; // mu^2 / (2 gamma sigma^2)
};

inline MertonPoint merton(const MarketParams& p, double sigma) {
    p.validate();
    if (!(sigma > 0.0)) throw DomainError("merton: sigma must be positive");
    const double pi_m = p.mu / (p.gamma * sigma * sigma);
    return {pi_m, 0.5 * p.mu * pi_m};
}

namespace detail {

inline double theta_disc(const MarketParams& p, double sigma, double Delta0) {
    const double hs2 = 0.5 * sigma * sigma;
    const double b = p.mu - hs2;
    return b * b + 4.0 * hs2 * (1.0 - p.gamma) * Delta0;
}

inline ThetaRoots theta_at(const MarketParams& p, double sigma, double Delta0) {
    const double hs2 = 0.5 * sigma * sigma;
    const double b = p.mu - hs2;
    const double disc = theta_disc(p, sigma, Delta0);
    ThetaRoots t;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        t.kind = ThetaCase::Real;
        t.plus = (-b + s) / (2.0 * hs2);
        t.minus = (-b - s) / (2.0 * hs2);
    } else {
        t.kind = ThetaCase::Complex;
        t.re = -b / (2.0 * hs2);
        t.im = std::sqrt(-disc) / (2.0 * hs2);
    }
    return t;
}

// Roots of (gamma sigma^2/2) pi^2 - mu pi + Delta0 = 0; requires Delta0 <= delta_max.
inline std::pair<double, double> pi_at(const MarketParams& p, double sigma, double Delta0) {
    const double g2 = p.gamma * sigma * sigma;
    const double rad = p.mu * p.mu - 2.0 * g2 * Delta0;
    const double s = std::sqrt(std::max(0.0, rad));
    return {(p.mu - s) / g2, (p.mu + s) / g2};
}

struct BandGeometry {
    double pi_minus, pi_plus, L0, U0, k_l, k_u;
};

inline BandGeometry band_at(const MarketParams& p, double sigma, double Delta0) {
    const auto [pm, pp] = pi_at(p, sigma, Delta0);
    BandGeometry g;
    g.pi_minus = pm;
    g.pi_plus = pp;
    g.L0 = pm / (1.0 - pm);
    g.U0 = pp / ((1.0 - p.lambda) * (1.0 - pp));
    g.k_l = (1.0 + g.L0) / (1.0 - p.gamma);
    g.k_u = (1.0 / (1.0 - p.lambda) + g.U0) / (1.0 - p.gamma);
    return g;
}

// Determinant objective for the eigenvalue search, normalized so that it stays
// finite and nonzero at the real/complex transition (where theta_+ = theta_-,
// the raw determinant vanishes identically without an eigenvalue).
inline double eigen_objective(const MarketParams& p, double sigma, double Delta0, ThetaCase* kind) {
    const auto g = band_at(p, sigma, Delta0);
    const auto t = theta_at(p, sigma, Delta0);
    if (kind) *kind = t.kind;
    if (t.kind == ThetaCase::Real) {
        const double dth = t.delta();
        const double one_2g = 1.0 - 2.0 * p.gamma;
        const double b1 = t.plus / g.pi_minus + t.minus / g.pi_plus - one_2g;
        const double b2 = t.plus / g.pi_plus + t.minus / g.pi_minus - one_2g;
        const double ratio = std::exp(dth * (std::log(g.L0) - std::log(g.U0)));
        return (b1 * ratio - b2) / dth;
    }
    const double kl_L = g.k_l / g.L0, ku_U = g.k_u / g.U0;
    const double a = t.im * (kl_L - ku_U);
    const double b = (t.re * kl_L - 1.0) * (t.re * ku_U - 1.0) + t.im * t.im * g.k_l * g.k_u / (g.L0 * g.U0);
    const double deta = t.im * std::log(g.U0 / g.L0);
    return (a * std::cos(deta) + b * std::sin(deta)) / t.im;
}

} // namespace detail

// Zeroth-order record: the constant-volatility free-boundary eigen-solution.
struct ZerothOrderSolution {
    MarketParams params;
    double sigma = 0.0;
    double Delta0 = 0.0;
    double pi_minus = 0.0, pi_plus = 0.0;
    double L0 = 0.0, U0 = 0.0;
    ThetaRoots theta;
    double c_plus = 0.0, c_minus = 0.0;
    double k = 0.0;                     // mu / (sigma^2/2)
    double k_l = 0.0, k_u = 0.0;        // boundary constants
    double k_minus = 0.0, k_plus = 0.0; // adjoint boundary constants

    // solver metadata
    std::vector<double> all_roots; // every bracketed eigenvalue, ascending
    double det_residual = 0.0;     // scaled |det M| at Delta0
    bool case_reverified = false;  // discriminant sign at Delta0 matches branch

    BasisSum v0;      // value-function representation
    BasisSum adjoint; // w = zeta^{k-2} v0
};

// Small-lambda case classification (Case I / Case II in terms of k = mu/(sigma^2/2)).
inline ThetaCase classify_case(const MarketParams& p, double sigma) {
    p.validate();
    p.require_merton_bound(sigma);
    if (p.gamma < 1.0) return ThetaCase::Real;
    const double k = p.mu / (0.5 * sigma * sigma);
    const double s = std::sqrt(p.gamma * (p.gamma - 1.0));
    return (k > p.gamma - s && k < p.gamma + s) ? ThetaCase::Complex : ThetaCase::Real;
}

inline ZerothOrderSolution solve_zeroth(const MarketParams& p, double sigma) {
    p.validate();
    p.require_merton_bound(sigma);
    const auto mert = merton(p, sigma);
    if (p.lambda == 0.0) throw CollapsedBandError(mert.pi, mert.delta_max);

    // pi_+ < 1 requires Delta0 > mu - gamma sigma^2 / 2
    const double delta_lo = std::max(0.0, p.mu - 0.5 * p.gamma * sigma * sigma);
    const double delta_hi = mert.delta_max;
    const double span = delta_hi - delta_lo;

    const double disc_scale =
        std::pow(p.mu - 0.5 * sigma * sigma, 2) + 2.0 * sigma * sigma * std::abs(1.0 - p.gamma) * delta_hi;

    auto valid = [&](double d) {
        if (!(d > delta_lo + 1e-9 * span && d <= delta_hi)) return false;
        return std::abs(detail::theta_disc(p, sigma, d)) > 1e-12 * disc_scale;
    };
    auto objective = [&](double d) { return detail::eigen_objective(p, sigma, d, nullptr); };

    const int n_scan = 200;
    const double lo = delta_lo + 1e-6 * span, hi = delta_hi;
    auto brackets = scan_sign_changes(objective, lo, hi, n_scan, valid);
    // a bracket is usable only if both ends sit in the same theta branch
    std::vector<double> roots;
    for (const auto& b : brackets) {
        ThetaCase cl, ch;
        detail::eigen_objective(p, sigma, b.lo, &cl);
        detail::eigen_objective(p, sigma, b.hi, &ch);
        if (cl != ch) {
            // refine each side of the transition separately
            for (const auto& sub : scan_sign_changes(objective, b.lo, b.hi, 64, valid)) {
                ThetaCase sl, sh;
                detail::eigen_objective(p, sigma, sub.lo, &sl);
                detail::eigen_objective(p, sigma, sub.hi, &sh);
                if (sl == sh) roots.push_back(bisect(objective, sub, 1e-13));
            }
            continue;
        }
        roots.push_back(bisect(objective, b, 1e-13));
    }
    if (roots.empty()) {
        std::ostringstream msg;
        msg << "no eigenvalue bracketed on (" << lo << ", " << hi << "); scanned profile:";
        for (int i = 0; i <= 10; ++i) {
            const double d = lo + (hi - lo) * i / 10.0;
            msg << " f(" << d << ")=" << (valid(d) ? objective(d) : std::nan(""));
        }
        throw EigenvalueNotFound(msg.str());
    }
    std::sort(roots.begin(), roots.end());

    ZerothOrderSolution sol;
    sol.params = p;
    sol.sigma = sigma;
    sol.all_roots = roots;
    sol.Delta0 = roots.back(); // largest eigenvalue = optimal rate

    const auto g = detail::band_at(p, sigma, sol.Delta0);
    sol.pi_minus = g.pi_minus;
    sol.pi_plus = g.pi_plus;
    sol.L0 = g.L0;
    sol.U0 = g.U0;
    sol.k_l = g.k_l;
    sol.k_u = g.k_u;
    sol.theta = detail::theta_at(p, sigma, sol.Delta0);
    sol.k = p.mu / (0.5 * sigma * sigma);
    sol.k_minus = (1.0 - p.gamma) * sol.pi_minus + (sol.k - 2.0);
    sol.k_plus = (1.0 - p.gamma) * sol.pi_plus + (sol.k - 2.0);
    sol.case_reverified = true; // theta_at derives the branch from the discriminant itself

    // basis and normalization c_pm = -+ (v_mp(L0) - k_l v_mp'(L0))
    if (sol.theta.kind == ThetaCase::Real) {
        if (std::abs(sol.theta.delta()) < 1e-9)
            throw SolverError("theta_+ - theta_- below guard threshold at the eigenvalue");
        const double thp = sol.theta.plus, thm = sol.theta.minus;
        const double vm = std::pow(sol.L0, thm), vmd = thm * std::pow(sol.L0, thm - 1.0);
        const double vp = std::pow(sol.L0, thp), vpd = thp * std::pow(sol.L0, thp - 1.0);
        sol.c_plus = vm - sol.k_l * vmd;
        sol.c_minus = -(vp - sol.k_l * vpd);
        sol.v0 = BasisSum::power(sol.c_plus, thp) + BasisSum::power(sol.c_minus, thm);
    } else {
        const double tr = sol.theta.re, ti = sol.theta.im, eL = std::log(sol.L0);
        const double powL = std::pow(sol.L0, tr);
        const double vp = powL * std::cos(ti * eL);
        const double vm = powL * std::sin(ti * eL);
        const double vpd = powL / sol.L0 * (tr * std::cos(ti * eL) - ti * std::sin(ti * eL));
        const double vmd = powL / sol.L0 * (tr * std::sin(ti * eL) + ti * std::cos(ti * eL));
        sol.c_plus = vm - sol.k_l * vmd;
        sol.c_minus = -(vp - sol.k_l * vpd);
        sol.v0 = BasisSum::trig_power(sol.c_plus, tr, ti, Trig::Cos) +
                 BasisSum::trig_power(sol.c_minus, tr, ti, Trig::Sin);
    }
    sol.adjoint = sol.v0;
    sol.adjoint.shift_rate(sol.k - 2.0);

    // scaled boundary-matrix determinant at the eigenvalue
    {
        double m11, m12, m21, m22;
        if (sol.theta.kind == ThetaCase::Real) {
            const double thp = sol.theta.plus, thm = sol.theta.minus;
            auto entry = [&](double x, double kx, double th) {
                return std::pow(x, th) - kx * th * std::pow(x, th - 1.0);
            };
            m11 = entry(sol.L0, sol.k_l, thp);
            m12 = entry(sol.L0, sol.k_l, thm);
            m21 = entry(sol.U0, sol.k_u, thp);
            m22 = entry(sol.U0, sol.k_u, thm);
        } else {
            const double tr = sol.theta.re, ti = sol.theta.im;
            auto entry = [&](double x, double kx, bool cosine) {
                const double e = std::log(x), pw = std::pow(x, tr);
                const double v = pw * (cosine ? std::cos(ti * e) : std::sin(ti * e));
                const double vd = pw / x * (cosine ? (tr * std::cos(ti * e) - ti * std::sin(ti * e))
                                                   : (tr * std::sin(ti * e) + ti * std::cos(ti * e)));
                return v - kx * vd;
            };
            m11 = entry(sol.L0, sol.k_l, true);
            m12 = entry(sol.L0, sol.k_l, false);
            m21 = entry(sol.U0, sol.k_u, true);
            m22 = entry(sol.U0, sol.k_u, false);
        }
        const double r1 = std::max(std::abs(m11), std::abs(m12));
        const double r2 = std::max(std::abs(m21), std::abs(m22));
        sol.det_residual = std::abs(m11 * m22 - m12 * m21) / (r1 * r2);
    }
    return sol;
}

// v0 and zeta-derivatives up to order 3 (third derivative feeds the boundary
// corrections).
inline double eval_v0(const ZerothOrderSolution& sol, double zeta, int order = 0) {
    if (!(zeta > 0.0)) throw DomainError("eval_v0: zeta must be positive");
    return sol.v0.eval(zeta, order);
}

// Adjoint eigenfunction w = zeta^{k-2} v0, defined on the band.
inline double eval_w(const ZerothOrderSolution& sol, double zeta, int order = 0) {
    const double tol = 1e-9 * (sol.U0 - sol.L0);
    if (!(zeta >= sol.L0 - tol && zeta <= sol.U0 + tol))
        throw DomainError("eval_w: zeta outside [L0, U0]");
    return sol.adjoint.eval(zeta, order);
}

struct GapDiagnostic {
    double lambda_tilde;  // sqrt(mu^2 - 2 gamma sigma^2 Delta0)
    double leading_coeff; // gamma sigma^2 (3/(4 gamma) pi_M^2 (1-pi_M)^2)^{1/3}
};

// Consistency diagnostic: the gap lambda_tilde should scale like
// leading_coeff * lambda^{1/3} as lambda -> 0.
inline GapDiagnostic gap_diagnostic(const MarketParams& p, double sigma, double Delta0) {
    const auto mert = merton(p, sigma);
    if (Delta0 > mert.delta_max * (1.0 + 1e-12))
        throw DomainError("gap_diagnostic: Delta0 exceeds delta_max");
    const double rad = std::max(0.0, p.mu * p.mu - 2.0 * p.gamma * sigma * sigma * Delta0);
    const double pi_m = mert.pi;
    const double coeff = p.gamma * sigma * sigma *
                         std::cbrt(0.75 / p.gamma * pi_m * pi_m * (1.0 - pi_m) * (1.0 - pi_m));
    return {std::sqrt(rad), coeff};
}

} // namespace ntband
