#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "ntband/constvol.hpp"
#include "ntband/market.hpp"
#include "ntband/numerics.hpp"

namespace ntband {

// ---------------------------------------------------------------------------
// finite differences
// ---------------------------------------------------------------------------

inline double finite_diff(const std::function<double(double)>& fn, double x, double h,
                          bool richardson = false) {
    if (!(h > 0.0)) throw DomainError("finite_diff: h must be positive");
    auto central = [&](double step) { return (fn(x + step) - fn(x - step)) / (2.0 * step); };
    if (!richardson) return central(h);
    const double d1 = central(h), d2 = central(0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
}

// ---------------------------------------------------------------------------
// ODE residual probes
// ---------------------------------------------------------------------------

// fn returns (f, f', f'', f''') at zeta; op returns (residual, scale).
using Fn4 = std::function<std::array<double, 4>(double)>;
using OpFn = std::function<std::pair<double, double>(double, const std::array<double, 4>&)>;

inline double ode_residual(const Fn4& fn, const OpFn& op, std::span<const double> pts) {
    double worst = 0.0;
    for (const double z : pts) {
        const auto d = fn(z);
        const auto [res, scale] = op(z, d);
        worst = std::max(worst, std::abs(res) / std::max(scale, 1e-300));
    }
    return worst;
}

// L_NT(sigma; delta) f = (sigma^2/2) zeta^2 f'' + mu zeta f' - (1-gamma) delta f
inline OpFn op_lnt(double mu, double gamma, double sigma, double delta0) {
    return [=](double z, const std::array<double, 4>& d) {
        const double t1 = 0.5 * sigma * sigma * z * z * d[2];
        const double t2 = mu * z * d[1];
        const double t3 = -(1.0 - gamma) * delta0 * d[0];
        return std::make_pair(t1 + t2 + t3, std::abs(t1) + std::abs(t2) + std::abs(t3));
    };
}

// adjoint: (sigma^2/2) (zeta^2 w)'' - mu (zeta w)' - (1-gamma) delta0 w
inline OpFn op_lnt_adjoint(double mu, double gamma, double sigma, double delta0) {
    return [=](double z, const std::array<double, 4>& d) {
        const double t1 = 0.5 * sigma * sigma * (z * z * d[2] + 4.0 * z * d[1] + 2.0 * d[0]);
        const double t2 = -mu * (d[0] + z * d[1]);
        const double t3 = -(1.0 - gamma) * delta0 * d[0];
        return std::make_pair(t1 + t2 + t3, std::abs(t1) + std::abs(t2) + std::abs(t3));
    };
}

// L_NT f + source(zeta) with source supplied by the caller
inline OpFn op_lnt_with_source(double mu, double gamma, double sigma, double delta0,
                               std::function<double(double)> source) {
    return [=, src = std::move(source)](double z, const std::array<double, 4>& d) {
        const double t1 = 0.5 * sigma * sigma * z * z * d[2];
        const double t2 = mu * z * d[1];
        const double t3 = -(1.0 - gamma) * delta0 * d[0];
        const double s = src(z);
        return std::make_pair(t1 + t2 + t3 + s,
                              std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(s));
    };
}

inline std::vector<double> chebyshev_points(double a, double b, int n) {
    std::vector<double> pts(n);
    for (int i = 0; i < n; ++i) {
        const double x = std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * n));
        pts[i] = 0.5 * (a + b) + 0.5 * (b - a) * x;
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Shooting solver for the zeroth-order free-boundary eigenvalue problem.
// Ground truth for solve_zeroth: integrates the ODE numerically with RK45 and
// adjusts (Delta0, L0, U0) until the upper smooth-pasting conditions hold.
// Shares no basis-function code with the closed-form path.
// ---------------------------------------------------------------------------

struct ShootingResult {
    double Delta0 = 0.0, L0 = 0.0, U0 = 0.0;
    std::vector<std::array<double, 3>> grid_values; // (zeta, v, v')
    bool converged = false;
    int iterations = 0;
    std::array<double, 4> residuals{}; // scaled: Bv(L0), B'v(L0), Sv(U0), S'v(U0)
};

namespace detail {

struct ShootEval {
    std::array<double, 3> res; // scaled residuals of B'v(L0), Sv(U0), S'v(U0)
    double vU, vpU;
};

inline ShootEval shoot_once(const MarketParams& p, double sigma, double Delta0, double L0,
                            double U0) {
    const double gamma = p.gamma, mu = p.mu;
    auto vpp = [&](double z, double v, double vp) {
        return ((1.0 - gamma) * Delta0 * v - mu * z * vp) / (0.5 * sigma * sigma * z * z);
    };
    const double v0 = 1.0;
    const double vp0 = (1.0 - gamma) * v0 / (1.0 + L0); // B v = 0 at L0, fixes the scale
    auto rhs = [&](double z, const std::array<double, 2>& y) {
        return std::array<double, 2>{y[1], vpp(z, y[0], y[1])};
    };
    const auto yU = integrate_rk45<2>(rhs, L0, U0, {v0, vp0}, 1e-11, 1e-14);

    ShootEval ev;
    const double bprime = (1.0 + L0) * vpp(L0, v0, vp0) + gamma * vp0;
    const double bprime_scale = std::abs((1.0 + L0) * vpp(L0, v0, vp0)) + std::abs(gamma * vp0);
    const double a = 1.0 / (1.0 - p.lambda) + U0;
    const double sell = a * yU[1] - (1.0 - gamma) * yU[0];
    const double sell_scale = std::abs(a * yU[1]) + std::abs((1.0 - gamma) * yU[0]);
    const double sellp = a * vpp(U0, yU[0], yU[1]) + gamma * yU[1];
    const double sellp_scale = std::abs(a * vpp(U0, yU[0], yU[1])) + std::abs(gamma * yU[1]);
    ev.res = {bprime / std::max(bprime_scale, 1e-300), sell / std::max(sell_scale, 1e-300),
              sellp / std::max(sellp_scale, 1e-300)};
    ev.vU = yU[0];
    ev.vpU = yU[1];
    return ev;
}

} // namespace detail

inline ShootingResult shoot_zeroth(const MarketParams& p, double sigma,
                                   std::optional<std::array<double, 3>> init_guess = std::nullopt) {
    p.validate();
    p.require_merton_bound(sigma);
    if (p.lambda <= 0.0) throw DomainError("shoot_zeroth: lambda must be positive");
    const auto mert = merton(p, sigma);

    double D0, L0, U0;
    if (init_guess) {
        D0 = (*init_guess)[0];
        L0 = (*init_guess)[1];
        U0 = (*init_guess)[2];
    } else {
        // small-cost width asymptotics as an independent starting point
        const double pim = mert.pi;
        double dpi = std::cbrt(0.75 / p.gamma * pim * pim * (1.0 - pim) * (1.0 - pim) * p.lambda);
        dpi = std::min(dpi, 0.45 * std::min(pim, 1.0 - pim));
        const double pm = pim - dpi, pp = pim + dpi;
        D0 = mert.delta_max - 0.5 * p.gamma * sigma * sigma * dpi * dpi;
        L0 = pm / (1.0 - pm);
        U0 = pp / ((1.0 - p.lambda) * (1.0 - pp));
    }

    // scaled unknowns: (Delta0/delta_max, log L0, log U0)
    std::array<double, 3> u = {D0 / mert.delta_max, std::log(L0), std::log(U0)};
    auto eval = [&](const std::array<double, 3>& x) {
        return detail::shoot_once(p, sigma, x[0] * mert.delta_max, std::exp(x[1]), std::exp(x[2]))
            .res;
    };

    auto norm_inf = [](const std::array<double, 3>& r) {
        return std::max({std::abs(r[0]), std::abs(r[1]), std::abs(r[2])});
    };

    ShootingResult out;
    std::array<double, 3> r = eval(u);
    const int max_iter = 80;
    int it = 0;
    for (; it < max_iter && norm_inf(r) > 1e-11; ++it) {
        // finite-difference Jacobian
        double J[3][3];
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(u[j]));
            auto up = u;
            up[j] += h;
            const auto rp = eval(up);
            for (int i = 0; i < 3; ++i) J[i][j] = (rp[i] - r[i]) / h;
        }
        // solve J s = -r by Gaussian elimination with partial pivoting
        std::array<double, 3> s = {-r[0], -r[1], -r[2]};
        int piv[3] = {0, 1, 2};
        for (int c = 0; c < 3; ++c) {
            int best = c;
            for (int rr = c + 1; rr < 3; ++rr)
                if (std::abs(J[piv[rr]][c]) > std::abs(J[piv[best]][c])) best = rr;
            std::swap(piv[c], piv[best]);
            const double d = J[piv[c]][c];
            if (d == 0.0) throw SolverError("shoot_zeroth: singular Jacobian");
            for (int rr = c + 1; rr < 3; ++rr) {
                const double fac = J[piv[rr]][c] / d;
                for (int cc = c; cc < 3; ++cc) J[piv[rr]][cc] -= fac * J[piv[c]][cc];
                s[piv[rr]] -= fac * s[piv[c]];
            }
        }
        std::array<double, 3> step;
        for (int c = 2; c >= 0; --c) {
            double acc = s[piv[c]];
            for (int cc = c + 1; cc < 3; ++cc) acc -= J[piv[c]][cc] * step[cc];
            step[c] = acc / J[piv[c]][c];
        }
        // damped update
        double t = 1.0;
        const double r0 = norm_inf(r);
        for (int back = 0; back < 10; ++back) {
            std::array<double, 3> un = {u[0] + t * step[0], u[1] + t * step[1], u[2] + t * step[2]};
            if (un[0] > 0.0 && un[0] < 1.0 + 1e-12 && un[1] < un[2]) {
                const auto rn = eval(un);
                if (norm_inf(rn) < r0 || t < 1e-3) {
                    u = un;
                    r = rn;
                    break;
                }
            }
            t *= 0.5;
        }
    }

    out.iterations = it;
    out.Delta0 = u[0] * mert.delta_max;
    out.L0 = std::exp(u[1]);
    out.U0 = std::exp(u[2]);
    out.residuals = {0.0, r[0], r[1], r[2]}; // Bv(L0) = 0 by construction
    out.converged = norm_inf(r) <= 1e-9;
    if (!out.converged) {
        std::ostringstream msg;
        msg << "shoot_zeroth: no convergence after " << it << " iterations; residuals = (" << r[0]
            << ", " << r[1] << ", " << r[2] << ")";
        throw SolverError(msg.str());
    }

    // sampled profile
    const int n_grid = 65;
    auto vpp = [&](double z, double v, double vp) {
        return ((1.0 - p.gamma) * out.Delta0 * v - p.mu * z * vp) / (0.5 * sigma * sigma * z * z);
    };
    auto rhs = [&](double z, const std::array<double, 2>& y) {
        return std::array<double, 2>{y[1], vpp(z, y[0], y[1])};
    };
    std::array<double, 2> y = {1.0, (1.0 - p.gamma) / (1.0 + out.L0)};
    double zprev = out.L0;
    out.grid_values.push_back({out.L0, y[0], y[1]});
    for (int i = 1; i < n_grid; ++i) {
        const double z = out.L0 + (out.U0 - out.L0) * i / (n_grid - 1.0);
        y = integrate_rk45<2>(rhs, zprev, z, y, 1e-11, 1e-14);
        out.grid_values.push_back({z, y[0], y[1]});
        zprev = z;
    }
    return out;
}

// ---------------------------------------------------------------------------
// delta1 by adaptive quadrature of the solvability ratio (ground truth for the
// closed forms).
// ---------------------------------------------------------------------------

enum class Delta1Mode { FastD1D2, SlowVega };

// vega(zeta, order) evaluates d_sigma V0 and its first zeta-derivative; when
// absent in SlowVega mode, central differences of re-solved problems are used.
inline double delta1_quadrature(const ZerothOrderSolution& sol, double group_param,
                                Delta1Mode mode,
                                std::function<double(double, int)> vega = nullptr) {
    const double gamma = sol.params.gamma;
    auto w = [&](double z) { return eval_w(sol, z); };
    const double tol = 1e-13;

    double numer;
    if (mode == Delta1Mode::FastD1D2) {
        auto d1d2v0 = [&](double z) {
            return 2.0 * z * z * eval_v0(sol, z, 2) + z * z * z * eval_v0(sol, z, 3);
        };
        numer = integrate_adaptive([&](double z) { return w(z) * d1d2v0(z); }, sol.L0, sol.U0, tol);
    } else {
        if (!vega) {
            // Richardson-extrapolated centered differences of re-solves
            const double h = 1e-4 * sol.sigma;
            const auto lo = solve_zeroth(sol.params, sol.sigma - h);
            const auto hi = solve_zeroth(sol.params, sol.sigma + h);
            const auto lo2 = solve_zeroth(sol.params, sol.sigma - 0.5 * h);
            const auto hi2 = solve_zeroth(sol.params, sol.sigma + 0.5 * h);
            vega = [lo, hi, lo2, hi2, h](double z, int order) {
                const double d1 = (eval_v0(hi, z, order) - eval_v0(lo, z, order)) / (2.0 * h);
                const double d2 = (eval_v0(hi2, z, order) - eval_v0(lo2, z, order)) / h;
                return (4.0 * d2 - d1) / 3.0;
            };
        }
        numer = integrate_adaptive([&](double z) { return w(z) * z * vega(z, 1); }, sol.L0, sol.U0,
                                   tol);
    }
    const double denom =
        integrate_adaptive([&](double z) { return w(z) * eval_v0(sol, z); }, sol.L0, sol.U0, tol);
    if (std::abs(denom) < 1e-300)
        throw SolverError("delta1_quadrature: vanishing denominator integral");
    return group_param * numer / ((1.0 - gamma) * denom);
}

} // namespace ntband
