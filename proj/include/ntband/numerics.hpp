#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "ntband/errors.hpp"

namespace ntband {

// ---------------------------------------------------------------------------
// Root finding: scan for sign changes, then bisect and polish with secant.
// ---------------------------------------------------------------------------

struct Bracket {
    double lo, hi;
    double f_lo, f_hi;
};

// Scans f on n+1 equispaced points of [lo, hi]; points where `valid` returns
// false (or f is non-finite) break the chain and are not paired.
template <class F, class Valid>
inline std::vector<Bracket> scan_sign_changes(F&& f, double lo, double hi, int n, Valid&& valid) {
    std::vector<Bracket> out;
    double prev_x = 0, prev_f = 0;
    bool have_prev = false;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        if (!valid(x)) { have_prev = false; continue; }
        const double fx = f(x);
        if (!std::isfinite(fx)) { have_prev = false; continue; }
        if (have_prev && ((prev_f < 0 && fx > 0) || (prev_f > 0 && fx < 0)))
            out.push_back({prev_x, x, prev_f, fx});
        prev_x = x; prev_f = fx; have_prev = true;
    }
    return out;
}

template <class F>
inline std::vector<Bracket> scan_sign_changes(F&& f, double lo, double hi, int n) {
    return scan_sign_changes(std::forward<F>(f), lo, hi, n, [](double) { return true; });
}

// Bisection to absolute tolerance xtol, followed by a few secant steps to
// push the objective itself toward zero.
template <class F>
inline double bisect(F&& f, Bracket b, double xtol, int max_iter = 200) {
    double lo = b.lo, hi = b.hi, flo = b.f_lo, fhi = b.f_hi;
    for (int i = 0; i < max_iter && (hi - lo) > xtol; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0) == (fm < 0)) { lo = mid; flo = fm; }
        else                       { hi = mid; fhi = fm; }
    }
    // secant polish, clamped to the bracket
    double x0 = lo, x1 = hi, f0 = flo, f1 = fhi;
    for (int i = 0; i < 4; ++i) {
        if (f1 == f0) break;
        double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= lo && x2 <= hi)) break;
        x0 = x1; f0 = f1;
        x1 = x2; f1 = f(x2);
        if (f1 == 0.0) break;
    }
    return (std::abs(f1) < std::abs(f0)) ? x1 : x0;
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.
// ---------------------------------------------------------------------------

namespace detail {
template <class F>
inline double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm,
                           double whole, double tol, double noise_floor, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    // stop on tolerance, depth, or when delta is at local roundoff level
    const double floor_here = noise_floor * (std::abs(left) + std::abs(right));
    if (depth <= 0 || std::abs(delta) <= std::max(15.0 * tol, floor_here))
        return left + right + delta / 15.0;
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, noise_floor, depth - 1) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, noise_floor, depth - 1);
}
} // namespace detail

// Adaptive Simpson with a tolerance relative to the integral's own scale and a
// roundoff floor so finite-difference noise in the integrand cannot force
// unbounded refinement.
template <class F>
inline double integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                                 int max_depth = 20, double noise_floor = 4e-15) {
    if (a == b) return 0.0;
    // coarse scale estimate of int |f|
    double scale = 0.0;
    {
        const int n = 32;
        const double h = (b - a) / n;
        double s = 0.5 * (std::abs(f(a)) + std::abs(f(b)));
        for (int i = 1; i < n; ++i) s += std::abs(f(a + h * i));
        scale = std::abs(s * h);
    }
    const double tol = rel_tol * std::max(scale, 1e-280);
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, noise_floor, max_depth);
}

// Fixed-node composite trapezoid (used by test oracles and tabulated models).
template <class F>
inline double trapezoid(F&& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double s = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i));
    return s * h;
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4) integrator for small fixed-dimension systems.
// ---------------------------------------------------------------------------

template <std::size_t N, class F>
inline std::array<double, N> integrate_rk45(F&& rhs, double x0, double x1,
                                            std::array<double, N> y,
                                            double rtol = 1e-11, double atol = 1e-14) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = (x1 >= x0) ? 1.0 : -1.0;
    double x = x0;
    double h = dir * std::max(1e-12, std::abs(x1 - x0) / 64.0);
    auto axpy = [](std::array<double, N> base, double s, const std::array<double, N>& k) {
        for (std::size_t i = 0; i < N; ++i) base[i] += s * k[i];
        return base;
    };
    std::size_t steps = 0;
    while (dir * (x1 - x) > 0) {
        if (++steps > 2000000) throw SolverError("rk45: step count exceeded");
        if (dir * (x + h - x1) > 0) h = x1 - x;
        const auto k1 = rhs(x, y);
        const auto k2 = rhs(x + c2 * h, axpy(y, h * a21, k1));
        auto t = axpy(y, h * a31, k1); t = axpy(t, h * a32, k2);
        const auto k3 = rhs(x + c3 * h, t);
        t = axpy(y, h * a41, k1); t = axpy(t, h * a42, k2); t = axpy(t, h * a43, k3);
        const auto k4 = rhs(x + c4 * h, t);
        t = axpy(y, h * a51, k1); t = axpy(t, h * a52, k2); t = axpy(t, h * a53, k3);
        t = axpy(t, h * a54, k4);
        const auto k5 = rhs(x + c5 * h, t);
        t = axpy(y, h * a61, k1); t = axpy(t, h * a62, k2); t = axpy(t, h * a63, k3);
        t = axpy(t, h * a64, k4); t = axpy(t, h * a65, k5);
        const auto k6 = rhs(x + h, t);
        t = axpy(y, h * b1, k1); t = axpy(t, h * b3, k3); t = axpy(t, h * b4, k4);
        t = axpy(t, h * b5, k5); t = axpy(t, h * b6, k6);
        const auto k7 = rhs(x + h, t);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                  e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(t[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1.0) { x += h; y = t; }
        const double fac = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
    }
    return y;
}

// ---------------------------------------------------------------------------
// Gauss-Hermite nodes/weights (physicists' convention, weight e^{-x^2}).
// Newton iteration on the recurrence, cf. the classic gauher routine.
// ---------------------------------------------------------------------------

inline void gauss_hermite(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1) throw DomainError("gauss_hermite: n must be >= 1");
    constexpr double eps = 1e-15;
    constexpr double pim4 = 0.7511255444649425; // pi^{-1/4}
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    double z = 0.0, pp = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0)      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        else if (i == 1) z -= 1.14 * std::pow(n, 0.426) / z;
        else if (i == 2) z = 1.86 * z - 0.86 * x[0];
        else if (i == 3) z = 1.91 * z - 0.91 * x[1];
        else             z = 2.0 * z - x[i - 2];
        for (int it = 0; it < 200; ++it) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= eps) break;
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // nodes ascending
    std::reverse(x.begin(), x.begin() + n);
    std::reverse(w.begin(), w.begin() + n);
    for (int i = 0; i + 1 < n; ++i)
        if (x[i] > x[i + 1]) { std::swap(x[i], x[i + 1]); std::swap(w[i], w[i + 1]); }
}

// ---------------------------------------------------------------------------
// Natural cubic spline (tabulated factor models).
// ---------------------------------------------------------------------------

class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> xs, std::vector<double> ys)
        : x_(std::move(xs)), y_(std::move(ys)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n) throw DomainError("CubicSpline: need >= 2 points");
        y2_.assign(n, 0.0);
        std::vector<double> u(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double sig = (x_[i] - x_[i - 1]) / (x_[i + 1] - x_[i - 1]);
            const double p = sig * y2_[i - 1] + 2.0;
            y2_[i] = (sig - 1.0) / p;
            u[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]) - (y_[i] - y_[i - 1]) / (x_[i] - x_[i - 1]);
            u[i] = (6.0 * u[i] / (x_[i + 1] - x_[i - 1]) - sig * u[i - 1]) / p;
        }
        for (std::size_t i = n - 1; i-- > 0;)
            y2_[i] = y2_[i] * y2_[i + 1] + u[i];
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        std::size_t lo = 0, hi = n - 1;
        if (x <= x_.front()) { hi = 1; }
        else if (x >= x_.back()) { lo = n - 2; }
        else {
            while (hi - lo > 1) {
                const std::size_t mid = (lo + hi) / 2;
                if (x_[mid] > x) hi = mid; else lo = mid;
            }
        }
        const double h = x_[hi] - x_[lo];
        const double a = (x_[hi] - x) / h, b = (x - x_[lo]) / h;
        return a * y_[lo] + b * y_[hi] +
               ((a * a * a - a) * y2_[lo] + (b * b * b - b) * y2_[hi]) * (h * h) / 6.0;
    }

    double xmin() const { return x_.front(); }
    double xmax() const { return x_.back(); }

private:
    std::vector<double> x_, y_, y2_;
};

// ---------------------------------------------------------------------------
// Gaussian density helpers.
// ---------------------------------------------------------------------------

inline double norm_logpdf(double z, double mean, double sd) {
    const double u = (z - mean) / sd;
    return -0.5 * u * u - std::log(sd) - 0.9189385332046727; // log sqrt(2 pi)
}

inline double norm_pdf(double z, double mean, double sd) {
    return std::exp(norm_logpdf(z, mean, sd));
}

} // namespace ntband
