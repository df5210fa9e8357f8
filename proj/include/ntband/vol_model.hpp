#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "ntband/errors.hpp"
#include "ntband/numerics.hpp"

namespace ntband {

enum class Regime { Fast, Slow };

// Volatility factor specification: sigma_t = f(Z_t) with
//   fast: dZ = (1/eps) alpha(Z) dt + (1/sqrt(eps)) beta(Z) dW,
//   slow: dZ = eps alpha(Z) dt + sqrt(eps) beta(Z) dW,
// and corr(dB_stock, dW) = rho dt. The invariant law of Z does not depend on
// the time scale, so the same object serves both regimes.
struct VolFactorModel {
    std::function<double(double)> f;        // z -> sigma, smooth, bounded, > 0
    std::function<double(double)> f_deriv;  // optional analytic f'; empty -> central difference
    std::function<double(double)> alpha;    // drift of Z
    std::function<double(double)> beta;     // diffusion of Z, > 0
    double rho = 0.0;
    double epsilon = 1.0;
    Regime regime = Regime::Fast;
    double sigma_lo = 0.0, sigma_hi = 0.0;

    // invariant-law shortcuts for the built-in OU family
    bool gaussian_invariant = false;
    double ou_mean = 0.0, ou_sd = 1.0;

    // z-range used for normalization when the law is not Gaussian
    double support_lo = -10.0, support_hi = 10.0;

    void validate() const {
        if (!f || !alpha || !beta) throw DomainError("VolFactorModel: f/alpha/beta required");
        if (!(rho > -1.0 && rho < 1.0)) throw DomainError("VolFactorModel: rho must be in (-1,1)");
        if (!(epsilon > 0.0)) throw DomainError("VolFactorModel: epsilon must be positive");
        if (!(sigma_lo > 0.0 && sigma_hi >= sigma_lo))
            throw DomainError("VolFactorModel: need 0 < sigma_lo <= sigma_hi");
    }

    double f_prime(double z) const {
        if (f_deriv) return f_deriv(z);
        const double h = 1e-6 * std::max(1.0, std::abs(z));
        return (f(z + h) - f(z - h)) / (2.0 * h);
    }

    // OU factor (alpha = m - z, beta = nu*sqrt(2), invariant law N(m, nu^2))
    // with a logistic volatility map between sigma_lo and sigma_hi.
    static VolFactorModel ou_logistic(double m, double nu, double sig_lo, double sig_hi,
                                      double rho, double epsilon, Regime regime) {
        VolFactorModel mdl;
        const double span = sig_hi - sig_lo;
        mdl.f = [=](double z) { return sig_lo + span / (1.0 + std::exp(-z)); };
        mdl.f_deriv = [=](double z) {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return span * s * (1.0 - s);
        };
        mdl.alpha = [=](double z) { return m - z; };
        mdl.beta = [=](double) { return nu * std::sqrt(2.0); };
        mdl.rho = rho;
        mdl.epsilon = epsilon;
        mdl.regime = regime;
        mdl.sigma_lo = sig_lo;
        mdl.sigma_hi = sig_hi;
        mdl.gaussian_invariant = true;
        mdl.ou_mean = m;
        mdl.ou_sd = nu;
        mdl.support_lo = m - 10.0 * nu;
        mdl.support_hi = m + 10.0 * nu;
        mdl.validate();
        return mdl;
    }

    // Tabulated (z, f, alpha, beta) rows, cubic interpolation inside the range.
    static VolFactorModel tabulated(const std::vector<std::array<double, 4>>& rows,
                                    double rho, double epsilon, Regime regime) {
        if (rows.size() < 4) throw DomainError("tabulated model: need >= 4 rows");
        std::vector<double> z, fv, av, bv;
        for (const auto& r : rows) {
            z.push_back(r[0]); fv.push_back(r[1]); av.push_back(r[2]); bv.push_back(r[3]);
        }
        auto fs = std::make_shared<CubicSpline>(z, fv);
        auto as = std::make_shared<CubicSpline>(z, av);
        auto bs = std::make_shared<CubicSpline>(z, bv);
        VolFactorModel mdl;
        mdl.f = [fs](double x) { return (*fs)(x); };
        mdl.alpha = [as](double x) { return (*as)(x); };
        mdl.beta = [bs](double x) { return (*bs)(x); };
        mdl.rho = rho;
        mdl.epsilon = epsilon;
        mdl.regime = regime;
        mdl.sigma_lo = *std::min_element(fv.begin(), fv.end());
        mdl.sigma_hi = *std::max_element(fv.begin(), fv.end());
        mdl.support_lo = z.front();
        mdl.support_hi = z.back();
        mdl.validate();
        return mdl;
    }
};

// Invariant distribution of the factor together with a quadrature rule for
// ergodic averages. Weights sum to one.
struct InvariantDistribution {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::function<double(double)> density;
    std::function<double(double)> log_density;
    double support_lo = 0.0, support_hi = 0.0;
    double mode = 0.0; // argmax of the density
};

// Gauss-Hermite when the law is Gaussian (spectral accuracy for the default
// family); otherwise trapezoid on the support, refined until the
// normalization integral is converged. The stationary density solves
// (beta^2 Phi)' = 2 alpha Phi, i.e. Phi ~ beta^{-2} exp(int 2 alpha / beta^2).
inline InvariantDistribution invariant_distribution(const VolFactorModel& model, int n_nodes = 96) {
    model.validate();
    if (n_nodes < 8) throw DomainError("invariant_distribution: n_nodes must be >= 8");
    InvariantDistribution dist;

    if (model.gaussian_invariant) {
        std::vector<double> x, w;
        gauss_hermite(n_nodes, x, w);
        const double m = model.ou_mean, nu = model.ou_sd;
        const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
        dist.nodes.resize(x.size());
        dist.weights.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            dist.nodes[i] = m + std::sqrt(2.0) * nu * x[i];
            dist.weights[i] = w[i] * inv_sqrt_pi;
        }
        dist.density = [m, nu](double z) { return norm_pdf(z, m, nu); };
        dist.log_density = [m, nu](double z) { return norm_logpdf(z, m, nu); };
        dist.support_lo = dist.nodes.front();
        dist.support_hi = dist.nodes.back();
        dist.mode = m;
        return dist;
    }

    const double lo = model.support_lo, hi = model.support_hi;
    auto log_unnorm = [&model, lo](double z) {
        auto integrand = [&model](double u) {
            const double b = model.beta(u);
            return 2.0 * model.alpha(u) / (b * b);
        };
        const double g = integrate_adaptive(integrand, lo, z, 1e-13);
        const double b = model.beta(z);
        return g - std::log(b * b);
    };

    // refine a cumulative-exponent grid until the mass converges
    int n = std::max(n_nodes, 256);
    double mass_prev = 0.0;
    std::vector<double> zs, lp;
    for (int pass = 0; pass < 8; ++pass) {
        zs.resize(n + 1);
        lp.resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            zs[i] = lo + (hi - lo) * static_cast<double>(i) / n;
            lp[i] = log_unnorm(zs[i]);
        }
        const double lmax = *std::max_element(lp.begin(), lp.end());
        double mass = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double v = std::exp(lp[i] - lmax);
            mass += (i == 0 || i == n) ? 0.5 * v : v;
        }
        mass *= (hi - lo) / n;
        if (pass > 0 && std::abs(mass - mass_prev) <= 1e-12 * mass) break;
        mass_prev = mass;
        if (pass + 1 < 8) n *= 2;
    }

    const double lmax = *std::max_element(lp.begin(), lp.end());
    if (std::exp(lp.front() - lmax) > 1e-6 || std::exp(lp.back() - lmax) > 1e-6)
        throw ErgodicityError("invariant density does not decay on the given support; "
                              "cannot normalize");

    const double h = (hi - lo) / n;
    double mass = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = std::exp(lp[i] - lmax);
        mass += (i == 0 || i == n) ? 0.5 * v : v;
    }
    mass *= h;
    const double log_norm = lmax + std::log(mass);

    dist.nodes = zs;
    dist.weights.resize(zs.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        double wi = std::exp(lp[i] - log_norm) * h;
        if (i == 0 || i + 1 == zs.size()) wi *= 0.5;
        dist.weights[i] = wi;
        wsum += wi;
    }
    for (auto& wi : dist.weights) wi /= wsum;
    auto lps = std::make_shared<CubicSpline>(zs, lp);
    dist.log_density = [lps, log_norm](double z) { return (*lps)(z)-log_norm; };
    dist.density = [lps, log_norm](double z) { return std::exp((*lps)(z)-log_norm); };
    dist.support_lo = lo;
    dist.support_hi = hi;
    dist.mode = zs[static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin())];
    return dist;
}

// <g> under the invariant law.
inline double ergodic_average(const std::function<double(double)>& g,
                              const InvariantDistribution& dist) {
    double s = 0.0;
    for (std::size_t i = 0; i < dist.nodes.size(); ++i)
        s += dist.weights[i] * g(dist.nodes[i]);
    return s;
}

// Root-mean-square volatility sqrt(<f^2>).
inline double sigma_bar(const VolFactorModel& model, const InvariantDistribution& dist) {
    const double s2 = ergodic_average([&](double z) { const double v = model.f(z); return v * v; }, dist);
    return std::sqrt(s2);
}

// phi'(z) where phi solves the Poisson equation L0 phi = f^2 - sigma_bar^2.
// Integrating-factor form: phi'(z) = (2 / (beta^2 Phi)) int_{-inf}^z (f^2 - sb^2) Phi du.
// The ratio is evaluated with the density in log space, integrating from the
// decaying side so the exponent never overflows; outside the quadrature
// support evaluation is refused.
inline std::function<double(double)> phi_prime(const VolFactorModel& model,
                                               const InvariantDistribution& dist) {
    const double sb2 = [&] { const double s = sigma_bar(model, dist); return s * s; }();
    const double lo = dist.support_lo, hi = dist.support_hi, mode = dist.mode;
    auto logphi = dist.log_density;
    auto f = model.f;
    auto beta = model.beta;
    return [=](double z) -> double {
        if (z < lo || z > hi)
            throw DomainError("phi_prime: z outside the quadrature support");
        const double lz = logphi(z);
        auto ratio_integrand = [&](double u) {
            const double fu = f(u);
            return (fu * fu - sb2) * std::exp(logphi(u) - lz);
        };
        double ratio; // = I(z) / Phi(z)
        if (z <= mode) {
            double a = z;
            const double step = std::max(1e-3, (hi - lo) / 256.0);
            while (a > lo && logphi(a) - lz > -60.0) a = std::max(lo, a - step);
            ratio = integrate_adaptive(ratio_integrand, a, z, 1e-14);
        } else {
            // total integral of (f^2 - sb^2) Phi vanishes by centering
            double b = z;
            const double step = std::max(1e-3, (hi - lo) / 256.0);
            while (b < hi && logphi(b) - lz > -60.0) b = std::min(hi, b + step);
            ratio = -integrate_adaptive(ratio_integrand, z, b, 1e-14);
        }
        const double bz = beta(z);
        return 2.0 * ratio / (bz * bz);
    };
}

// Fast-scale group parameter V3 = -(rho/2) <beta f phi'>.
inline double v3(const VolFactorModel& model, const InvariantDistribution& dist) {
    if (model.rho == 0.0) return 0.0;
    auto phip = phi_prime(model, dist);
    const double avg = ergodic_average(
        [&](double z) { return model.beta(z) * model.f(z) * phip(z); }, dist);
    return -0.5 * model.rho * avg;
}

// Slow-scale group parameter V1(z) = rho f(z) f'(z) beta(z).
inline double v1_slow(const VolFactorModel& model, double z) {
    if (model.rho == 0.0) return 0.0;
    return model.rho * model.f(z) * model.f_prime(z) * model.beta(z);
}

} // namespace ntband
