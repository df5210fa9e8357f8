#include <doctest.h>

#include <cmath>

#include "ntband/simulate.hpp"
#include "ntband/vol_model.hpp"

using namespace ntband;

namespace {

VolFactorModel default_logistic(double rho = -0.5) {
    return VolFactorModel::ou_logistic(0.0, 1.0, 0.15, 0.25, rho, 1e-3, Regime::Fast);
}

} // namespace

TEST_CASE("OU factor has the Gaussian invariant law") {
    const double m = 0.4, nu = 0.7;
    auto mdl = VolFactorModel::ou_logistic(m, nu, 0.1, 0.3, -0.5, 1e-3, Regime::Fast);
    auto dist = invariant_distribution(mdl, 64);

    double wsum = 0.0;
    for (double w : dist.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) < 1e-12);

    const double mean = ergodic_average([](double z) { return z; }, dist);
    const double var = ergodic_average([&](double z) { return (z - m) * (z - m); }, dist);
    CHECK(mean == doctest::Approx(m).epsilon(1e-12));
    CHECK(var == doctest::Approx(nu * nu).epsilon(1e-12));
    CHECK(dist.density(m) == doctest::Approx(1.0 / (nu * std::sqrt(2.0 * M_PI))).epsilon(1e-12));
}

TEST_CASE("symmetric factor gives symmetric nodes and unit weights") {
    auto mdl = VolFactorModel::ou_logistic(0.0, 1.0, 0.1, 0.3, 0.0, 1e-3, Regime::Fast);
    auto dist = invariant_distribution(mdl, 48);
    const std::size_t n = dist.nodes.size();
    for (std::size_t i = 0; i < n / 2; ++i) {
        CHECK(dist.nodes[i] == doctest::Approx(-dist.nodes[n - 1 - i]).epsilon(1e-12));
        CHECK(dist.weights[i] == doctest::Approx(dist.weights[n - 1 - i]).epsilon(1e-12));
    }
    double wsum = 0.0;
    for (double w : dist.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) < 1e-12);
}

TEST_CASE("ergodic average of a polynomial matches a dense trapezoid oracle") {
    auto mdl = default_logistic();
    auto dist = invariant_distribution(mdl, 96);
    auto g = [&](double z) {
        const double f = mdl.f(z);
        return f * f * (1.0 + 0.5 * z) + 0.1 * z * z;
    };
    const double quad = ergodic_average(g, dist);
    // 10^6-point trapezoid against the exact Gaussian density
    const double lo = -10.0, hi = 10.0;
    const double oracle =
        trapezoid([&](double z) { return g(z) * norm_pdf(z, 0.0, 1.0); }, lo, hi, 1000000);
    CHECK(quad == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("ergodic average basics") {
    auto mdl = default_logistic();
    auto dist = invariant_distribution(mdl, 64);
    CHECK(ergodic_average([](double) { return 3.25; }, dist) == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(std::abs(ergodic_average([](double z) { return z; }, dist)) < 1e-13);
}

TEST_CASE("<f^2> matches the long-run time average of a simulated path") {
    auto mdl = default_logistic();
    auto dist = invariant_distribution(mdl, 96);
    const double target = ergodic_average([&](double z) { const double f = mdl.f(z); return f * f; }, dist);

    // exact OU updates, long horizon, batch-means standard error
    PathRng rng(20240707ULL, 0);
    const double dt = 0.01;
    const long n_steps = 400000, n_batches = 20;
    const double decay = std::exp(-dt), scale = std::sqrt(1.0 - decay * decay);
    double z = 0.0;
    std::vector<double> batch(n_batches, 0.0);
    for (long i = 0; i < n_steps; ++i) {
        z = z * decay + scale * rng.normal();
        const double f = mdl.f(z);
        batch[i * n_batches / n_steps] += f * f;
    }
    double mean = 0.0;
    for (auto& b : batch) {
        b /= (n_steps / n_batches);
        mean += b;
    }
    mean /= n_batches;
    double var = 0.0;
    for (double b : batch) var += (b - mean) * (b - mean);
    var /= (n_batches - 1);
    const double se = std::sqrt(var / n_batches);
    CHECK(std::abs(mean - target) < 3.0 * se);
}

TEST_CASE("sigma_bar") {
    SUBCASE("constant map returns the constant") {
        auto mdl = default_logistic();
        mdl.f = [](double) { return 0.2; };
        mdl.f_deriv = [](double) { return 0.0; };
        auto dist = invariant_distribution(mdl, 48);
        CHECK(sigma_bar(mdl, dist) == doctest::Approx(0.2).epsilon(1e-14));
    }
    SUBCASE("steep logistic tends to the two-point average") {
        // centered at the OU mean, half the mass sees each level; the limit of
        // sigma_bar^2 is the two-point average of the squared levels
        const double two_point = 0.5 * (0.1 * 0.1 + 0.3 * 0.3);
        double prev_dev = 1.0;
        for (double steep : {2.0, 8.0, 32.0}) {
            auto mdl = VolFactorModel::ou_logistic(0.0, 1.0, 0.1, 0.3, 0.0, 1e-3, Regime::Fast);
            mdl.f = [steep](double z) { return 0.1 + 0.2 / (1.0 + std::exp(-steep * z)); };
            mdl.f_deriv = nullptr;
            auto dist = invariant_distribution(mdl, 256);
            const double sb = sigma_bar(mdl, dist);
            const double dev = std::abs(sb * sb - two_point);
            CHECK(dev < prev_dev);
            prev_dev = dev;
        }
        CHECK(prev_dev < 1.5e-3);
    }
    SUBCASE("strictly inside the envelope for a non-constant map") {
        auto mdl = default_logistic();
        auto dist = invariant_distribution(mdl, 64);
        const double sb = sigma_bar(mdl, dist);
        CHECK(sb > 0.15);
        CHECK(sb < 0.25);
    }
}

TEST_CASE("phi_prime") {
    SUBCASE("constant f gives zero") {
        auto mdl = default_logistic();
        mdl.f = [](double) { return 0.2; };
        mdl.f_deriv = [](double) { return 0.0; };
        auto dist = invariant_distribution(mdl, 64);
        auto phip = phi_prime(mdl, dist);
        for (double z : {-2.0, -0.5, 0.0, 1.0, 3.0}) CHECK(std::abs(phip(z)) < 1e-12);
    }

    SUBCASE("f^2 = sigma_bar^2 + z has the Gaussian-integral closed form") {
        // OU(0, nu), beta = nu sqrt(2): int_{-inf}^z u Phi(u) du = -nu^2 Phi(z),
        // so phi'(z) = -2 nu^2 / beta^2 = -1 identically.
        const double nu = 0.1;
        VolFactorModel mdl;
        mdl.f = [](double z) { return std::sqrt(std::max(1.0 + z, 0.04)); };
        mdl.alpha = [](double z) { return -z; };
        mdl.beta = [nu](double) { return nu * std::sqrt(2.0); };
        mdl.rho = -0.5;
        mdl.epsilon = 1e-3;
        mdl.regime = Regime::Fast;
        mdl.sigma_lo = 0.2;
        mdl.sigma_hi = 1.5;
        mdl.gaussian_invariant = true;
        mdl.ou_mean = 0.0;
        mdl.ou_sd = nu;
        mdl.support_lo = -10.0 * nu;
        mdl.support_hi = 10.0 * nu;
        auto dist = invariant_distribution(mdl, 64);
        CHECK(sigma_bar(mdl, dist) == doctest::Approx(1.0).epsilon(1e-12));
        auto phip = phi_prime(mdl, dist);
        for (double z : {-0.5, -0.2, 0.0, 0.3, 0.6}) CHECK(phip(z) == doctest::Approx(-1.0).epsilon(1e-10));
    }

    SUBCASE("Poisson residual below 1e-8 on interior nodes") {
        auto mdl = default_logistic();
        auto dist = invariant_distribution(mdl, 96);
        const double sb = sigma_bar(mdl, dist);
        auto phip = phi_prime(mdl, dist);
        // L0 phi = (beta^2/2) phi'' + alpha phi'; phi'' by five-point stencil of phi'
        const double h = 1e-2;
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const double z = -2.5 + 5.0 * i / 49.0;
            const double p2 =
                (-phip(z + 2 * h) + 8.0 * phip(z + h) - 8.0 * phip(z - h) + phip(z - 2 * h)) /
                (12.0 * h);
            const double b = mdl.beta(z);
            const double lhs = 0.5 * b * b * p2 + mdl.alpha(z) * phip(z);
            const double rhs = mdl.f(z) * mdl.f(z) - sb * sb;
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        CHECK(worst < 1e-8);
    }

    SUBCASE("refuses evaluation outside the quadrature support") {
        auto mdl = default_logistic();
        auto dist = invariant_distribution(mdl, 64);
        auto phip = phi_prime(mdl, dist);
        CHECK_THROWS_AS(phip(dist.support_hi + 1.0), DomainError);
    }
}

TEST_CASE("V3 group parameter") {
    SUBCASE("zero correlation gives exactly zero") {
        auto mdl = default_logistic(0.0);
        auto dist = invariant_distribution(mdl, 64);
        CHECK(v3(mdl, dist) == 0.0);
    }
    SUBCASE("constant f gives zero for any correlation") {
        auto mdl = default_logistic(-0.7);
        mdl.f = [](double) { return 0.2; };
        mdl.f_deriv = [](double) { return 0.0; };
        auto dist = invariant_distribution(mdl, 64);
        CHECK(std::abs(v3(mdl, dist)) < 1e-14);
    }
    SUBCASE("odd and linear in rho") {
        auto dist = invariant_distribution(default_logistic(0.5), 64);
        auto m1 = default_logistic(0.5);
        auto m2 = default_logistic(-0.5);
        auto m3 = default_logistic(0.25);
        const double a = v3(m1, dist), b = v3(m2, dist), c = v3(m3, dist);
        CHECK(a == doctest::Approx(-b).epsilon(1e-15));
        CHECK(a == doctest::Approx(2.0 * c).epsilon(1e-15));
        CHECK(a != 0.0);
    }
}

TEST_CASE("V1 slow group parameter") {
    auto mdl = default_logistic(-0.5);
    SUBCASE("constant f gives zero") {
        mdl.f = [](double) { return 0.2; };
        mdl.f_deriv = nullptr; // exercise the central-difference path
        CHECK(v1_slow(mdl, 0.3) == 0.0);
    }
    SUBCASE("zero correlation gives zero") {
        auto m0 = default_logistic(0.0);
        CHECK(v1_slow(m0, 0.3) == 0.0);
    }
    SUBCASE("analytic derivative matches central differences at the inflection") {
        const double z = 0.0;
        auto no_analytic = mdl;
        no_analytic.f_deriv = nullptr;
        CHECK(v1_slow(mdl, z) == doctest::Approx(v1_slow(no_analytic, z)).epsilon(1e-8));
        CHECK(v1_slow(mdl, z) == doctest::Approx(-0.5 * 0.2 * 0.025 * std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("tabulated model reproduces the OU law and rejects divergent densities") {
    auto ref = default_logistic();
    std::vector<std::array<double, 4>> rows;
    for (int i = 0; i <= 400; ++i) {
        const double z = -8.0 + 16.0 * i / 400.0;
        rows.push_back({z, ref.f(z), -z, std::sqrt(2.0)});
    }
    auto tab = VolFactorModel::tabulated(rows, -0.5, 1e-3, Regime::Fast);
    auto dist = invariant_distribution(tab, 64);
    double wsum = 0.0;
    for (double w : dist.weights) wsum += w;
    CHECK(std::abs(wsum - 1.0) < 1e-12);
    auto ref_dist = invariant_distribution(ref, 96);
    CHECK(sigma_bar(tab, dist) == doctest::Approx(sigma_bar(ref, ref_dist)).epsilon(1e-7));

    // alpha = +z pushes mass outward: not normalizable on the range
    std::vector<std::array<double, 4>> bad;
    for (int i = 0; i <= 100; ++i) {
        const double z = -4.0 + 8.0 * i / 100.0;
        bad.push_back({z, 0.2, +z, std::sqrt(2.0)});
    }
    auto divergent = VolFactorModel::tabulated(bad, 0.0, 1e-3, Regime::Fast);
    CHECK_THROWS_AS(invariant_distribution(divergent, 64), ErgodicityError);
}
