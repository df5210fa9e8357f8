#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "ntband/errors.hpp"
#include "ntband/market.hpp"
#include "ntband/vol_model.hpp"

namespace ntband {

// ---------------------------------------------------------------------------
// Deterministic per-path RNG: xoshiro256++ seeded via splitmix64 from
// (seed, path index), so results do not depend on scheduling or batch layout.
// ---------------------------------------------------------------------------

class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        for (auto& si : s_) si = splitmix64(x);
        have_spare_ = false;
    }

    double uniform() { // in (0, 1]
        return (next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Band-reflection Monte Carlo for the long-term growth rate.
// ---------------------------------------------------------------------------

struct SimConfig {
    MarketParams params;
    std::optional<VolFactorModel> model; // absent: constant volatility
    double sigma_const = 0.2;            // used when model is absent

    std::function<double(double)> lower; // band maps z -> l(z), u(z)
    std::function<double(double)> upper;
    bool band_depends_on_z = false;

    double horizon = 50.0;  // years
    double dt = 1.0 / 2500; // step, years
    long n_paths = 10000;
    std::uint64_t seed = 1;
    int batch_count = 50;

    double z0 = 0.0;
    double zeta0 = 0.0; // 0: start at the band midpoint

    void validate() const {
        params.validate();
        if (!(dt > 0.0) || !(horizon > 0.0)) throw DomainError("SimConfig: dt and horizon must be positive");
        const double steps = horizon / dt;
        if (std::abs(steps - std::round(steps)) > 1e-6)
            throw DomainError("SimConfig: horizon/dt must be an integral step count");
        if (n_paths < 1 || batch_count < 2 || batch_count > n_paths)
            throw DomainError("SimConfig: need n_paths >= 1 and 2 <= batch_count <= n_paths");
        if (!lower || !upper) throw DomainError("SimConfig: band policy required");
    }
};

struct SimResult {
    double growth_rate_estimate = 0.0; // 1/year
    double standard_error = 0.0;       // 1/year, batch means
    double mean_trade_volume = 0.0;    // dollars traded per year (per unit initial wealth)
    double fraction_time_at_boundaries = 0.0;
    long paths_bankrupt = 0;
    double max_snap_error = 0.0; // max |Y/X - boundary| right after a rebalance
};

// Cash value of a position if liquidated now: sales pay the proportional cost.
inline double liquidation_value(double x, double y, double lambda) {
    return x + y - lambda * std::max(y, 0.0);
}

inline SimResult simulate_growth(const SimConfig& cfg) {
    cfg.validate();
    const MarketParams& p = cfg.params;
    const long n_steps = static_cast<long>(std::llround(cfg.horizon / cfg.dt));
    const double dt = cfg.dt, sqdt = std::sqrt(dt);
    const double gamma = p.gamma;
    const bool has_model = cfg.model.has_value();
    const VolFactorModel* mdl = has_model ? &*cfg.model : nullptr;
    if (has_model) mdl->validate();

    const double rho = has_model ? mdl->rho : 0.0;
    const double rho_perp = std::sqrt(1.0 - rho * rho);

    // exact OU transition for the built-in factor; Euler otherwise
    bool exact_ou = has_model && mdl->gaussian_invariant;
    double ou_decay = 0.0, ou_scale = 0.0;
    double euler_drift_scale = 0.0, euler_diff_scale = 0.0;
    if (has_model) {
        const double kap = (mdl->regime == Regime::Fast) ? 1.0 / mdl->epsilon : mdl->epsilon;
        if (exact_ou) {
            ou_decay = std::exp(-kap * dt);
            ou_scale = mdl->ou_sd * std::sqrt(1.0 - ou_decay * ou_decay);
        } else {
            euler_drift_scale = kap * dt;
            euler_diff_scale = std::sqrt(kap * dt);
        }
    }

    // hoisted constant band
    double l_const = 0.0, u_const = 0.0;
    if (!cfg.band_depends_on_z) {
        l_const = cfg.lower(cfg.z0);
        u_const = cfg.upper(cfg.z0);
        if (!(l_const < u_const)) throw DomainError("SimConfig: need l < u");
    }

    const double zeta_start =
        (cfg.zeta0 > 0.0) ? cfg.zeta0
                          : 0.5 * (cfg.lower(cfg.z0) + cfg.upper(cfg.z0));
    const double x_start = 1.0 / (1.0 + zeta_start - p.lambda * std::max(zeta_start, 0.0));
    const double y_start = zeta_start * x_start;

    const long B = cfg.batch_count;
    std::vector<double> batch_sum(B, 0.0);
    std::vector<long> batch_n(B, 0);
    double total_sum_u = 0.0;
    double total_volume = 0.0;
    long total_trades = 0;
    SimResult out;

    auto utility = [gamma](double w) { return std::pow(w, 1.0 - gamma) / (1.0 - gamma); };

    for (long path = 0; path < cfg.n_paths; ++path) {
        PathRng rng(cfg.seed, static_cast<std::uint64_t>(path));
        double X = x_start, Y = y_start, Z = cfg.z0;
        double volume = 0.0;
        long trades = 0;

        for (long step = 0; step < n_steps; ++step) {
            const double xi1 = rng.normal();
            double sigma_t;
            if (has_model) {
                sigma_t = mdl->f(Z);
                const double xi2 = rho * xi1 + rho_perp * rng.normal();
                if (exact_ou)
                    Z = mdl->ou_mean + (Z - mdl->ou_mean) * ou_decay + ou_scale * xi2;
                else
                    Z += mdl->alpha(Z) * euler_drift_scale + mdl->beta(Z) * euler_diff_scale * xi2;
            } else {
                sigma_t = cfg.sigma_const;
            }

            Y *= 1.0 + (p.mu + p.r) * dt + sigma_t * sqdt * xi1;
            X *= 1.0 + p.r * dt;

            if (X <= 0.0 || X + (1.0 - p.lambda) * Y <= 0.0) {
                ++out.paths_bankrupt;
                std::ostringstream msg;
                msg << "simulate_growth: path " << path << " left the solvency region at step "
                    << step << " (X = " << X << ", Y = " << Y << ")";
                throw SolverError(msg.str());
            }

            const double l = cfg.band_depends_on_z ? cfg.lower(Z) : l_const;
            const double u = cfg.band_depends_on_z ? cfg.upper(Z) : u_const;
            const double zeta = Y / X;
            if (zeta < l) {
                const double dL = (l * X - Y) / (1.0 + l);
                X -= dL;
                Y += dL;
                volume += dL;
                ++trades;
                const double snap = std::abs(Y / X - l);
                if (snap > out.max_snap_error) out.max_snap_error = snap;
            } else if (zeta > u) {
                const double dM = (Y - u * X) / (1.0 + u * (1.0 - p.lambda));
                Y -= dM;
                X += (1.0 - p.lambda) * dM;
                volume += dM;
                ++trades;
                const double snap = std::abs(Y / X - u);
                if (snap > out.max_snap_error) out.max_snap_error = snap;
            }
        }

        const double w = liquidation_value(X, Y, p.lambda);
        if (!(w > 0.0)) {
            ++out.paths_bankrupt;
            throw SolverError("simulate_growth: nonpositive terminal liquidation value");
        }
        const double u_val = utility(w);
        const long b = path * B / cfg.n_paths;
        batch_sum[b] += u_val;
        batch_n[b] += 1;
        total_sum_u += u_val;
        total_volume += volume;
        total_trades += trades;
    }

    auto ce_rate = [&](double mean_u) {
        const double ce = std::pow((1.0 - gamma) * mean_u, 1.0 / (1.0 - gamma));
        return std::log(ce) / cfg.horizon;
    };

    out.growth_rate_estimate = ce_rate(total_sum_u / cfg.n_paths);
    double mean_rate = 0.0;
    std::vector<double> rates(B);
    for (long b = 0; b < B; ++b) {
        rates[b] = ce_rate(batch_sum[b] / batch_n[b]);
        mean_rate += rates[b];
    }
    mean_rate /= B;
    double var = 0.0;
    for (long b = 0; b < B; ++b) var += (rates[b] - mean_rate) * (rates[b] - mean_rate);
    var /= (B - 1);
    out.standard_error = std::sqrt(var / B);
    out.mean_trade_volume = total_volume / cfg.n_paths / cfg.horizon;
    out.fraction_time_at_boundaries =
        static_cast<double>(total_trades) / (static_cast<double>(cfg.n_paths) * n_steps);
    return out;
}

} // namespace ntband
