#pragma once

#include <cmath>
#include <string>

#include "ntband/errors.hpp"

namespace ntband {

// Investor and market constants. mu is the excess drift of the stock over the
// money market rate r; lambda is the proportional cost paid on sales.
struct MarketParams {
    double mu = 0.0;      // excess drift, 1/year
    double r = 0.0;       // risk-free rate, 1/year
    double gamma = 0.0;   // relative risk aversion
    double lambda = 0.0;  // proportional sale cost

    void validate() const {
        if (!(mu > 0.0)) throw DomainError("MarketParams: mu must be positive");
        if (!(r >= 0.0)) throw DomainError("MarketParams: r must be nonnegative");
        if (!(gamma > 0.0) || gamma == 1.0)
            throw DomainError("MarketParams: gamma must be positive and != 1");
        if (!(lambda >= 0.0 && lambda < 1.0))
            throw DomainError("MarketParams: lambda must lie in [0,1)");
    }

    double merton_proportion(double sigma) const { return mu / (gamma * sigma * sigma); }

    // Assumption A1: pi_M < 1 at every volatility a solve is attempted at.
    void require_merton_bound(double sigma) const {
        if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
        const double pi_m = merton_proportion(sigma);
        if (!(pi_m < 1.0))
            throw DomainError("Assumption A1 violated: Merton proportion " +
                              std::to_string(pi_m) + " >= 1 at sigma = " + std::to_string(sigma));
    }
};

} // namespace ntband
