#pragma once

#include <stdexcept>
#include <string>

namespace ntband {

// Invalid inputs and violated model assumptions (CLI exit code 2).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// lambda = 0: the free-boundary system is singular, the band collapses to the
// Merton point. Carries the collapsed solution instead of a fake band.
struct CollapsedBandError : DomainError {
    double pi_merton;
    double delta_max;
    CollapsedBandError(double pi_m, double dmax)
        : DomainError("collapsed band: lambda = 0 degenerates the no-trade region "
                      "(pi_M = " + std::to_string(pi_m) +
                      ", delta_max = " + std::to_string(dmax) + ")"),
          pi_merton(pi_m), delta_max(dmax) {}
};

// Numerical failure of a solver (CLI exit code 3).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Eigenvalue bracketing failed; message carries the scanned profile.
struct EigenvalueNotFound : SolverError {
    using SolverError::SolverError;
};

// A condition that should hold by construction (Fredholm solvability,
// nonsingular reduced system) failed to hold numerically.
struct InternalConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invariant density does not normalize.
struct ErgodicityError : DomainError {
    using DomainError::DomainError;
};

} // namespace ntband
