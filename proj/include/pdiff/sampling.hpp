#pragma once

#include <cstdint>

#include "pdiff/rng.hpp"

namespace pdiff {

/// Poisson(lambda) draw.  lambda = 0 returns 0 deterministically.
///
/// Regimes, fixed for reproducibility:
///   lambda <  30    sequential inversion (cumulative search)
///   lambda >= 30    Hormann's transformed rejection (PTRD)
///   lambda >= 1e10  rounded normal approximation; at that scale the PTRD
///                   acceptance test loses all precision to cancellation
///                   while the approximation error is O(lambda^-1/2)
std::int64_t poisson_sample(RngStream& rng, double lambda);

/// Gamma(shape, rate) draw with mean shape/rate (Marsaglia-Tsang, with the
/// standard boost for shape < 1).
double gamma_sample(RngStream& rng, double shape, double rate);

/// Beta(a, b) draw via two gamma variates.
double beta_sample(RngStream& rng, double a, double b);

}  // namespace pdiff
