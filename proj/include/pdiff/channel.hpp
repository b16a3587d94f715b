#pragma once

#include "pdiff/rng.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

enum class NoiseKind { Poisson, Gaussian };

/// A point on the SNR axis, kept in both parameterizations.
/// Invariant: gamma == exp(alpha).
struct SnrPoint {
    double alpha;  // log-SNR
    double gamma;  // SNR

    static SnrPoint from_alpha(double a) { return {a, std::exp(a)}; }
    static SnrPoint from_gamma(double g) { return {std::log(g), g}; }
};

/// Componentwise Poisson corruption: z_i ~ Poisson(gamma * (x_i + eps)).
/// The eps shift keeps exact zeros recoverable; it is applied inside the
/// channel only and never stored back into the data.
/// Each component draws from its own substream of `rng`, so the result is
/// independent of evaluation order and thread count.  `rng` is advanced once.
/// Throws std::domain_error if any component of x is negative.
Vec corrupt_poisson(const Vec& x, double gamma, double eps, RngStream& rng);

/// z_tilde = z / (1 + gamma): keeps the observation within [0, x] with high
/// probability across the whole SNR range (mean gamma*x/(1+gamma)).
Vec normalize_observation(const Vec& z, double gamma);

/// Gaussian channel: z_i = sqrt(gamma) * x_i + n_i with unit noise.
/// Same substream discipline as corrupt_poisson.
Vec corrupt_gaussian(const Vec& x, double gamma, RngStream& rng);

}  // namespace pdiff
