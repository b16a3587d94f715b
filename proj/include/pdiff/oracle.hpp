#pragma once

#include <cstdint>
#include <functional>

#include "pdiff/types.hpp"

namespace pdiff {

/// Gamma(shape, rate) prior; mean = shape/rate.  The conjugate family for
/// the Poisson channel: observing z at SNR gamma maps (shape, rate) to
/// (shape + z, rate + gamma).
struct GammaPrior {
    double shape;
    double rate;
};

/// Discrete prior with finite support.  Ground truth for every identity
/// that needs an exactly computable posterior.
struct FinitePrior {
    Vec support;  // strictly increasing, non-negative
    Vec probs;    // sums to 1 within 1e-12

    void validate() const;
};

/// Inclusive z-range [lo, hi] outside which Poisson(lambda) carries less
/// than `tail_mass` probability.  Generous by construction; used to truncate
/// the z-sums below.
struct ZWindow {
    std::int64_t lo;
    std::int64_t hi;
};
ZWindow poisson_mass_window(double lambda, double tail_mass);

// ---------------------------------------------------------------------------
// Posterior means
// ---------------------------------------------------------------------------

/// (shape + z) / (rate + gamma) -- affine in z, the signature of the
/// conjugate family.
double gamma_posterior_mean(const GammaPrior& prior, double gamma, std::int64_t z);

/// Marginal channel-output PMF under an exponential prior with the given
/// rate: geometric with p = gamma / (rate + gamma).
double exp_prior_marginal_pmf(double rate, double gamma, std::int64_t z);

/// Posterior mean from the output marginal alone:
///   E[X | Z = z] = (z+1) P(z+1) / (gamma P(z)).
/// Throws std::runtime_error when P(z) vanishes (conditioning on a
/// zero-probability event).
double tgr_estimate(const std::function<double(std::int64_t)>& marginal_pmf, double gamma,
                    std::int64_t z);
double tgr_estimate(const EmpiricalPmf& marginal, double gamma, std::int64_t z);

/// Exact Bayes posterior mean for a finite prior, computed in log space.
/// Throws std::runtime_error when every support point has numerically zero
/// likelihood at z.
double finite_posterior_mean(const FinitePrior& prior, double gamma, std::int64_t z);

/// Same posterior mean under a channel with additive dark rate:
/// z ~ Poisson(gamma * x + dark).
double finite_posterior_mean_dark(const FinitePrior& prior, double gamma, double dark,
                                  std::int64_t z);

/// Marginal output PMF (and its log) for a finite prior.
double finite_marginal_log_pmf(const FinitePrior& prior, double gamma, std::int64_t z);
double finite_marginal_pmf(const FinitePrior& prior, double gamma, std::int64_t z);

// ---------------------------------------------------------------------------
// Minimum expected reconstruction loss and information quantities
// ---------------------------------------------------------------------------

/// Expected loss of the exact posterior-mean denoiser at a fixed clean value:
///   sum_z P(z | x) * prl(x, E[X | Z = z])
/// with the z-sum truncated at the given tail mass.
double pointwise_mprl(const FinitePrior& prior, double gamma, double x,
                      double tail_mass = 1e-12);
double pointwise_mprl(const GammaPrior& prior, double gamma, double x,
                      double tail_mass = 1e-12);

/// Prior expectation of pointwise_mprl.  The finite version sums exactly
/// over the support; the Gamma version integrates the prior density with
/// adaptive Simpson quadrature (no closed form is used, so it can serve as
/// an independent cross-check of the shape-1 series below).
double marginal_mprl(const FinitePrior& prior, double gamma, double tail_mass = 1e-12);
double marginal_mprl(const GammaPrior& prior, double gamma, double tail_mass = 1e-12);

/// Closed-form minimum expected loss for an exponential prior:
///   rate/(rate+gamma)^2 * sum_z (z+1) p^z [psi(z+2) - ln(z+1)],
/// with p = gamma/(rate+gamma).
double exp_prior_mprl_series(double rate, double gamma);

/// Closed form of the integral of exp_prior_mprl_series over [0, gamma0]:
///   sum_{k>=1} [psi(k+1) - ln k] * x^k,  x = gamma0/(rate+gamma0).
/// Always bounded by gamma0 / (2 rate).
double exp_prior_partial_integral(double rate, double gamma0);

/// Analytic cap on the loss integral over [0, gamma0] under the max-entropy
/// (exponential) prior: dims * gamma0 / (2 * rate).
double left_tail_bound(double gamma0, double rate, std::int64_t dims);

/// Poisson large-deviation exponent x * h(d/x), h(u) = (1+u)ln(1+u) - u.
double poisson_chernoff_exponent(double x, double d);

/// Analytic cap on the loss integral over [gamma1, inf) for lattice-valued
/// data x (spacing delta): sums rounding-error events of size j*delta up to
/// j_max, each with a Chernoff-type decay exponent.
/// Requires x_i - j_max*delta > 0 for every component.
double right_tail_bound(const Vec& x, double delta, double gamma1, std::int64_t j_max);

/// Mutual information I(X; Z_gamma) for a finite prior (exact within the
/// stated z-tail truncation).
double mutual_information_finite(const FinitePrior& prior, double gamma,
                                 double tail_mass = 1e-12);

/// KL divergence between the channel output at a fixed x and the marginal:
/// D(P(z|x) || P(z)).  Its gamma-derivative equals pointwise_mprl.
double pointwise_kl(const FinitePrior& prior, double gamma, double x,
                    double tail_mass = 1e-12);

/// Shannon entropy of Poisson(lambda) in nats:
///   lambda(1 - ln lambda) + e^-lambda * sum_k lambda^k ln(k!) / k!.
/// Strictly increasing and concave in lambda.
double poisson_entropy(double lambda, double tail_mass = 1e-14);

}  // namespace pdiff
