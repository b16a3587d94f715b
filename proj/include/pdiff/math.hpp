#pragma once

#include <cstdint>

namespace pdiff {

// ---------------------------------------------------------------------------
// Reconstruction losses
// ---------------------------------------------------------------------------

/// l0(x) = x ln x - x + 1 for x > 0, extended by continuity to l0(0) = 1.
/// Non-negative, strictly convex, with its unique zero at x = 1.
/// Throws std::domain_error for negative x.
double l0(double x);

/// Poisson reconstruction loss l(x, xhat) = x ln(x/xhat) - x + xhat.
/// Defined for x >= 0 and xhat > 0, with the x = 0 term taken as 0 by
/// continuity (so prl(0, xhat) = xhat).  Equals xhat * l0(x/xhat).
/// Throws std::domain_error when xhat <= 0: the loss diverges as xhat -> 0+
/// for any x > 0, so a non-positive estimate is never meaningful.
double prl(double x, double xhat);

/// (x - xhat)^2.
double squared_error(double x, double xhat);

// ---------------------------------------------------------------------------
// Gamma-family special functions
// ---------------------------------------------------------------------------

/// ln(n!) with absolute error below 1e-12: exact cumulative sums for small n,
/// Stirling's series beyond the table.
double log_factorial(std::int64_t n);

/// ln Gamma(x) for x > 0 (Lanczos approximation, ~1e-13 relative).
double log_gamma(double x);

/// Digamma psi(x) for x > 0 via the shift recurrence plus the asymptotic
/// series; absolute error below 1e-10 over the positive axis.
double digamma(double x);

/// ln B(a, b).
double log_beta(double a, double b);

/// Regularized lower incomplete gamma P(a, x).
double reg_gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double reg_gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double reg_beta(double a, double b, double x);

/// Riemann zeta(s) for s > 1: direct series with an Euler-Maclaurin tail,
/// accurate to ~1e-12.
double zeta(double s);

// ---------------------------------------------------------------------------
// Channel and quadrature helpers
// ---------------------------------------------------------------------------

/// Log-PMF of Poisson(lambda) at z: z ln(lambda) - lambda - ln(z!).
/// Convention for the degenerate channel lambda = 0: log-pmf 0 at z = 0 and
/// -infinity otherwise.  Throws std::domain_error for lambda < 0 or z < 0.
double poisson_log_pmf(std::int64_t z, double lambda);

/// Quantile of the logistic distribution: loc + scale * ln(u / (1 - u)).
/// Requires u in (0, 1) and scale > 0.
double logistic_quantile(double u, double loc, double scale);

/// Density of the logistic distribution at x.
double logistic_pdf(double x, double loc, double scale);

/// CDF of the logistic distribution at x.
double logistic_cdf(double x, double loc, double scale);

// ---------------------------------------------------------------------------
// Small activation helpers shared by the denoiser and the oracles
// ---------------------------------------------------------------------------

double sigmoid(double x);
double softplus(double x);
double silu(double x);

}  // namespace pdiff
