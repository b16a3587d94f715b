#pragma once

#include <cstdint>

#include "pdiff/rng.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

/// Wasserstein-1 distance between two empirical univariate samples.
/// Equal sizes reduce to the mean absolute difference of the sorted samples;
/// unequal sizes fall back to the exact CDF-difference integral.
/// Throws std::invalid_argument on empty input.
double wasserstein1(const Vec& a, const Vec& b);

/// Mean negative log generated-probability of held-out samples, in nats.
/// Cells at or below `floor_prob` are floored there and the PMF is
/// renormalized, so out-of-support test values stay finite.
double empirical_nll(const Vec& test, const Vec& gen_pmf, double floor_prob);

/// Convenience overload using the default floor 1 / (n * (K+1)).
double empirical_nll(const Vec& test, const EmpiricalPmf& gen_pmf);

/// Histogram over 0..K after round-half-even; values outside the support are
/// tallied in the overflow diagnostic.
EmpiricalPmf estimate_pmf(const Vec& samples, int K);

/// Lattice convolution with a normalized discrete Gaussian kernel of
/// bandwidth h, renormalized over 0..K.
Vec smooth_pmf(const EmpiricalPmf& pmf, double h);

struct BootstrapBands {
    Vec mean;
    Vec sd;
};

/// B bootstrap resamples of `samples`; each is histogrammed, smoothed with
/// bandwidth h, and the cellwise mean / standard deviation returned.
BootstrapBands bootstrap_bands(const Vec& samples, int B, int K, double h, RngStream& rng);

}  // namespace pdiff
