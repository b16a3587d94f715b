#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pdiff/oracle.hpp"
#include "pdiff/rng.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

// Discrete count benchmarks ------------------------------------------------

struct PoissMixParams {
    std::vector<double> weights{0.1, 0.9};
    std::vector<double> lambdas{1.0, 100.0};
};
struct ZipParams {
    double pi0 = 0.7;
    double lambda = 5.0;
};
struct NBinomMixParams {
    std::vector<double> weights{0.8, 0.2};
    std::vector<double> r{1.0, 10.0};
    std::vector<double> p{0.9, 0.1};
};
struct BnbParams {
    double a = 0.5;
    double b = 1.5;
    double r = 5.0;
};
struct ZipfParams {
    double alpha = 1.7;
};
struct YuleSimonParams {
    double rho = 2.0;
};

// Continuous non-negative benchmarks ----------------------------------------

struct GammaParams {
    double shape = 0.5;
    double scale = 2.0;
};
struct LogNormalParams {
    double mu = 0.0;
    double sigma = 1.5;
};
struct LomaxParams {
    double c = 2.0;
    double s = 1.0;
};
struct HalfCauchyParams {
    double s = 1.0;
};
struct HalfTParams {
    double nu = 3.0;
    double s = 1.0;
};
struct WeibullParams {
    double k = 1.5;
    double lambda = 1.0;
};
struct BetaParams {
    double a = 2.0;
    double b = 2.0;
};
struct UniformParams {
    double lo = 0.0;
    double hi = 1.0;
};

using DistParams =
    std::variant<PoissMixParams, ZipParams, NBinomMixParams, BnbParams, ZipfParams,
                 YuleSimonParams, GammaParams, LogNormalParams, LomaxParams, HalfCauchyParams,
                 HalfTParams, WeibullParams, BetaParams, UniformParams>;

/// A synthetic source distribution plus its truncation policy.  Discrete
/// variants default to rejection-resampling above K = 50 with a matching
/// renormalized PMF; the Poisson mixture is exempt by default because its
/// dominant mode sits at 100.
struct DistributionSpec {
    DistParams params;
    bool truncate = false;
    int K = 50;

    bool is_discrete() const;
    std::string name() const;

    /// Build a spec by name ("poissmix", "zip", "nbinommix", "bnb", "zipf",
    /// "yulesimon", "gamma", "lognormal", "lomax", "halfcauchy", "halft",
    /// "weibull", "beta", "uniform") with the benchmark defaults.
    static DistributionSpec by_name(const std::string& name);
    static std::vector<std::string> known_names();
};

enum class TruncationMode { RenormalizedK, Untruncated };

/// n i.i.d. draws.  Discrete truncated variants rejection-resample values
/// above K.
Vec sample_spec(const DistributionSpec& spec, std::int64_t n, RngStream& rng);

/// Exact PMF (discrete variants only), renormalized over 0..K when the spec
/// is truncated.  Out-of-support k returns 0.
double pmf(const DistributionSpec& spec, std::int64_t k);

/// Exact density (continuous variants only).  Out-of-support x returns 0.
double pdf(const DistributionSpec& spec, double x);

/// Exact CDF (continuous variants only).
double cdf(const DistributionSpec& spec, double x);

/// Shannon entropy in nats of a discrete spec, either over the renormalized
/// truncated support or of the untruncated law.  Heavy-tailed variants use
/// an analytic power-law continuation beyond the direct summation range.
double true_entropy(const DistributionSpec& spec, TruncationMode mode);

/// Collapse a discrete spec into an explicit finite prior carrying all but
/// `tail_mass` of the probability (always renormalized to sum exactly 1).
FinitePrior to_finite_prior(const DistributionSpec& spec, double tail_mass = 1e-12);

}  // namespace pdiff
