#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "pdiff/oracle.hpp"
#include "pdiff/rng.hpp"
#include "pdiff/trainer.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

enum class QuadratureScheme { LogisticImportance, UniformGrid };

struct QuadratureSpec {
    QuadratureScheme scheme = QuadratureScheme::LogisticImportance;
    int n_points = 1000;
    double loc = -1.0;
    double scale = 5.0;
    double alpha_lo = -28.0;
    double alpha_hi = 37.0;
    int mc_draws_per_node = 8;

    void validate() const;
};

struct NllReport {
    double diffusion_term = 0.0;
    double left_tail = 0.0;
    double right_tail = 0.0;
    double total = 0.0;
    std::vector<std::pair<double, double>> curve;  // (alpha, mean loss per node)
    std::string units = "nats";
};

/// Denoiser in channel units: observation batch + SNR -> estimate batch.
using DenoiserFn = std::function<Vec(const Vec& z, double gamma)>;

/// Exact posterior-mean denoiser for a known finite prior.
DenoiserFn oracle_denoiser(const FinitePrior& prior);

/// Adapter around a trained model (input normalization included).
DenoiserFn model_denoiser(const TrainedModel& model);

/// Negative log-likelihood of count data under a Poisson-channel denoiser:
/// quadrature of e^alpha * E[prl loss] over log-SNR, plus the analytic
/// left tail (max-entropy exponential prior, rate 1/mean) below alpha_lo and
/// the Chernoff lattice bound (up to 3 rounding steps of `lattice_delta`,
/// the data's lattice spacing) above alpha_hi.  Data is corrupted freshly at
/// every node.
NllReport estimate_nll_poisson(const DenoiserFn& denoiser, const Vec& data,
                               const QuadratureSpec& quad, double eps_shift, RngStream& rng,
                               double lattice_delta = 1.0);

/// Gaussian-channel counterpart: quadrature of (1/2) e^alpha * E[squared
/// error]; no lattice tails (choose alpha bounds wide enough for the data
/// variance, see default_gaussian_bounds).
NllReport estimate_nll_gaussian(const DenoiserFn& denoiser, const Vec& data,
                                const QuadratureSpec& quad, RngStream& rng);

/// 1-D reduction of the covariance-spectrum heuristic: center the window at
/// -ln(sample variance) and take a fixed +-14 half-width.
std::pair<double, double> default_gaussian_bounds(const Vec& data);

/// Mean loss per log-SNR node on held-out data with fresh corruption;
/// plot-ready.
std::vector<std::pair<double, double>> loss_curve(const DenoiserFn& denoiser, const Vec& data,
                                                  const Vec& alphas, NoiseKind noise,
                                                  LossKind loss, double eps_shift,
                                                  int mc_draws, RngStream& rng);

}  // namespace pdiff
