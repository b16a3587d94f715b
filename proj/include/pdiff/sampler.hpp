#pragma once

#include <cstdint>
#include <functional>

#include "pdiff/rng.hpp"
#include "pdiff/trainer.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

/// Log-spaced SNR ladder.  gammas are stored ascending, which is also the
/// traversal order: generation starts at the lowest SNR (zero counts carry
/// no signal) and walks toward the highest.
struct GammaSchedule {
    Vec gammas;  // ascending, length T
    double alpha_min;
    double alpha_max;
    int T;
};

/// gammas[i] = exp(alpha_min + i/(T-1) * (alpha_max - alpha_min)).
GammaSchedule make_schedule(int T, double alpha_min, double alpha_max);

/// A denoiser for the reverse chain: raw counts + SNR -> positive estimate
/// in data units.  Lets the closed-form posterior-mean oracles stand in for
/// the network.
using ChainDenoiser = std::function<Vec(const Vec& z_counts, double gamma)>;

struct SampleResult {
    Vec continuous;  // final denoiser outputs
    Vec rounded;     // round-half-even lattice values for discrete metrics
};

/// Reverse generation: initialize counts at zero, denoise at the current
/// SNR, and accumulate Poisson increments toward the next (higher) SNR at
/// the estimated rate — by superposition the running counts realize a
/// Poisson(gamma * xhat) observation at every rung.  The final denoiser
/// output is returned; no draw follows the last step.
SampleResult reverse_sample(const ChainDenoiser& denoiser, const GammaSchedule& schedule,
                            std::int64_t n, RngStream& rng);

/// Convenience overload running a Poisson-trained model.
SampleResult reverse_sample(const TrainedModel& model, const GammaSchedule& schedule,
                            std::int64_t n, RngStream& rng);

/// Ancestral Gaussian baseline: linear beta schedule over T steps, the model
/// predicting the clean value at each step.  Outputs are mapped back to data
/// units, clipped at zero; `rounded` holds the lattice values.
SampleResult gaussian_reverse_sample(const TrainedModel& model, int T, double beta_min,
                                     double beta_max, std::int64_t n, RngStream& rng);

}  // namespace pdiff
