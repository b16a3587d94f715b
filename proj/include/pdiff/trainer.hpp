#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdiff/channel.hpp"
#include "pdiff/denoiser.hpp"
#include "pdiff/rng.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

/// Importance weight applied to each minibatch loss.  InvQ divides by the
/// logistic density only; EaOverQ additionally multiplies by e^alpha, the
/// factor the likelihood integrand carries.  Both weightings share the same
/// optimum (the loss is minimized pointwise in gamma by the conditional
/// mean), so the choice is a variance trade-off, not a bias one.
enum class WeightMode { InvQ, EaOverQ };

struct TrainConfig {
    NoiseKind noise = NoiseKind::Poisson;
    LossKind loss = LossKind::Prl;
    int epochs = 200;
    int batch_size = 128;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double snr_loc = -1.0;   // logistic log-SNR location (Poisson default)
    double snr_scale = 5.0;  // logistic log-SNR scale (Poisson default)
    WeightMode weight_mode = WeightMode::InvQ;
    std::uint64_t seed = 1;
    double eps_shift = 1e-6;
    ArchSpec arch;

    /// Defaults per channel/loss pair: logistic (6, 3) for Gaussian noising,
    /// (-1, 5) for Poisson; identity head only for Gaussian + MSE.
    static TrainConfig defaults_for(NoiseKind noise, LossKind loss);

    void validate() const;
};

/// A trained denoiser plus every data transform needed to use it:
/// Poisson runs rescale the data so the channel sees mean-10 counts
/// (count structure is preserved, the network input z/(1+gamma) lives on a
/// tractable scale) and train on those channel-domain values; Gaussian+MSE
/// runs z-score the data; Gaussian+PRL runs map the data to [1, 2] so the
/// loss domain stays positive.
struct TrainedModel {
    DenoiserParams params;
    NoiseKind noise = NoiseKind::Poisson;
    LossKind loss = LossKind::Prl;
    double channel_scale = 1.0;
    double data_mean = 0.0;
    double data_std = 1.0;
    double data_min = 0.0;
    double data_range = 1.0;
    double eps_shift = 1e-6;
    double snr_loc = -1.0;
    double snr_scale = 5.0;

    /// Clean data -> the domain the channel (and loss) operate in.
    Vec to_channel_domain(const Vec& x) const;
    /// Network output -> original data units.
    Vec from_model_output(const Vec& yhat) const;
    /// Channel observation -> network input rows.
    Mat model_input(const Vec& z, double gamma) const;
    /// Denoise a batch of channel observations at one SNR.
    Vec denoise(const Vec& z, double gamma) const;
};

/// Optimizer / RNG / progress snapshot sufficient to continue a run and
/// reproduce the uninterrupted trajectory exactly.
struct TrainerState {
    AdamState opt;
    std::array<std::uint64_t, 4> rng_state{};
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_stream = 0;
    int epochs_done = 0;
    std::vector<double> epoch_loss;
};

struct TrainResult {
    TrainedModel model;
    TrainerState state;
};

/// Algorithm: per step draw a minibatch and one logistic log-SNR, corrupt,
/// normalize, denoise, weight the mean loss, and take an Adam step.
/// Deterministic in config.seed.  Throws std::runtime_error with step
/// diagnostics if the loss turns non-finite.
/// When `resume` is non-null, continues that run up to config.epochs.
TrainResult train(const TrainConfig& config, const Vec& data,
                  const TrainResult* resume = nullptr);

struct CrossTrainResult {
    TrainResult poisson_prl;
    TrainResult poisson_mse;
    TrainResult gaussian_prl;
    TrainResult gaussian_mse;
};

/// The 2x2 {Poisson, Gaussian} x {PRL, MSE} matrix with matched seeds and
/// epochs, isolating the channel choice from the loss choice.
CrossTrainResult cross_train(const TrainConfig& base, const Vec& data);

// Checkpoint file: magic + version header, architecture, data transforms,
// parameters as little-endian doubles, and optionally the trainer state for
// exact resume.
void save_checkpoint(const std::string& path, const TrainedModel& model,
                     const TrainerState* state = nullptr);
struct Checkpoint {
    TrainedModel model;
    bool has_state = false;
    TrainerState state;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pdiff
