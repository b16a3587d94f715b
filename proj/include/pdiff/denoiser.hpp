#pragma once

#include <cstdint>
#include <vector>

#include "pdiff/rng.hpp"
#include "pdiff/types.hpp"

namespace pdiff {

enum class OutputActivation { SoftplusEps, Identity };
enum class LossKind { Prl, Mse };

/// Conditional MLP layout: a log-SNR embedding (sinusoidal features through
/// one SiLU dense layer) is projected and added to the first hidden
/// pre-activation; each hidden layer applies LayerNorm (normalize, affine)
/// followed by LeakyReLU.  The softplus head adds 1e-6 so outputs stay in
/// the domain of the Poisson reconstruction loss.
struct ArchSpec {
    int input_dim = 1;
    int hidden_dim = 64;
    int n_hidden_layers = 3;
    int embed_dim = 64;
    double leaky_slope = 0.2;
    OutputActivation output_activation = OutputActivation::SoftplusEps;
    // Feed the log-SNR as an extra first-layer input coordinate alongside
    // the observation (the embedding conditions additively either way).
    bool alpha_input = true;

    void validate() const;
};

struct DenoiserParams {
    ArchSpec arch;
    Mat embed_w;                // embed_dim x embed_dim
    Vec embed_b;                // embed_dim
    Mat in_w;                   // (input_dim [+1]) x hidden_dim
    Vec in_b;                   // hidden_dim
    Mat cond_w;                 // embed_dim x hidden_dim
    std::vector<Vec> ln_gain;   // n_hidden_layers x hidden_dim
    std::vector<Vec> ln_shift;  // n_hidden_layers x hidden_dim
    std::vector<Mat> hid_w;     // (n_hidden_layers - 1) x hidden_dim x hidden_dim
    std::vector<Vec> hid_b;     // (n_hidden_layers - 1) x hidden_dim
    Mat out_w;                  // hidden_dim x input_dim
    Vec out_b;                  // input_dim

    /// Total scalar parameter count.
    std::int64_t count() const;
    /// Parameters flattened in the fixed serialization order.
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

/// Weights from fan-in-scaled uniform init; biases and normalization shifts
/// zero, normalization gains one.  Deterministic in the stream.
DenoiserParams init_params(const ArchSpec& arch, RngStream& rng);

/// Sinusoidal log-SNR features: embed_dim/2 sine/cosine pairs at
/// geometrically spaced frequencies (1 down to 1e-4).
Vec logsnr_features(double alpha, int embed_dim);

/// Full embedding: features -> dense -> SiLU.
Vec embed_logsnr(const DenoiserParams& params, double alpha);

/// Intermediate activations kept for the backward pass.
struct ForwardCache {
    Mat z;                      // network input, n x input_dim
    Vec alpha;                  // n
    Mat first_in;               // n x (input_dim [+1])
    Mat features;               // n x embed_dim
    Mat embed_pre;              // n x embed_dim (before SiLU)
    Mat embed;                  // n x embed_dim
    std::vector<Mat> norm;      // per layer, n x hidden (normalized, pre-affine)
    std::vector<Mat> affine;    // per layer, n x hidden (post-affine, pre-LeakyReLU)
    std::vector<Mat> act;       // per layer, n x hidden
    std::vector<Vec> inv_std;   // per layer, n
    Mat head_pre;               // n x input_dim
    Mat out;                    // n x input_dim
};

/// Batch forward pass.  `z` is the already-transformed network input
/// (rows = samples); `alpha` holds one log-SNR per row.  Outputs are
/// strictly positive under the softplus head.
/// Throws std::runtime_error naming the layer if any intermediate is
/// non-finite.
Mat forward(const DenoiserParams& params, const Mat& z, const Vec& alpha);
Mat forward(const DenoiserParams& params, const Mat& z, const Vec& alpha, ForwardCache& cache);

/// Exact reverse-mode gradients of sum_i w_i * loss(target_i, out_i).
/// Returns the gradient holder (same shapes as the parameters) and the
/// objective value.
struct BackwardResult {
    DenoiserParams grads;
    double loss = 0.0;
};
BackwardResult backward(const DenoiserParams& params, const ForwardCache& cache,
                        const Mat& targets, const Vec& sample_weights, LossKind loss_kind);

/// Bias-corrected Adam.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_opt = 1e-8;
};

AdamState make_adam_state(const DenoiserParams& params, double lr = 1e-3, double beta1 = 0.9,
                          double beta2 = 0.999, double eps_opt = 1e-8);
void adam_step(AdamState& state, DenoiserParams& params, const DenoiserParams& grads);

}  // namespace pdiff
