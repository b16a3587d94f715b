#include "pdiff/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pdiff/channel.hpp"
#include "pdiff/parallel.hpp"
#include "pdiff/sampling.hpp"

namespace pdiff {

GammaSchedule make_schedule(int T, double alpha_min, double alpha_max) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be at least 2");
    if (!(alpha_min < alpha_max))
        throw std::invalid_argument("make_schedule: alpha_min must be below alpha_max");
    GammaSchedule s;
    s.T = T;
    s.alpha_min = alpha_min;
    s.alpha_max = alpha_max;
    s.gammas.resize(T);
    for (int i = 0; i < T; ++i)
        s.gammas[i] = std::exp(alpha_min + (alpha_max - alpha_min) * static_cast<double>(i) /
                                               static_cast<double>(T - 1));
    return s;
}

SampleResult reverse_sample(const ChainDenoiser& denoiser, const GammaSchedule& schedule,
                            std::int64_t n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("reverse_sample: n must be positive");
    Vec z = Vec::Zero(n);  // lowest SNR carries zero counts
    Vec xhat;
    for (int i = 0; i < schedule.T; ++i) {
        xhat = denoiser(z, schedule.gammas[i]);
        if (!xhat.allFinite())
            throw std::runtime_error("reverse_sample: non-finite denoiser output at step " +
                                     std::to_string(i));
        if ((xhat <= 0.0).any())
            throw std::runtime_error("reverse_sample: denoiser output must be positive (step " +
                                     std::to_string(i) + ")");
        // Counts accumulate: adding Pois((gamma' - gamma) * xhat) realizes a
        // Pois(gamma' * xhat) observation by superposition while keeping the
        // photons already drawn.  An independent redraw has the same marginal
        // but discards the coupling and visibly under-disperses the output.
        if (i + 1 < schedule.T)
            z += corrupt_poisson(xhat, schedule.gammas[i + 1] - schedule.gammas[i], 0.0, rng);
    }
    SampleResult out;
    out.continuous = xhat;
    out.rounded = xhat.unaryExpr([](double v) { return std::nearbyint(v); });
    return out;
}

SampleResult reverse_sample(const TrainedModel& model, const GammaSchedule& schedule,
                            std::int64_t n, RngStream& rng) {
    if (model.noise != NoiseKind::Poisson)
        throw std::invalid_argument("reverse_sample: model was not trained on the Poisson channel");
    // The chain runs in the model's channel domain; outputs return to data
    // units before rounding.
    SampleResult out = reverse_sample(
        [&model](const Vec& z, double gamma) { return model.denoise(z, gamma); }, schedule, n,
        rng);
    out.continuous = model.from_model_output(out.continuous);
    out.rounded = out.continuous.unaryExpr([](double v) { return std::nearbyint(v); });
    return out;
}

SampleResult gaussian_reverse_sample(const TrainedModel& model, int T, double beta_min,
                                     double beta_max, std::int64_t n, RngStream& rng) {
    if (model.noise != NoiseKind::Gaussian)
        throw std::invalid_argument(
            "gaussian_reverse_sample: model was not trained on the Gaussian channel");
    if (T < 2 || n < 1) throw std::invalid_argument("gaussian_reverse_sample: bad T or n");

    Vec beta(T), alpha_bar(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        beta[t] = beta_min + (beta_max - beta_min) * static_cast<double>(t) /
                                 static_cast<double>(T - 1);
        prod *= 1.0 - beta[t];
        alpha_bar[t] = prod;
    }

    // z_T ~ N(0, I)
    RngStream init = rng.fork();
    Vec z(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        RngStream sub = init.substream(i);
        z[static_cast<Eigen::Index>(i)] = sub.normal();
    });

    Vec xhat;
    for (int t = T - 1; t >= 0; --t) {
        const double ab = alpha_bar[t];
        const double gamma = ab / (1.0 - ab);
        // The model input convention z_gamma / sqrt(1 + gamma) equals the
        // ancestral latent z_t directly.
        const Mat input = Eigen::Map<const Mat>(z.data(), n, 1);
        const Vec alphas = Vec::Constant(n, std::log(gamma));
        xhat = forward(model.params, input, alphas).col(0).array();
        if (!xhat.allFinite())
            throw std::runtime_error("gaussian_reverse_sample: non-finite prediction at step " +
                                     std::to_string(t));
        if (t == 0) break;
        const double ab_prev = alpha_bar[t - 1];
        const double at = 1.0 - beta[t];
        const double coef_x0 = std::sqrt(ab_prev) * beta[t] / (1.0 - ab);
        const double coef_zt = std::sqrt(at) * (1.0 - ab_prev) / (1.0 - ab);
        const double sigma = std::sqrt((1.0 - ab_prev) / (1.0 - ab) * beta[t]);
        RngStream step = rng.fork();
        Vec noise(n);
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            RngStream sub = step.substream(i);
            noise[static_cast<Eigen::Index>(i)] = sub.normal();
        });
        z = coef_x0 * xhat + coef_zt * z + sigma * noise;
    }

    SampleResult out;
    out.continuous = model.from_model_output(xhat).max(0.0);
    out.rounded = out.continuous.unaryExpr([](double v) { return std::nearbyint(v); });
    return out;
}

}  // namespace pdiff
