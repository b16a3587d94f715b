#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "pdiff/channel.hpp"
#include "pdiff/likelihood.hpp"
#include "pdiff/math.hpp"
#include "pdiff/oracle.hpp"
#include "pdiff/sampling.hpp"
#include "pdiff/synthetic.hpp"
#include "pdiff/trainer.hpp"

using namespace pdiff;

TEST_CASE("training is deterministic in the seed") {
    RngStream rng(1, 0);
    Vec data(256);
    for (Eigen::Index i = 0; i < data.size(); ++i)
        data[i] = static_cast<double>(poisson_sample(rng, 4.0));

    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    cfg.epochs = 3;
    cfg.seed = 42;
    cfg.arch.hidden_dim = 16;
    cfg.arch.embed_dim = 16;

    const TrainResult a = train(cfg, data);
    const TrainResult b = train(cfg, data);
    CHECK(a.model.params.flatten() == b.model.params.flatten());
    CHECK(a.state.epoch_loss == b.state.epoch_loss);

    cfg.seed = 43;
    const TrainResult c = train(cfg, data);
    CHECK(a.model.params.flatten() != c.model.params.flatten());
}

TEST_CASE("resume reproduces the uninterrupted trajectory") {
    RngStream rng(2, 0);
    Vec data(256);
    for (Eigen::Index i = 0; i < data.size(); ++i)
        data[i] = static_cast<double>(poisson_sample(rng, 3.0));

    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    cfg.epochs = 6;
    cfg.seed = 7;
    cfg.arch.hidden_dim = 16;
    cfg.arch.embed_dim = 16;
    const TrainResult full = train(cfg, data);

    TrainConfig half = cfg;
    half.epochs = 3;
    const TrainResult first = train(half, data);
    const TrainResult resumed = train(cfg, data, &first);
    CHECK(resumed.model.params.flatten() == full.model.params.flatten());
    CHECK(resumed.state.epoch_loss == full.state.epoch_loss);
    CHECK(resumed.state.opt.m == full.state.opt.m);
}

TEST_CASE("degenerate data is learned to the constant") {
    const double c = 3.0;
    const Vec data = Vec::Constant(2560, c);
    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    cfg.epochs = 200;
    cfg.seed = 11;
    const TrainResult run = train(cfg, data);

    // the weighted loss must have dropped
    CHECK(run.state.epoch_loss.back() < run.state.epoch_loss.front());

    // at high SNR the denoiser should echo the constant (channel domain in,
    // data units out)
    RngStream rng(12, 0);
    const double gamma = std::exp(5.0);
    const Vec x_chan = run.model.to_channel_domain(Vec::Constant(512, c));
    const Vec z = corrupt_poisson(x_chan, gamma, cfg.eps_shift, rng);
    const Vec xhat = run.model.from_model_output(run.model.denoise(z, gamma));
    CHECK((xhat - c).abs().mean() < 0.05 * c);
}

TEST_CASE("gaussian-mse run tracks the signal at high snr") {
    RngStream rng(3, 0);
    Vec data(2560);
    for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = rng.normal();

    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Gaussian, LossKind::Mse);
    cfg.epochs = 60;
    cfg.seed = 5;
    const TrainResult run = train(cfg, data);
    CHECK(run.model.params.arch.output_activation == OutputActivation::Identity);

    const double gamma = std::exp(5.0);
    const Vec xc = run.model.to_channel_domain(data.head(512));
    RngStream noise_rng(6, 0);
    const Vec z = corrupt_gaussian(xc, gamma, noise_rng);
    const Vec xhat = run.model.denoise(z, gamma);
    const Vec x = xc;
    const double cx = ((x - x.mean()) * (xhat - xhat.mean())).mean();
    const double corr =
        cx / std::sqrt((x - x.mean()).square().mean() * (xhat - xhat.mean()).square().mean());
    CHECK(corr > 0.95);
}

TEST_CASE("cross training produces four finite runs") {
    RngStream rng(4, 0);
    const DistributionSpec pm = DistributionSpec::by_name("poissmix");
    const Vec data = sample_spec(pm, 2000, rng);

    TrainConfig base = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    base.epochs = 2;
    base.seed = 9;
    base.arch.hidden_dim = 16;
    base.arch.embed_dim = 16;
    const CrossTrainResult all = cross_train(base, data);
    for (const TrainResult* run :
         {&all.poisson_prl, &all.poisson_mse, &all.gaussian_prl, &all.gaussian_mse}) {
        CHECK(std::isfinite(run->state.epoch_loss.back()));
        CHECK(run->state.epochs_done == 2);
    }
    // matched seeds: rerunning reproduces each variant exactly
    const CrossTrainResult again = cross_train(base, data);
    CHECK(all.poisson_prl.model.params.flatten() == again.poisson_prl.model.params.flatten());
    CHECK(all.gaussian_mse.model.params.flatten() == again.gaussian_mse.model.params.flatten());

    // the gaussian+prl transform maps data into [1, 2]
    const Vec chan = all.gaussian_prl.model.to_channel_domain(data);
    CHECK(chan.minCoeff() >= 1.0 - 1e-12);
    CHECK(chan.maxCoeff() <= 2.0 + 1e-12);
    const Vec back = all.gaussian_prl.model.from_model_output(chan);
    CHECK((back - data).abs().maxCoeff() < 1e-9);
}

TEST_CASE("training improves the denoiser on every discrete benchmark") {
    // Per-epoch weighted means are dominated by rare heavy importance
    // weights at this reduced scale, so progress is measured the stable way:
    // the unweighted loss curve of the trained model must dip below the
    // barely-trained one on held-out data.
    std::uint64_t seed = 31;
    for (const auto& name : {"poissmix", "zip", "nbinommix", "bnb", "zipf", "yulesimon"}) {
        RngStream rng(seed++, 0);
        const DistributionSpec spec = DistributionSpec::by_name(name);
        const Vec data = sample_spec(spec, 4000, rng);
        const Vec held_out = sample_spec(spec, 2000, rng);

        TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
        cfg.epochs = 1;
        cfg.seed = seed;
        cfg.arch.hidden_dim = 32;
        cfg.arch.embed_dim = 32;
        const TrainResult brief = train(cfg, data);
        cfg.epochs = 40;
        const TrainResult longer = train(cfg, data);

        Vec alphas(4);
        alphas << -2.0, 0.0, 2.0, 4.0;
        auto total = [&](const TrainedModel& m) {
            RngStream cr(seed * 7 + 1, 0);
            double acc = 0.0;
            for (const auto& [a, loss] :
                 loss_curve(model_denoiser(m), held_out, alphas, NoiseKind::Poisson,
                            LossKind::Prl, m.eps_shift, 8, cr))
                acc += loss;
            return acc;
        };
        INFO(std::string(name));
        CHECK(total(longer.model) < total(brief.model));
    }
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    RngStream rng(6, 0);
    Vec data(256);
    for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = rng.normal();
    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Gaussian, LossKind::Mse);
    cfg.epochs = 3;
    cfg.lr = 1e300;  // one optimizer step overflows the conditioning products
    CHECK_THROWS_AS(train(cfg, data), std::runtime_error);
}

TEST_CASE("importance weighting is unbiased for the likelihood integrand") {
    // Frozen lattice-snap denoiser: its e^alpha-weighted loss decays on both
    // edges of the window, so the truncated-logistic step estimator and a
    // dense uniform grid must meet on the same integral of e^alpha * E[loss].
    RngStream rng(8, 0);
    const Eigen::Index n_data = 64;
    Vec data(n_data);
    for (Eigen::Index i = 0; i < n_data; ++i) data[i] = rng.uniform() < 0.5 ? 1.0 : 2.0;

    const double lo = -28.0, hi = 37.0, loc = -1.0, scale = 5.0;
    auto stub = [](const Vec& z, double gamma) {
        const double floor_val = std::min(0.5, 1.0 / (gamma * gamma));
        return z.unaryExpr([&](double v) {
            const double snapped = std::nearbyint(v / gamma);
            return std::max(snapped, floor_val);
        }).eval();
    };

    // uniform-grid reference with generous nodes and draws
    const int grid_n = 2000;
    double grid = 0.0;
    RngStream grid_rng(9, 0);
    for (int i = 0; i < grid_n; ++i) {
        const double a = lo + (hi - lo) * i / (grid_n - 1);
        const double gamma = std::exp(a);
        double mean_loss = 0.0;
        const int draws = 8;
        for (int d = 0; d < draws; ++d) {
            const Vec z = corrupt_poisson(data, gamma, 0.0, grid_rng);
            const Vec xhat = stub(z, gamma);
            double acc = 0.0;
            for (Eigen::Index k = 0; k < n_data; ++k) acc += prl(data[k], xhat[k]);
            mean_loss += acc / static_cast<double>(n_data);
        }
        mean_loss /= draws;
        const double w = (i == 0 || i == grid_n - 1) ? 0.5 : 1.0;
        grid += w * std::exp(a) * mean_loss * (hi - lo) / (grid_n - 1);
    }

    // training-style stochastic estimate: one alpha and one minibatch per step
    const double f_lo = logistic_cdf(lo, loc, scale);
    const double f_hi = logistic_cdf(hi, loc, scale);
    RngStream is_rng(10, 0);
    const int steps = 100000;
    const int batch = 16;
    double acc = 0.0;
    for (int s = 0; s < steps; ++s) {
        const double u = f_lo + (f_hi - f_lo) * is_rng.uniform();
        const double a = logistic_quantile(u, loc, scale);
        const double gamma = std::exp(a);
        Vec xb(batch);
        for (int k = 0; k < batch; ++k)
            xb[k] = data[static_cast<Eigen::Index>(is_rng.next() % n_data)];
        const Vec z = corrupt_poisson(xb, gamma, 0.0, is_rng);
        const Vec xhat = stub(z, gamma);
        double loss = 0.0;
        for (int k = 0; k < batch; ++k) loss += prl(xb[k], xhat[k]);
        loss /= batch;
        const double q = logistic_pdf(a, loc, scale) / (f_hi - f_lo);
        acc += std::exp(a) * loss / q;
    }
    const double is_estimate = acc / steps;
    CHECK(std::abs(is_estimate - grid) <= 0.02 * grid);
}

TEST_CASE("both weight modes share the conditional-mean optimum") {
    // On a dense grid of offsets applied to the exact posterior mean, the
    // weighted objective under either weighting is minimized at zero offset.
    FinitePrior prior;
    prior.support = Vec(2);
    prior.support << 1.0, 2.0;
    prior.probs = Vec(2);
    prior.probs << 0.5, 0.5;

    const double loc = -1.0, scale = 5.0;
    const std::vector<double> alphas = {-3.0, -1.0, 0.0, 1.0, 2.5};
    for (const bool ea_weight : {false, true}) {
        double best = 1e300, best_delta = 1e300;
        for (double delta = -0.4; delta <= 0.4 + 1e-12; delta += 0.01) {
            double objective = 0.0;
            for (const double a : alphas) {
                const double gamma = std::exp(a);
                const double w =
                    (ea_weight ? std::exp(a) : 1.0) / logistic_pdf(a, loc, scale);
                // expected loss of the offset denoiser at this SNR
                double expected = 0.0;
                for (int j = 0; j < 2; ++j) {
                    const double x = prior.support[j];
                    const ZWindow win = poisson_mass_window(gamma * x, 1e-10);
                    for (std::int64_t z = win.lo; z <= win.hi; ++z) {
                        const double pz = std::exp(poisson_log_pmf(z, gamma * x));
                        const double xhat =
                            std::max(1e-9, finite_posterior_mean(prior, gamma, z) + delta);
                        expected += prior.probs[j] * pz * prl(x, xhat);
                    }
                }
                objective += w * expected;
            }
            if (objective < best) {
                best = objective;
                best_delta = delta;
            }
        }
        CHECK(std::abs(best_delta) <= 0.0100001);
    }
}
