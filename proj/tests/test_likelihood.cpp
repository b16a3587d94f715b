#include <doctest.h>

#include <cmath>

#include "pdiff/likelihood.hpp"
#include "pdiff/math.hpp"
#include "pdiff/oracle.hpp"
#include "pdiff/sampling.hpp"
#include "pdiff/synthetic.hpp"
#include "pdiff/trainer.hpp"

using namespace pdiff;

namespace {

FinitePrior uniform12() {
    FinitePrior p;
    p.support = Vec(2);
    p.support << 1.0, 2.0;
    p.probs = Vec(2);
    p.probs << 0.5, 0.5;
    return p;
}

Vec draw_uniform12(Eigen::Index n, RngStream& rng) {
    Vec data(n);
    for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.uniform() < 0.5 ? 1.0 : 2.0;
    return data;
}

}  // namespace

TEST_CASE("oracle pipeline recovers the two-point entropy") {
    const FinitePrior prior = uniform12();
    RngStream rng(1, 0);
    const Vec data = draw_uniform12(6000, rng);
    QuadratureSpec quad;
    quad.n_points = 600;
    quad.mc_draws_per_node = 4;
    RngStream qr(2, 0);
    const NllReport report =
        estimate_nll_poisson(oracle_denoiser(prior), data, quad, 1e-6, qr);
    CHECK(report.total == doctest::Approx(std::log(2.0)).epsilon(0.025));
    CHECK(report.total == report.diffusion_term + report.left_tail + report.right_tail);
    CHECK(report.left_tail >= 0.0);
    CHECK(report.right_tail >= 0.0);
    CHECK(report.curve.size() == 600);
}

TEST_CASE("capped integration matches the closed-form partial integral") {
    // Exponential source, conjugate posterior mean as the denoiser,
    // integration stopped at gamma = 1 with no tail corrections.
    RngStream rng(3, 0);
    const Eigen::Index n = 6000;
    Vec data(n);
    for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.exponential(1.0);

    DenoiserFn oracle = [](const Vec& z, double gamma) {
        Vec out(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            out[i] = gamma_posterior_mean(GammaPrior{1.0, 1.0}, gamma,
                                          static_cast<std::int64_t>(std::nearbyint(z[i])));
        return out;
    };
    QuadratureSpec quad;
    quad.scheme = QuadratureScheme::UniformGrid;
    quad.n_points = 700;
    quad.mc_draws_per_node = 4;
    quad.alpha_lo = -26.0;
    quad.alpha_hi = 0.0;
    RngStream qr(4, 0);
    const NllReport report = estimate_nll_poisson(oracle, data, quad, 0.0, qr);
    CHECK(report.diffusion_term == doctest::Approx(0.30124477334991937).epsilon(0.02));
}

TEST_CASE("binary gaussian channel integrates to ln 2") {
    RngStream rng(5, 0);
    const Eigen::Index n = 2000;
    Vec data(n);
    for (Eigen::Index i = 0; i < n; ++i) data[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;

    DenoiserFn tanh_posterior = [](const Vec& z, double gamma) {
        const double root = std::sqrt(gamma);
        return (root * z).tanh().eval();
    };
    QuadratureSpec quad;
    quad.scheme = QuadratureScheme::UniformGrid;
    quad.n_points = 1200;
    quad.mc_draws_per_node = 1;
    quad.alpha_lo = -14.0;
    quad.alpha_hi = 10.0;
    RngStream qr(6, 0);
    const NllReport report = estimate_nll_gaussian(tanh_posterior, data, quad, qr);
    CHECK(report.total == doctest::Approx(std::log(2.0)).epsilon(0.01));
    CHECK(report.left_tail == 0.0);
    CHECK(report.right_tail == 0.0);
}

TEST_CASE("loss curve limits for the exact denoiser") {
    const FinitePrior prior = uniform12();
    RngStream rng(7, 0);
    const Vec data = draw_uniform12(3000, rng);
    Vec alphas(3);
    alphas << -12.0, 0.0, 8.0;
    RngStream cr(8, 0);
    const auto curve = loss_curve(oracle_denoiser(prior), data, alphas, NoiseKind::Poisson,
                                  LossKind::Prl, 1e-6, 4, cr);
    REQUIRE(curve.size() == 3);
    for (const auto& [a, loss] : curve) {
        CHECK(std::isfinite(loss));
        CHECK(loss >= 0.0);
    }
    // gamma -> 0: loss against the prior mean; gamma -> inf: vanishing loss
    const double low_limit = 0.5 * prl(1.0, 1.5) + 0.5 * prl(2.0, 1.5);
    CHECK(curve.front().second == doctest::Approx(low_limit).epsilon(0.02));
    CHECK(curve.back().second < 1e-3);
}

TEST_CASE("quadrature schemes agree on a frozen denoiser") {
    const DistributionSpec pm = DistributionSpec::by_name("poissmix");
    RngStream rng(9, 0);
    const Vec data = sample_spec(pm, 400, rng);
    // lattice-snap stub: counts scaled back and rounded, with a decaying
    // floor so zero counts resolve toward zero at high SNR
    DenoiserFn stub = [](const Vec& z, double gamma) {
        const double floor_val = std::min(0.5, 1.0 / (gamma * gamma));
        return z.unaryExpr([&](double v) {
            return std::max(std::nearbyint(v / gamma), floor_val);
        }).eval();
    };
    QuadratureSpec logistic;
    logistic.n_points = 1000;
    logistic.mc_draws_per_node = 8;
    QuadratureSpec uniform = logistic;
    uniform.scheme = QuadratureScheme::UniformGrid;
    RngStream r1(10, 0), r2(11, 0);
    const NllReport a = estimate_nll_poisson(stub, data, logistic, 0.0, r1);
    const NllReport b = estimate_nll_poisson(stub, data, uniform, 0.0, r2);
    CHECK(std::abs(a.diffusion_term - b.diffusion_term) <= 0.02 * b.diffusion_term);
}

TEST_CASE("learned model stays above the source entropy") {
    RngStream rng(12, 0);
    const Vec data = draw_uniform12(4096, rng);
    TrainConfig cfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    cfg.epochs = 30;
    cfg.seed = 13;
    cfg.arch.hidden_dim = 32;
    cfg.arch.embed_dim = 32;
    const TrainResult run = train(cfg, data);

    QuadratureSpec quad;
    quad.n_points = 400;
    quad.mc_draws_per_node = 4;
    RngStream qr(14, 0);
    const Vec test = run.model.to_channel_domain(draw_uniform12(2000, rng));
    const NllReport report =
        estimate_nll_poisson(model_denoiser(run.model), test, quad, run.model.eps_shift, qr,
                             1.0 / run.model.channel_scale);
    CHECK(report.total >= std::log(2.0) - 0.03);
}

TEST_CASE("gaussian default bounds cover the variance heuristic") {
    RngStream rng(15, 0);
    Vec data(1000);
    for (Eigen::Index i = 0; i < data.size(); ++i) data[i] = 3.0 * rng.normal();
    const auto [lo, hi] = default_gaussian_bounds(data);
    const double center = -std::log((data - data.mean()).square().mean());
    CHECK(lo == doctest::Approx(center - 14.0));
    CHECK(hi == doctest::Approx(center + 14.0));
}
