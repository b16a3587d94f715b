#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pdiff/math.hpp"
#include "pdiff/oracle.hpp"
#include "pdiff/sampling.hpp"

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

}  // namespace

TEST_CASE("gamma posterior mean") {
    CHECK(gamma_posterior_mean({1.0, 1.0}, 1.0, 0) == doctest::Approx(0.5));
    CHECK(gamma_posterior_mean({1.0, 1.0}, 1.0, 3) == doctest::Approx(2.0));
    CHECK(gamma_posterior_mean({2.0, 3.0}, 1e-9, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("exponential-prior output marginal is geometric") {
    CHECK(exp_prior_marginal_pmf(1.0, 1.0, 0) == doctest::Approx(0.5));
    CHECK(exp_prior_marginal_pmf(1.0, 1.0, 3) == doctest::Approx(0.0625));
    double total = 0.0;
    for (std::int64_t z = 0; z <= 200; ++z) total += exp_prior_marginal_pmf(1.0, 1.0, z);
    CHECK(std::abs(total - 1.0) < 1e-12);
}

TEST_CASE("marginal-only estimate agrees with conjugacy") {
    auto marginal = [](std::int64_t z) { return exp_prior_marginal_pmf(1.0, 1.0, z); };
    CHECK(tgr_estimate(marginal, 1.0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tgr_estimate(marginal, 1.0, 3) == doctest::Approx(2.0).epsilon(1e-12));
    for (std::int64_t z = 0; z <= 50; ++z) {
        const double expect = static_cast<double>(z + 1) / 2.0;
        CHECK(std::abs(tgr_estimate(marginal, 1.0, z) - expect) <= 1e-10 * std::max(1.0, expect));
    }
}

TEST_CASE("marginal-only estimate from an empirical histogram") {
    // counts through the channel with an exponential source: the estimate at
    // z = 2 must approach (2+1)/(1+1) = 1.5
    RngStream rng(21, 0);
    EmpiricalPmf hist;
    hist.K = 400;
    hist.counts = Eigen::ArrayXi::Zero(401);
    const std::int64_t n = 1000000;
    hist.n = n;
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = rng.exponential(1.0);
        const std::int64_t z = poisson_sample(rng, x);
        if (z <= 400) ++hist.counts[static_cast<Eigen::Index>(z)];
    }
    CHECK(std::abs(tgr_estimate(hist, 1.0, 2) - 1.5) < 0.02);
    CHECK_THROWS_AS(tgr_estimate(hist, 1.0, 399), std::runtime_error);  // empty cell
}

TEST_CASE("finite posterior mean") {
    FinitePrior atom;
    atom.support = Vec(1);
    atom.support << 2.5;
    atom.probs = Vec(1);
    atom.probs << 1.0;
    for (std::int64_t z : {0, 1, 5, 50}) CHECK(finite_posterior_mean(atom, 1.3, z) == 2.5);

    const FinitePrior u = uniform12();
    CHECK(finite_posterior_mean(u, 1e-9, 0) == doctest::Approx(1.5).epsilon(1e-7));
    CHECK(finite_posterior_mean(u, 2.0, 4) == doctest::Approx(1.6840806201123919).epsilon(1e-12));
    // strictly increasing in z
    double prev = finite_posterior_mean(u, 1.0, 0);
    for (std::int64_t z = 1; z <= 30; ++z) {
        const double cur = finite_posterior_mean(u, 1.0, z);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("pointwise loss of the exact denoiser") {
    FinitePrior atom;
    atom.support = Vec(1);
    atom.support << 3.0;
    atom.probs = Vec(1);
    atom.probs << 1.0;
    for (double gamma : {0.1, 1.0, 10.0})
        CHECK(pointwise_mprl(atom, gamma, 3.0) == doctest::Approx(0.0).epsilon(1e-12));

    // gamma -> 0: the posterior collapses to the prior mean
    const FinitePrior u = uniform12();
    CHECK(pointwise_mprl(u, 1e-7, 1.0) == doctest::Approx(prl(1.0, 1.5)).epsilon(1e-4));
    CHECK(pointwise_mprl(u, 1e-7, 2.0) == doctest::Approx(prl(2.0, 1.5)).epsilon(1e-4));

    // Monte Carlo oracle for the exponential prior at x = 1, gamma = 1
    RngStream rng(31, 0);
    const std::int64_t n = 1000000;
    double acc = 0.0, acc2 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int64_t z = poisson_sample(rng, 1.0);
        const double v = prl(1.0, static_cast<double>(z + 1) / 2.0);
        acc += v;
        acc2 += v * v;
    }
    const double mc = acc / n;
    const double se = std::sqrt((acc2 / n - mc * mc) / n);
    const double exact = pointwise_mprl(GammaPrior{1.0, 1.0}, 1.0, 1.0);
    CHECK(std::abs(exact - mc) < 3.0 * se);
}

TEST_CASE("marginal loss: series, quadrature, monotonicity") {
    FinitePrior atom;
    atom.support = Vec(1);
    atom.support << 4.0;
    atom.probs = Vec(1);
    atom.probs << 1.0;
    CHECK(marginal_mprl(atom, 2.0) == doctest::Approx(0.0).epsilon(1e-12));

    const double series = exp_prior_mprl_series(1.0, 1.0);
    CHECK(series == doctest::Approx(0.22278969478861995).epsilon(1e-10));
    CHECK(marginal_mprl(GammaPrior{1.0, 1.0}, 1.0) == doctest::Approx(series).epsilon(1e-6));

    // information is harder to extract at lower SNR: loss decreasing in gamma
    double prev = exp_prior_mprl_series(1.0, 0.1);
    for (double gamma : {1.0, 10.0, 100.0}) {
        const double cur = exp_prior_mprl_series(1.0, gamma);
        CHECK(cur < prev);
        prev = cur;
    }

    // gamma -> 0 limit of the series: digamma(2)/rate
    CHECK(exp_prior_mprl_series(2.0, 1e-8) ==
          doctest::Approx(digamma(2.0) / 2.0).epsilon(1e-6));
}

TEST_CASE("partial integral closed form") {
    CHECK(exp_prior_partial_integral(1.0, 1.0) ==
          doctest::Approx(0.30124477334991937).epsilon(1e-10));
    for (double g0 : {0.01, 0.1, 1.0, 10.0})
        CHECK(exp_prior_partial_integral(1.0, g0) <= g0 / 2.0);
    // numeric cross-check via Simpson on the series
    const double g0 = 1.0;
    const int n = 2000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double g = g0 * i / n;
        const double f = g > 0.0 ? exp_prior_mprl_series(1.0, g) : 0.5;  // limit 1/(2 rate)
        acc += f * (i == 0 || i == n ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
    }
    acc *= g0 / n / 3.0;
    CHECK(std::abs(acc - exp_prior_partial_integral(1.0, g0)) < 1e-4);
}

TEST_CASE("tail bounds") {
    CHECK(left_tail_bound(1.0, 1.0, 1) == doctest::Approx(0.5));
    CHECK(left_tail_bound(0.01, 1.0, 1) == doctest::Approx(0.005));
    CHECK(left_tail_bound(0.01, 1.0, 1) > exp_prior_partial_integral(1.0, 0.01));
    CHECK(left_tail_bound(1.0, 1.0, 3) == doctest::Approx(1.5));

    Vec x2(1);
    x2 << 2.0;
    CHECK(right_tail_bound(x2, 1.0, 1e6, 1) == doctest::Approx(0.0));
    CHECK(right_tail_bound(x2, 1.0, 10.0, 0) == 0.0);
    CHECK(right_tail_bound(x2, 1.0, 10.0, 1) ==
          doctest::Approx(3.7434362644949579).epsilon(1e-9));
    CHECK_THROWS_AS(right_tail_bound(x2, 1.0, 10.0, 2), std::domain_error);
}

TEST_CASE("mutual information for finite priors") {
    FinitePrior atom;
    atom.support = Vec(1);
    atom.support << 1.7;
    atom.probs = Vec(1);
    atom.probs << 1.0;
    for (double gamma : {0.2, 1.0, 30.0})
        CHECK(mutual_information_finite(atom, gamma) == doctest::Approx(0.0).epsilon(1e-12));

    const FinitePrior u = uniform12();
    CHECK(mutual_information_finite(u, 500.0) == doctest::Approx(std::log(2.0)).epsilon(2e-3));

    // derivative identity: dI/dgamma = marginal loss
    for (double gamma : {0.5, 1.0, 2.0}) {
        const double h = gamma * 1e-3;
        auto info = [&](double g) { return mutual_information_finite(u, g, 1e-14); };
        const double d_h = (info(gamma + h) - info(gamma - h)) / (2.0 * h);
        const double d_h2 = (info(gamma + h / 2.0) - info(gamma - h / 2.0)) / h;
        const double deriv = (4.0 * d_h2 - d_h) / 3.0;
        const double loss = marginal_mprl(u, gamma, 1e-14);
        CHECK(std::abs(deriv - loss) < 1e-3 * std::abs(loss));
    }
}

TEST_CASE("pointwise kl derivative identity") {
    const FinitePrior u = uniform12();
    const double gamma = 1.0, x = 1.0;
    auto kl = [&](double g) { return pointwise_kl(u, g, x, 1e-14); };
    const double h = gamma * 1e-3;
    const double d_h = (kl(gamma + h) - kl(gamma - h)) / (2.0 * h);
    const double d_h2 = (kl(gamma + h / 2.0) - kl(gamma - h / 2.0)) / h;
    const double deriv = (4.0 * d_h2 - d_h) / 3.0;
    const double loss = pointwise_mprl(u, gamma, x, 1e-14);
    CHECK(std::abs(deriv - loss) < 1e-3 * std::max(std::abs(loss), 1e-9));
}

TEST_CASE("poisson entropy") {
    CHECK(poisson_entropy(1.0) == doctest::Approx(1.3048422422562515).epsilon(1e-6));
    CHECK(poisson_entropy(2.0) > poisson_entropy(1.0));
    CHECK(poisson_entropy(1.5) > 0.5 * (poisson_entropy(1.0) + poisson_entropy(2.0)));
}

TEST_CASE("mass window covers the requested tail") {
    for (double lambda : {0.3, 4.0, 212.0, 5000.0}) {
        const ZWindow w = poisson_mass_window(lambda, 1e-12);
        double mass = 0.0;
        for (std::int64_t z = w.lo; z <= w.hi; ++z)
            mass += std::exp(poisson_log_pmf(z, lambda));
        CHECK(mass >= 1.0 - 5e-12);
    }
}

TEST_CASE("conditional moment products") {
    Vec support(3), probs(3);
    support << 1.0, 2.0, 5.0;
    probs << 0.3, 0.5, 0.2;
    FinitePrior prior{support, probs};
    const double gamma = 1.3;
    for (std::int64_t z = 0; z <= 10; ++z) {
        for (int k = 1; k <= 3; ++k) {
            double num = 0.0, den = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double w = probs[j] * std::exp(poisson_log_pmf(z, gamma * support[j]));
                num += w * std::pow(gamma * support[j], k);
                den += w;
            }
            double prod = 1.0;
            for (int i = 0; i < k; ++i)
                prod *= gamma * finite_posterior_mean(prior, gamma, z + i);
            CHECK(std::abs(prod - num / den) <= 1e-8 * std::max(1.0, num / den));
        }
    }
}

TEST_CASE("finite prior validation") {
    FinitePrior bad;
    bad.support = Vec(2);
    bad.support << 2.0, 1.0;
    bad.probs = Vec(2);
    bad.probs << 0.5, 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.support << 1.0, 2.0;
    bad.probs << 0.5, 0.6;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
