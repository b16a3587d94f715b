#include "pdiff/validate.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "pdiff/channel.hpp"
#include "pdiff/denoiser.hpp"
#include "pdiff/likelihood.hpp"
#include "pdiff/math.hpp"
#include "pdiff/oracle.hpp"
#include "pdiff/sampling.hpp"

namespace pdiff {

namespace {

struct Suite {
    std::vector<CheckResult> results;
    RngStream rng;
    ValidationLevel level;

    void add(const std::string& name, bool pass, const std::string& detail) {
        results.push_back({name, pass, detail});
    }

    void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& fn) {
        try {
            auto [pass, detail] = fn();
            add(name, pass, detail);
        } catch (const std::exception& e) {
            add(name, false, std::string("exception: ") + e.what());
        }
    }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Simpson quadrature, local to the suite so the identity checks do not share
// an integration path with the library code they test.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

double richardson_derivative(const std::function<double(double)>& f, double x, double h) {
    auto central = [&](double step) { return (f(x + step) - f(x - step)) / (2.0 * step); };
    return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

double chi2_pvalue(double stat, int dof) { return reg_gamma_q(dof / 2.0, stat / 2.0); }

// Chi-square goodness of fit with tail cells merged until every expected
// count reaches 5.
std::pair<double, int> chi2_stat(const std::vector<std::int64_t>& observed,
                                 const std::vector<double>& expected_probs, std::int64_t n) {
    std::vector<double> exp_bins;
    std::vector<double> obs_bins;
    double e_acc = 0.0, o_acc = 0.0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        e_acc += expected_probs[k] * static_cast<double>(n);
        o_acc += static_cast<double>(observed[k]);
        if (e_acc >= 5.0) {
            exp_bins.push_back(e_acc);
            obs_bins.push_back(o_acc);
            e_acc = o_acc = 0.0;
        }
    }
    if (e_acc > 0.0 && !exp_bins.empty()) {
        exp_bins.back() += e_acc;
        obs_bins.back() += o_acc;
    }
    double stat = 0.0;
    for (std::size_t i = 0; i < exp_bins.size(); ++i) {
        const double d = obs_bins[i] - exp_bins[i];
        stat += d * d / exp_bins[i];
    }
    return {stat, static_cast<int>(exp_bins.size()) - 1};
}

FinitePrior uniform_prior_12() {
    FinitePrior p;
    p.support = Vec(2);
    p.support << 1.0, 2.0;
    p.probs = Vec(2);
    p.probs << 0.5, 0.5;
    return p;
}

// ---------------------------------------------------------------------------
// Loss-function checks
// ---------------------------------------------------------------------------

void loss_checks(Suite& s) {
    const int pairs = s.level == ValidationLevel::Full ? 100000 : 10000;

    s.run("prl-nonnegativity-and-equality", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(1);
        for (int i = 0; i < pairs; ++i) {
            const double x = std::exp(4.0 * r.uniform() - 2.0);
            const double xh = std::exp(4.0 * r.uniform() - 2.0);
            const double v = prl(x, xh);
            if (v < 0.0) return {false, "negative loss at x=" + fmt(x)};
            if (v == 0.0 && std::abs(x - xh) >= 1e-12) return {false, "zero off the diagonal"};
            if (prl(x, x) != 0.0) return {false, "nonzero on the diagonal"};
        }
        return {true, std::to_string(pairs) + " pairs"};
    });

    s.run("prl-convexity-both-arguments", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(2);
        for (int i = 0; i < pairs; ++i) {
            const double x = std::exp(3.0 * r.uniform() - 1.0);
            const double a = std::exp(3.0 * r.uniform() - 1.0);
            const double b = std::exp(3.0 * r.uniform() - 1.0);
            const double t = r.uniform();
            const double mix = t * a + (1.0 - t) * b;
            if (prl(x, mix) > t * prl(x, a) + (1.0 - t) * prl(x, b) + 1e-9)
                return {false, "second-argument convexity violated"};
            if (prl(mix, x) > t * prl(a, x) + (1.0 - t) * prl(b, x) + 1e-9)
                return {false, "first-argument convexity violated"};
        }
        return {true, std::to_string(pairs) + " triples"};
    });

    s.run("prl-scaling", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(3);
        for (int i = 0; i < pairs; ++i) {
            const double x = std::exp(3.0 * r.uniform() - 1.0);
            const double xh = std::exp(3.0 * r.uniform() - 1.0);
            const double a = std::exp(2.0 * r.uniform() - 1.0);
            const double lhs = prl(a * x, a * xh);
            const double rhs = a * prl(x, xh);
            if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs)))
                return {false, "scaling violated at alpha=" + fmt(a)};
        }
        return {true, std::to_string(pairs) + " triples"};
    });

    s.run("prl-underestimation-blowup", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(4);
        for (int i = 0; i < 200; ++i) {
            const double x = std::exp(3.0 * r.uniform() - 1.0);
            double prev = prl(x, x / 10.0);
            for (double xh = x / 20.0; xh > 1e-14; xh /= 2.0) {
                const double cur = prl(x, xh);
                if (cur <= prev) return {false, "loss not increasing toward zero estimate"};
                prev = cur;
            }
        }
        return {true, "monotone toward the zero estimate"};
    });

    s.run("conjugate-of-count-log-mgf", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(5);
        double worst = 0.0;
        for (int i = 0; i < 40; ++i) {
            const double x = std::exp(4.0 * r.uniform() - 2.0);
            const double t_lo = -30.0, t_hi = std::log(x) + 10.0;
            double best = -1e300, best_t = t_lo;
            const int grid = 20000;
            for (int k = 0; k <= grid; ++k) {
                const double t = t_lo + (t_hi - t_lo) * k / grid;
                const double v = x * t - (std::exp(t) - 1.0);
                if (v > best) {
                    best = v;
                    best_t = t;
                }
            }
            // golden-section refinement around the best grid point
            double lo = best_t - (t_hi - t_lo) / grid, hi = best_t + (t_hi - t_lo) / grid;
            for (int it = 0; it < 200; ++it) {
                const double m1 = lo + 0.381966 * (hi - lo);
                const double m2 = hi - 0.381966 * (hi - lo);
                const double f1 = x * m1 - (std::exp(m1) - 1.0);
                const double f2 = x * m2 - (std::exp(m2) - 1.0);
                if (f1 < f2)
                    lo = m1;
                else
                    hi = m2;
            }
            const double tm = 0.5 * (lo + hi);
            best = std::max(best, x * tm - (std::exp(tm) - 1.0));
            worst = std::max(worst, std::abs(best - l0(x)));
        }
        return {worst <= 1e-6, "max |sup - l0| = " + fmt(worst)};
    });

    s.run("expected-loss-minimized-at-mean", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(6);
        for (int rep = 0; rep < 30; ++rep) {
            Vec support(5), probs(5);
            for (int j = 0; j < 5; ++j) {
                support[j] = 0.5 + 4.0 * r.uniform() + 5.0 * j;
                probs[j] = 0.1 + r.uniform();
            }
            probs /= probs.sum();
            const double mean = (support * probs).sum();
            auto expected_loss = [&](double xh) {
                double acc = 0.0;
                for (int j = 0; j < 5; ++j) acc += probs[j] * prl(support[j], xh);
                return acc;
            };
            const double step = 0.002;
            double best = 1e300, best_xh = 0.0;
            for (double xh = 0.25 * support[0]; xh <= 1.5 * support[4]; xh += step) {
                const double v = expected_loss(xh);
                if (v < best) {
                    best = v;
                    best_xh = xh;
                }
            }
            if (std::abs(best_xh - mean) > step)
                return {false, "grid minimizer " + fmt(best_xh) + " vs mean " + fmt(mean)};
            for (int k = 0; k < 20; ++k) {
                const double xh = 0.3 + 30.0 * r.uniform();
                const double lhs = expected_loss(xh);
                const double rhs = expected_loss(mean) + prl(mean, xh);
                if (std::abs(lhs - rhs) > 1e-9)
                    return {false, "decomposition residual " + fmt(lhs - rhs)};
            }
        }
        return {true, "30 random finite sources"};
    });
}

// ---------------------------------------------------------------------------
// Special functions and samplers
// ---------------------------------------------------------------------------

void kernel_checks(Suite& s) {
    s.run("special-function-references", [&]() -> std::pair<bool, std::string> {
        if (std::abs(digamma(1.0) + 0.57721566490153286) > 1e-10) return {false, "digamma(1)"};
        if (std::abs(digamma(2.0) - 0.42278433509846714) > 1e-10) return {false, "digamma(2)"};
        if (std::abs(digamma(0.5) + 1.9635100260214235) > 1e-10) return {false, "digamma(1/2)"};
        RngStream r = s.rng.substream(7);
        for (int i = 0; i < 2000; ++i) {
            const double x = 0.05 + 30.0 * r.uniform();
            if (std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) > 1e-10)
                return {false, "digamma recurrence at x=" + fmt(x)};
        }
        double direct = 0.0;
        for (std::int64_t k = 1; k <= 400; ++k) {
            direct += std::log(static_cast<double>(k));
            if (std::abs(log_factorial(k) - direct) > 1e-12 * std::max(1.0, direct))
                return {false, "log_factorial at n=" + std::to_string(k)};
        }
        return {true, "digamma + log-factorial vs direct oracles"};
    });

    s.run("count-sampler-chi2", [&]() -> std::pair<bool, std::string> {
        const std::int64_t n = 100000;
        for (const double lambda : {0.5, 4.0, 100.0}) {
            RngStream r = s.rng.substream(8 + static_cast<std::uint64_t>(lambda * 10));
            const ZWindow w = poisson_mass_window(lambda, 1e-12);
            std::vector<std::int64_t> obs(static_cast<std::size_t>(w.hi + 2), 0);
            for (std::int64_t i = 0; i < n; ++i) {
                const std::int64_t z = poisson_sample(r, lambda);
                if (z <= w.hi) ++obs[static_cast<std::size_t>(z)];
            }
            std::vector<double> probs(obs.size(), 0.0);
            for (std::size_t k = 0; k < probs.size(); ++k)
                probs[k] = std::exp(poisson_log_pmf(static_cast<std::int64_t>(k), lambda));
            auto [stat, dof] = chi2_stat(obs, probs, n);
            const double p = chi2_pvalue(stat, dof);
            if (p < 1e-4)
                return {false, "lambda=" + fmt(lambda) + " p=" + fmt(p)};
        }
        return {true, "lambda in {0.5, 4, 100}, n=1e5, significance 1e-4"};
    });

    s.run("gamma-sampler-moments", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(11);
        const std::int64_t n = 1000000;
        double acc = 0.0, acc2 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double g = gamma_sample(r, 2.0, 3.0);
            acc += g;
            acc2 += g * g;
        }
        const double mean = acc / n;
        const double var = acc2 / n - mean * mean;
        if (std::abs(mean - 2.0 / 3.0) > 0.005) return {false, "mean " + fmt(mean)};
        if (std::abs(var - 2.0 / 9.0) > 0.01) return {false, "variance " + fmt(var)};
        return {true, "mean " + fmt(mean) + ", var " + fmt(var)};
    });

    s.run("channel-histogram-matches-pmf", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(12);
        const double x = 3.2, gamma = 2.5, eps = 1e-6;
        const std::int64_t n = 100000;
        Vec xs = Vec::Constant(n, x);
        const Vec z = corrupt_poisson(xs, gamma, eps, r);
        const double lambda = gamma * (x + eps);
        const ZWindow w = poisson_mass_window(lambda, 1e-12);
        std::vector<double> hist(static_cast<std::size_t>(w.hi + 1), 0.0);
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            const auto k = static_cast<std::size_t>(z[i]);
            if (k < hist.size()) hist[k] += 1.0 / static_cast<double>(n);
        }
        double tv = 0.0;
        for (std::size_t k = 0; k < hist.size(); ++k)
            tv += 0.5 * std::abs(hist[k] -
                                 std::exp(poisson_log_pmf(static_cast<std::int64_t>(k), lambda)));
        return {tv < 0.01, "total variation " + fmt(tv)};
    });

    s.run("snr-log-roundtrip", [&]() -> std::pair<bool, std::string> {
        for (double a = -30.0; a <= 40.0; a += 0.125) {
            const SnrPoint p = SnrPoint::from_alpha(a);
            const SnrPoint back = SnrPoint::from_gamma(p.gamma);
            if (std::abs(back.alpha - a) > 1e-12 * std::max(1.0, std::abs(a)))
                return {false, "roundtrip error at alpha=" + fmt(a)};
        }
        return {true, "alpha range [-30, 40]"};
    });
}

// ---------------------------------------------------------------------------
// Conjugate-prior and information identities
// ---------------------------------------------------------------------------

void oracle_checks(Suite& s) {
    s.run("marginal-formula-matches-conjugacy", [&]() -> std::pair<bool, std::string> {
        // TGR posterior mean from the exact geometric output marginal must
        // reproduce the conjugate-prior answer (z+1)/(rate+gamma).
        for (const double rate : {0.5, 1.0, 2.0}) {
            for (const double gamma : {0.3, 1.0, 5.0}) {
                auto marginal = [rate, gamma](std::int64_t z) {
                    return exp_prior_marginal_pmf(rate, gamma, z);
                };
                for (std::int64_t z = 0; z <= 50; ++z) {
                    const double lhs = tgr_estimate(marginal, gamma, z);
                    const double rhs = static_cast<double>(z + 1) / (rate + gamma);
                    if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, rhs))
                        return {false, "mismatch at z=" + std::to_string(z)};
                }
            }
        }
        return {true, "z <= 50 over 9 (rate, gamma) pairs"};
    });

    s.run("posterior-mean-affine-for-gamma-prior", [&]() -> std::pair<bool, std::string> {
        // Slope of the marginal-based estimate in z must be the constant
        // 1/(rate+gamma); the marginal here is the exact negative binomial.
        const double shape = 2.5, rate = 1.7, gamma = 2.0;
        auto nb_marginal = [&](std::int64_t z) {
            const double p = rate / (rate + gamma);
            return std::exp(log_gamma(shape + static_cast<double>(z)) - log_factorial(z) -
                            log_gamma(shape) + shape * std::log(p) +
                            static_cast<double>(z) * std::log1p(-p));
        };
        const double slope_expected = 1.0 / (rate + gamma);
        double prev = tgr_estimate(nb_marginal, gamma, 0);
        for (std::int64_t z = 1; z <= 30; ++z) {
            const double cur = tgr_estimate(nb_marginal, gamma, z);
            if (std::abs((cur - prev) - slope_expected) > 1e-10)
                return {false, "slope deviates at z=" + std::to_string(z)};
            prev = cur;
        }
        const double intercept = tgr_estimate(nb_marginal, gamma, 0);
        if (std::abs(intercept - shape / (rate + gamma)) > 1e-10)
            return {false, "intercept " + fmt(intercept)};
        return {true, "slope and intercept to 1e-10"};
    });

    s.run("posterior-mean-monotone-in-z", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(13);
        for (int rep = 0; rep < 20; ++rep) {
            Vec support(6), probs(6);
            for (int j = 0; j < 6; ++j) {
                support[j] = 0.3 + 2.0 * j + 1.5 * r.uniform();
                probs[j] = 0.05 + r.uniform();
            }
            probs /= probs.sum();
            FinitePrior prior{support, probs};
            for (const double gamma : {0.3, 2.0}) {
                double prev = finite_posterior_mean(prior, gamma, 0);
                for (std::int64_t z = 1; z <= 40; ++z) {
                    const double cur = finite_posterior_mean(prior, gamma, z);
                    if (!(cur > prev)) return {false, "not increasing at z=" + std::to_string(z)};
                    prev = cur;
                }
            }
        }
        return {true, "20 random finite priors, z <= 40"};
    });

    s.run("conditional-moment-products", [&]() -> std::pair<bool, std::string> {
        Vec support(3), probs(3);
        support << 1.0, 2.0, 5.0;
        probs << 0.3, 0.5, 0.2;
        FinitePrior prior{support, probs};
        const double gamma = 1.3;
        auto weighted = [&](std::int64_t z, int k) {
            // brute-force conditional moment of (gamma X)^k
            double num = 0.0, den = 0.0;
            for (int j = 0; j < 3; ++j) {
                const double w =
                    probs[j] * std::exp(poisson_log_pmf(z, gamma * support[j]));
                num += w * std::pow(gamma * support[j], k);
                den += w;
            }
            return num / den;
        };
        for (std::int64_t z = 0; z <= 10; ++z) {
            for (int k = 1; k <= 3; ++k) {
                double prod = 1.0;
                for (int i = 0; i < k; ++i)
                    prod *= gamma * finite_posterior_mean(prior, gamma, z + i);
                const double brute = weighted(z, k);
                if (std::abs(prod - brute) > 1e-8 * std::max(1.0, std::abs(brute)))
                    return {false, "k=" + std::to_string(k) + " z=" + std::to_string(z)};
            }
        }
        return {true, "k <= 3, z <= 10"};
    });

    s.run("marginal-pmf-derivative", [&]() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform_prior_12();
        const double gamma = 1.1;
        for (std::int64_t z = 0; z <= 10; ++z) {
            auto pz = [&](double g) { return finite_marginal_pmf(prior, g, z); };
            const double lhs = gamma * richardson_derivative(pz, gamma, gamma * 1e-4);
            const double rhs = static_cast<double>(z) * finite_marginal_pmf(prior, gamma, z) -
                               static_cast<double>(z + 1) * finite_marginal_pmf(prior, gamma, z + 1);
            if (std::abs(lhs - rhs) > 1e-6 * std::max(1.0, std::abs(rhs)))
                return {false, "z=" + std::to_string(z) + " residual " + fmt(lhs - rhs)};
        }
        return {true, "z <= 10 at gamma=1.1"};
    });

    s.run("count-stein-identity", [&]() -> std::pair<bool, std::string> {
        const std::int64_t n = s.level == ValidationLevel::Full ? 1000000 : 100000;
        RngStream r = s.rng.substream(14);
        const double lambda = 3.7;
        double acc = 0.0, acc2 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            const double z = static_cast<double>(poisson_sample(r, lambda));
            const double diff = (z - lambda) * std::log1p(z) -
                                lambda * (std::log1p(z + 1.0) - std::log1p(z));
            acc += diff;
            acc2 += diff * diff;
        }
        const double mean = acc / static_cast<double>(n);
        const double sd = std::sqrt((acc2 / static_cast<double>(n) - mean * mean) /
                                    static_cast<double>(n));
        const bool pass = std::abs(mean) <= 3.0 * sd;
        return {pass, "mean " + fmt(mean) + " vs 3*se " + fmt(3.0 * sd)};
    });

    s.run("kl-derivative-matches-pointwise-loss", [&]() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform_prior_12();
        const double x = 1.0;
        for (const double gamma : {0.7, 1.0, 1.8}) {
            auto kl = [&](double g) { return pointwise_kl(prior, g, x, 1e-14); };
            const double lhs = richardson_derivative(kl, gamma, gamma * 1e-3);
            const double rhs = pointwise_mprl(prior, gamma, x, 1e-14);
            if (std::abs(lhs - rhs) > 1e-3 * std::max(std::abs(rhs), 1e-6))
                return {false, "gamma=" + fmt(gamma) + ": " + fmt(lhs) + " vs " + fmt(rhs)};
        }
        return {true, "pointwise at x=1 over three SNRs"};
    });

    s.run("information-derivative-matches-loss", [&]() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform_prior_12();
        for (const double gamma : {0.5, 1.0, 2.0}) {
            auto info = [&](double g) { return mutual_information_finite(prior, g, 1e-14); };
            const double lhs = richardson_derivative(info, gamma, gamma * 1e-3);
            const double rhs = marginal_mprl(prior, gamma, 1e-14);
            if (std::abs(lhs - rhs) > 1e-3 * std::abs(rhs))
                return {false, "gamma=" + fmt(gamma) + ": " + fmt(lhs) + " vs " + fmt(rhs)};
        }
        return {true, "relative error < 1e-3 at gamma in {0.5, 1, 2}"};
    });

    s.run("information-ceiling-at-high-snr", [&]() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform_prior_12();
        const double info = mutual_information_finite(prior, 500.0);
        const double err = std::abs(info - std::log(2.0));
        return {err < 1e-3, "I(500) = " + fmt(info)};
    });

    s.run("loss-integral-recovers-entropy", [&]() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform_prior_12();
        auto mprl = [&](double g) { return g > 0.0 ? marginal_mprl(prior, g) : prl(1.0, 1.5) * 0.5 + prl(2.0, 1.5) * 0.5; };
        const double i30 = simpson(mprl, 0.0, 30.0, 600);
        const double i100 = i30 + simpson(mprl, 30.0, 100.0, 400);
        const double target = std::log(2.0);
        const bool converging = std::abs(i100 - target) < std::abs(i30 - target);
        const bool close = std::abs(i100 - target) < 1e-2;
        return {converging && close,
                "integral(0,100) = " + fmt(i100) + " vs ln2 = " + fmt(target)};
    });

    s.run("shape1-series-vs-quadrature", [&]() -> std::pair<bool, std::string> {
        for (const double gamma : {0.25, 1.0, 4.0}) {
            const double series = exp_prior_mprl_series(1.0, gamma);
            const double quad = marginal_mprl(GammaPrior{1.0, 1.0}, gamma);
            if (std::abs(series - quad) > 1e-6)
                return {false, "gamma=" + fmt(gamma) + ": " + fmt(series) + " vs " + fmt(quad)};
        }
        return {true, "series and prior-quadrature agree to 1e-6"};
    });

    s.run("partial-integral-bound-and-quadrature", [&]() -> std::pair<bool, std::string> {
        for (const double g0 : {0.01, 0.1, 1.0, 10.0}) {
            const double closed = exp_prior_partial_integral(1.0, g0);
            if (closed > g0 / 2.0) return {false, "bound violated at gamma0=" + fmt(g0)};
            // substitute gamma = g0 t^2 to refine the grid near zero, where
            // the integrand curvature concentrates
            const double numeric = simpson(
                [&](double t) {
                    const double g = g0 * t * t;
                    const double f = g > 0.0 ? exp_prior_mprl_series(1.0, g) : 0.5;
                    return f * 2.0 * g0 * t;
                },
                0.0, 1.0, 2000);
            if (std::abs(closed - numeric) > 1e-4)
                return {false, "gamma0=" + fmt(g0) + ": " + fmt(closed) + " vs " + fmt(numeric)};
        }
        return {true, "closed form within 1e-4 of quadrature, below gamma0/2"};
    });

    s.run("tail-bounds-dominate-remainders", [&]() -> std::pair<bool, std::string> {
        // Left: the analytic cap must dominate the exact partial integral.
        for (const double g0 : {0.005, 0.05, 0.5})
            if (exp_prior_partial_integral(1.0, g0) > left_tail_bound(g0, 1.0, 1))
                return {false, "left bound violated at gamma0=" + fmt(g0)};
        // Right: Chernoff lattice cap vs the integrated loss remainder of a
        // lattice prior.
        Vec support(5), probs(5);
        support << 1.0, 2.0, 3.0, 4.0, 5.0;
        probs << 0.45, 0.25, 0.15, 0.10, 0.05;
        FinitePrior prior{support, probs};
        const double gamma1 = 6.0;
        const double remainder =
            simpson([&](double g) { return marginal_mprl(prior, g); }, gamma1, gamma1 + 60.0, 600);
        double bound = 0.0;
        for (int j = 0; j < 5; ++j) {
            Vec xi(1);
            xi << support[j];
            const auto jmax = static_cast<std::int64_t>(support[j]) - 1;
            if (jmax >= 1) bound += probs[j] * right_tail_bound(xi, 1.0, gamma1, std::min<std::int64_t>(3, jmax));
        }
        const bool pass = bound >= remainder;
        return {pass, "bound " + fmt(bound) + " vs remainder " + fmt(remainder)};
    });

    s.run("count-entropy-monotone-concave", [&]() -> std::pair<bool, std::string> {
        const double h1 = poisson_entropy(1.0);
        const double h15 = poisson_entropy(1.5);
        const double h2 = poisson_entropy(2.0);
        if (std::abs(h1 - 1.3048422422562515) > 1e-4) return {false, "H(1) = " + fmt(h1)};
        if (!(h2 > h15 && h15 > h1)) return {false, "not increasing"};
        if (!(h15 > 0.5 * (h1 + h2))) return {false, "not concave"};
        double prev = poisson_entropy(0.25);
        for (double lam = 0.5; lam <= 20.0; lam += 0.25) {
            const double cur = poisson_entropy(lam);
            if (!(cur > prev)) return {false, "not increasing at lambda=" + fmt(lam)};
            prev = cur;
        }
        return {true, "H(1) = " + fmt(h1) + ", increasing and concave"};
    });

    s.run("posterior-mean-dark-rate-invariant-at-zero", [&]() -> std::pair<bool, std::string> {
        // With counts from Poisson(gamma x + dark), conditioning on zero
        // counts makes the dark-rate factor cancel in the posterior, so the
        // derivative in the dark rate vanishes.
        const FinitePrior prior = uniform_prior_12();
        for (const double gamma : {0.5, 1.0, 3.0}) {
            auto mean0 = [&](double dark) {
                return finite_posterior_mean_dark(prior, gamma, dark, 0);
            };
            const double d = richardson_derivative(mean0, 0.7, 1e-3);
            if (std::abs(d) > 1e-6) return {false, "derivative " + fmt(d)};
        }
        return {true, "zero to 1e-6 over three SNRs"};
    });

    s.run("suboptimal-denoiser-bounds-entropy-above", [&]() -> std::pair<bool, std::string> {
        RngStream r = s.rng.substream(15);
        const Eigen::Index n = 2000;
        Vec data(n);
        for (Eigen::Index i = 0; i < n; ++i) data[i] = r.uniform() < 0.5 ? 1.0 : 2.0;
        DenoiserFn stub = [](const Vec& z, double gamma) {
            return ((z + 0.5) / (1.0 + gamma)).max(1e-9).eval();
        };
        QuadratureSpec quad;
        quad.n_points = 400;
        quad.mc_draws_per_node = 4;
        quad.alpha_lo = -20.0;
        quad.alpha_hi = 20.0;
        RngStream qr = s.rng.substream(16);
        const NllReport rep = estimate_nll_poisson(stub, data, quad, 1e-6, qr);
        const bool pass = rep.total >= std::log(2.0) - 0.05;
        return {pass, "suboptimal bound " + fmt(rep.total) + " >= ln2 - 0.05"};
    });
}

// ---------------------------------------------------------------------------
// Denoiser checks
// ---------------------------------------------------------------------------

std::pair<bool, std::string> gradient_check(Suite& s, LossKind kind) {
    ArchSpec arch;
    arch.input_dim = 1;
    arch.hidden_dim = 8;
    arch.n_hidden_layers = 2;
    arch.embed_dim = 8;
    arch.output_activation =
        kind == LossKind::Prl ? OutputActivation::SoftplusEps : OutputActivation::Identity;

    RngStream r = s.rng.substream(kind == LossKind::Prl ? 17 : 18);
    DenoiserParams params = init_params(arch, r);

    const Eigen::Index batch = 4;
    Mat z(batch, 1);
    Vec alpha(batch);
    Mat targets(batch, 1);
    Vec weights(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
        z(i, 0) = 2.0 * r.uniform();
        alpha[i] = 4.0 * r.uniform() - 2.0;
        targets(i, 0) = 0.5 + 3.0 * r.uniform();
        weights[i] = 0.25 + r.uniform();
    }

    ForwardCache cache;
    forward(params, z, alpha, cache);
    const BackwardResult analytic = backward(params, cache, targets, weights, kind);
    const std::vector<double> grad = analytic.grads.flatten();

    // A central difference of a loss of magnitude L resolves derivatives only
    // down to ~eps*L/h of rounding noise.  Coordinates whose discrepancy sits
    // under that floor are certified as matching at machine resolution; the
    // 1e-5 relative criterion applies to every coordinate the differences can
    // actually resolve.
    const double noise_floor =
        100.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(analytic.loss)) / 1e-4;

    std::vector<double> theta = params.flatten();
    const double h = 1e-4;
    double worst = 0.0;
    double worst_abs = 0.0;
    std::size_t worst_idx = 0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        auto eval = [&](double v) {
            std::vector<double> t = theta;
            t[i] = v;
            DenoiserParams p = params;
            p.unflatten(t);
            ForwardCache c;
            forward(p, z, alpha, c);
            double loss = 0.0;
            for (Eigen::Index b = 0; b < batch; ++b)
                loss += weights[b] * (kind == LossKind::Prl
                                          ? prl(targets(b, 0), c.out(b, 0))
                                          : squared_error(targets(b, 0), c.out(b, 0)));
            return loss;
        };
        // Richardson-extrapolated central differences at base step h kill
        // the O(h^2) truncation term that otherwise dominates small entries.
        const double d1 = (eval(theta[i] + h) - eval(theta[i] - h)) / (2.0 * h);
        const double d2 = (eval(theta[i] + h / 2.0) - eval(theta[i] - h / 2.0)) / h;
        const double fd = (4.0 * d2 - d1) / 3.0;
        worst_abs = std::max(worst_abs, std::abs(fd - grad[i]));
        if (std::abs(fd - grad[i]) <= noise_floor) continue;
        const double rel =
            std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        if (rel > worst) {
            worst = rel;
            worst_idx = i;
        }
    }
    const bool pass = worst < 1e-5;
    return {pass, "worst resolvable relative error " + fmt(worst) + " (parameter " +
                      std::to_string(worst_idx) + " of " + std::to_string(theta.size()) +
                      "), max |fd-grad| " + fmt(worst_abs) + " vs noise floor " +
                      fmt(noise_floor)};
}

void denoiser_checks(Suite& s) {
    s.run("gradient-check-reconstruction-loss",
          [&]() { return gradient_check(s, LossKind::Prl); });
    s.run("gradient-check-squared-error", [&]() { return gradient_check(s, LossKind::Mse); });

    s.run("init-and-optimizer-determinism", [&]() -> std::pair<bool, std::string> {
        ArchSpec arch;
        arch.hidden_dim = 16;
        arch.embed_dim = 8;
        RngStream r1 = s.rng.substream(19);
        RngStream r2 = s.rng.substream(19);
        DenoiserParams a = init_params(arch, r1);
        DenoiserParams b = init_params(arch, r2);
        if (a.flatten() != b.flatten()) return {false, "same seed produced different weights"};
        AdamState st = make_adam_state(a);
        DenoiserParams zero = a;
        std::vector<double> zeros(static_cast<std::size_t>(a.count()), 0.0);
        zero.unflatten(zeros);
        const std::vector<double> before = a.flatten();
        adam_step(st, a, zero);
        if (a.flatten() != before) return {false, "zero gradient moved parameters"};
        return {true, "bitwise deterministic; zero gradient is a fixed point"};
    });

    s.run("softplus-head-positivity", [&]() -> std::pair<bool, std::string> {
        ArchSpec arch;
        arch.hidden_dim = 16;
        arch.embed_dim = 8;
        RngStream r = s.rng.substream(20);
        DenoiserParams p = init_params(arch, r);
        const int n = s.level == ValidationLevel::Full ? 10000 : 2000;
        Mat z(n, 1);
        Vec alpha(n);
        for (int i = 0; i < n; ++i) {
            z(i, 0) = 20.0 * r.uniform() - 10.0;
            alpha[i] = 70.0 * r.uniform() - 30.0;
        }
        const Mat out = forward(p, z, alpha);
        return {(out.array() > 0.0).all(), "all outputs strictly positive"};
    });
}

}  // namespace

std::vector<CheckResult> run_validation(ValidationLevel level, std::uint64_t seed) {
    Suite s{{}, RngStream(seed, 0x76616c69ULL), level};
    loss_checks(s);
    kernel_checks(s);
    oracle_checks(s);
    denoiser_checks(s);
    return s.results;
}

}  // namespace pdiff
