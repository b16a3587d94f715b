#include "pdiff/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pdiff/math.hpp"

namespace pdiff {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

}  // namespace

void FinitePrior::validate() const {
    if (support.size() == 0 || support.size() != probs.size())
        throw std::invalid_argument("FinitePrior: support/probs size mismatch");
    for (Eigen::Index i = 0; i < support.size(); ++i) {
        if (support[i] < 0.0) throw std::invalid_argument("FinitePrior: negative support point");
        if (i > 0 && support[i] <= support[i - 1])
            throw std::invalid_argument("FinitePrior: support must be strictly increasing");
        if (probs[i] < 0.0) throw std::invalid_argument("FinitePrior: negative probability");
    }
    if (std::abs(probs.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("FinitePrior: probabilities must sum to 1");
}

ZWindow poisson_mass_window(double lambda, double tail_mass) {
    if (lambda < 0.0) throw std::domain_error("poisson_mass_window: lambda must be >= 0");
    if (lambda == 0.0) return {0, 0};
    const double sd = std::sqrt(lambda);
    // Each endpoint pushes until its term is far below tail_mass / window;
    // the guard factor covers the geometric decay of the tail sums.
    const double log_target = std::log(tail_mass) - std::log(10.0 + sd) - 3.0;
    auto lo_f = std::max(0.0, std::floor(lambda - 8.0 * sd - 25.0));
    auto hi_f = std::ceil(lambda + 8.0 * sd + 25.0);
    std::int64_t lo = static_cast<std::int64_t>(lo_f);
    std::int64_t hi = static_cast<std::int64_t>(hi_f);
    const std::int64_t step = static_cast<std::int64_t>(std::ceil(sd)) + 5;
    while (lo > 0 && poisson_log_pmf(lo, lambda) > log_target) lo = std::max<std::int64_t>(0, lo - step);
    while (poisson_log_pmf(hi, lambda) > log_target) hi += step;
    return {lo, hi};
}

double gamma_posterior_mean(const GammaPrior& prior, double gamma, std::int64_t z) {
    if (!(prior.shape > 0.0) || !(prior.rate > 0.0))
        throw std::domain_error("gamma_posterior_mean: invalid prior");
    if (!(gamma > 0.0)) throw std::domain_error("gamma_posterior_mean: gamma must be positive");
    if (z < 0) throw std::domain_error("gamma_posterior_mean: z must be non-negative");
    return (prior.shape + static_cast<double>(z)) / (prior.rate + gamma);
}

double exp_prior_marginal_pmf(double rate, double gamma, std::int64_t z) {
    if (!(rate > 0.0) || !(gamma > 0.0) || z < 0)
        throw std::domain_error("exp_prior_marginal_pmf: bad arguments");
    const double p = gamma / (rate + gamma);
    return (1.0 - p) * std::exp(static_cast<double>(z) * std::log(p));
}

double tgr_estimate(const std::function<double(std::int64_t)>& marginal_pmf, double gamma,
                    std::int64_t z) {
    if (!(gamma > 0.0)) throw std::domain_error("tgr_estimate: gamma must be positive");
    const double pz = marginal_pmf(z);
    if (!(pz > 0.0))
        throw std::runtime_error("tgr_estimate: conditioning on zero-probability output");
    return static_cast<double>(z + 1) * marginal_pmf(z + 1) / (gamma * pz);
}

double tgr_estimate(const EmpiricalPmf& marginal, double gamma, std::int64_t z) {
    return tgr_estimate(
        [&marginal](std::int64_t k) {
            if (k < 0 || k > marginal.K) return 0.0;
            return static_cast<double>(marginal.counts[static_cast<Eigen::Index>(k)]) /
                   static_cast<double>(marginal.n);
        },
        gamma, z);
}

namespace {

// Log-likelihood of observing z from Poisson(gamma*x + dark), dropping the
// z-independent ln z! term (it cancels in every posterior ratio).
double log_like(double x, double gamma, double dark, std::int64_t z) {
    const double lambda = gamma * x + dark;
    if (lambda == 0.0) return z == 0 ? 0.0 : kNegInf;
    return static_cast<double>(z) * std::log(lambda) - lambda;
}

double posterior_mean_impl(const FinitePrior& prior, double gamma, double dark, std::int64_t z) {
    if (!(gamma > 0.0)) throw std::domain_error("finite_posterior_mean: gamma must be positive");
    if (z < 0) throw std::domain_error("finite_posterior_mean: z must be non-negative");
    const Eigen::Index J = prior.support.size();
    double m = kNegInf;
    std::vector<double> lw(static_cast<std::size_t>(J));
    for (Eigen::Index j = 0; j < J; ++j) {
        const double lp = prior.probs[j] > 0.0 ? std::log(prior.probs[j]) : kNegInf;
        lw[static_cast<std::size_t>(j)] = lp + log_like(prior.support[j], gamma, dark, z);
        m = std::max(m, lw[static_cast<std::size_t>(j)]);
    }
    if (m == kNegInf)
        throw std::runtime_error("finite_posterior_mean: all likelihoods underflowed");
    double num = 0.0, den = 0.0;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double w = std::exp(lw[static_cast<std::size_t>(j)] - m);
        num += prior.support[j] * w;
        den += w;
    }
    return num / den;
}

}  // namespace

double finite_posterior_mean(const FinitePrior& prior, double gamma, std::int64_t z) {
    return posterior_mean_impl(prior, gamma, 0.0, z);
}

double finite_posterior_mean_dark(const FinitePrior& prior, double gamma, double dark,
                                  std::int64_t z) {
    if (dark < 0.0) throw std::domain_error("finite_posterior_mean_dark: dark must be >= 0");
    return posterior_mean_impl(prior, gamma, dark, z);
}

double finite_marginal_log_pmf(const FinitePrior& prior, double gamma, std::int64_t z) {
    const Eigen::Index J = prior.support.size();
    std::vector<double> lw(static_cast<std::size_t>(J));
    for (Eigen::Index j = 0; j < J; ++j) {
        const double lp = prior.probs[j] > 0.0 ? std::log(prior.probs[j]) : kNegInf;
        const double lambda = gamma * prior.support[j];
        double ll;
        if (lambda == 0.0)
            ll = z == 0 ? 0.0 : kNegInf;
        else
            ll = poisson_log_pmf(z, lambda);
        lw[static_cast<std::size_t>(j)] = lp + ll;
    }
    return log_sum_exp(lw);
}

double finite_marginal_pmf(const FinitePrior& prior, double gamma, std::int64_t z) {
    return std::exp(finite_marginal_log_pmf(prior, gamma, z));
}

namespace {

// sum_z Poisson(z; gamma*x) * prl(x, estimate(z)) truncated by tail mass.
double pointwise_mprl_impl(double gamma, double x, double tail_mass,
                           const std::function<double(std::int64_t)>& estimate) {
    if (!(gamma > 0.0)) throw std::domain_error("pointwise_mprl: gamma must be positive");
    if (x < 0.0) throw std::domain_error("pointwise_mprl: x must be non-negative");
    const double lambda = gamma * x;
    if (lambda == 0.0) return prl(x, estimate(0));
    const ZWindow w = poisson_mass_window(lambda, tail_mass);
    double acc = 0.0;
    for (std::int64_t z = w.lo; z <= w.hi; ++z) {
        const double pz = std::exp(poisson_log_pmf(z, lambda));
        if (pz == 0.0) continue;
        acc += pz * prl(x, estimate(z));
    }
    return acc;
}

}  // namespace

double pointwise_mprl(const FinitePrior& prior, double gamma, double x, double tail_mass) {
    return pointwise_mprl_impl(gamma, x, tail_mass, [&](std::int64_t z) {
        return finite_posterior_mean(prior, gamma, z);
    });
}

double pointwise_mprl(const GammaPrior& prior, double gamma, double x, double tail_mass) {
    return pointwise_mprl_impl(gamma, x, tail_mass, [&](std::int64_t z) {
        return gamma_posterior_mean(prior, gamma, z);
    });
}

double marginal_mprl(const FinitePrior& prior, double gamma, double tail_mass) {
    prior.validate();
    if (!(gamma > 0.0)) throw std::domain_error("marginal_mprl: gamma must be positive");
    const Eigen::Index J = prior.support.size();

    // Shared z-window covering every atom, so the posterior mean is computed
    // once per z instead of once per (z, atom).
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
    for (Eigen::Index j = 0; j < J; ++j) {
        const double lambda = gamma * prior.support[j];
        const ZWindow w = poisson_mass_window(lambda, tail_mass);
        lo = std::min(lo, w.lo);
        hi = std::max(hi, w.hi);
    }
    double acc = 0.0;
    for (std::int64_t z = lo; z <= hi; ++z) {
        const double mean_z = finite_posterior_mean(prior, gamma, z);
        for (Eigen::Index j = 0; j < J; ++j) {
            const double xj = prior.support[j];
            const double lambda = gamma * xj;
            double pz;
            if (lambda == 0.0)
                pz = z == 0 ? 1.0 : 0.0;
            else
                pz = std::exp(poisson_log_pmf(z, lambda));
            if (pz == 0.0) continue;
            acc += prior.probs[j] * pz * prl(xj, mean_z);
        }
    }
    return acc;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double marginal_mprl(const GammaPrior& prior, double gamma, double tail_mass) {
    if (!(prior.shape > 0.0) || !(prior.rate > 0.0))
        throw std::domain_error("marginal_mprl: invalid prior");
    if (!(gamma > 0.0)) throw std::domain_error("marginal_mprl: gamma must be positive");
    // Upper limit covering all but ~1e-10 of the prior mass.
    double xmax = (prior.shape + 10.0) / prior.rate;
    while (reg_gamma_q(prior.shape, prior.rate * xmax) > 1e-10) xmax *= 2.0;

    const double log_norm = prior.shape * std::log(prior.rate) - log_gamma(prior.shape);
    if (prior.shape >= 1.0) {
        auto f = [&](double x) {
            if (x <= 0.0) return 0.0;
            const double pdf =
                std::exp(log_norm + (prior.shape - 1.0) * std::log(x) - prior.rate * x);
            return pdf * pointwise_mprl(prior, gamma, x, tail_mass);
        };
        return integrate(f, 0.0, xmax, 1e-9);
    }
    // shape < 1: substitute t = x^shape to remove the density singularity.
    auto g = [&](double t) {
        if (t <= 0.0) return 0.0;
        const double x = std::pow(t, 1.0 / prior.shape);
        const double jac = std::exp(log_norm - prior.rate * x) / prior.shape;
        return jac * pointwise_mprl(prior, gamma, x, tail_mass);
    };
    return integrate(g, 0.0, std::pow(xmax, prior.shape), 1e-9);
}

double exp_prior_mprl_series(double rate, double gamma) {
    if (!(rate > 0.0) || !(gamma > 0.0))
        throw std::domain_error("exp_prior_mprl_series: bad arguments");
    const double p = gamma / (rate + gamma);
    const double pref = rate / ((rate + gamma) * (rate + gamma));
    double psi = digamma(2.0);  // advanced by the recurrence psi(n+1) = psi(n) + 1/n
    double pz = 1.0;
    double sum = 0.0;
    for (std::int64_t z = 0; z < 50000000; ++z) {
        const double zp1 = static_cast<double>(z + 1);
        const double term = zp1 * pz * (psi - std::log(zp1));
        sum += term;
        if (z > 16 && term < 1e-14 * sum) return pref * sum;
        pz *= p;
        psi += 1.0 / (zp1 + 1.0);
    }
    throw std::runtime_error("exp_prior_mprl_series: series did not converge (gamma too large)");
}

double exp_prior_partial_integral(double rate, double gamma0) {
    if (!(rate > 0.0) || !(gamma0 > 0.0))
        throw std::domain_error("exp_prior_partial_integral: bad arguments");
    const double x = gamma0 / (rate + gamma0);
    double psi = digamma(2.0);
    double xk = x;
    double sum = 0.0;
    for (std::int64_t k = 1; k < 50000000; ++k) {
        const double term = (psi - std::log(static_cast<double>(k))) * xk;
        sum += term;
        if (k > 16 && term < 1e-14 * sum) return sum;
        xk *= x;
        psi += 1.0 / (static_cast<double>(k) + 1.0);
    }
    throw std::runtime_error("exp_prior_partial_integral: series did not converge");
}

double left_tail_bound(double gamma0, double rate, std::int64_t dims) {
    if (!(gamma0 > 0.0) || !(rate > 0.0) || dims < 1)
        throw std::domain_error("left_tail_bound: bad arguments");
    return static_cast<double>(dims) * gamma0 / (2.0 * rate);
}

double poisson_chernoff_exponent(double x, double d) {
    if (!(x > 0.0) || !(d > 0.0))
        throw std::domain_error("poisson_chernoff_exponent: bad arguments");
    const double u = d / x;
    return x * ((1.0 + u) * std::log1p(u) - u);
}

double right_tail_bound(const Vec& x, double delta, double gamma1, std::int64_t j_max) {
    if (!(delta > 0.0) || !(gamma1 > 0.0) || j_max < 0)
        throw std::domain_error("right_tail_bound: bad arguments");
    if (j_max == 0) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (!(xi - static_cast<double>(j_max) * delta > 0.0))
            throw std::domain_error("right_tail_bound: delta too large for data component");
        for (std::int64_t j = 1; j <= j_max; ++j) {
            const double jd = static_cast<double>(j) * delta;
            const double c = poisson_chernoff_exponent(xi, (static_cast<double>(j) - 0.5) * delta);
            const double loss = xi * std::log(xi / (xi - jd)) - jd;
            total += loss * std::exp(-c * gamma1) / c;
        }
    }
    return total;
}

double mutual_information_finite(const FinitePrior& prior, double gamma, double tail_mass) {
    prior.validate();
    if (!(gamma > 0.0))
        throw std::domain_error("mutual_information_finite: gamma must be positive");
    const Eigen::Index J = prior.support.size();
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
    for (Eigen::Index j = 0; j < J; ++j) {
        const ZWindow w = poisson_mass_window(gamma * prior.support[j], tail_mass);
        lo = std::min(lo, w.lo);
        hi = std::max(hi, w.hi);
    }
    double info = 0.0;
    for (std::int64_t z = lo; z <= hi; ++z) {
        const double log_marginal = finite_marginal_log_pmf(prior, gamma, z);
        for (Eigen::Index j = 0; j < J; ++j) {
            if (prior.probs[j] == 0.0) continue;
            const double lambda = gamma * prior.support[j];
            double ll;
            if (lambda == 0.0)
                ll = z == 0 ? 0.0 : kNegInf;
            else
                ll = poisson_log_pmf(z, lambda);
            if (ll == kNegInf) continue;
            info += prior.probs[j] * std::exp(ll) * (ll - log_marginal);
        }
    }
    return std::max(0.0, info);
}

double pointwise_kl(const FinitePrior& prior, double gamma, double x, double tail_mass) {
    if (!(gamma > 0.0)) throw std::domain_error("pointwise_kl: gamma must be positive");
    const double lambda = gamma * x;
    if (lambda == 0.0) return -finite_marginal_log_pmf(prior, gamma, 0);
    const ZWindow w = poisson_mass_window(lambda, tail_mass);
    double kl = 0.0;
    for (std::int64_t z = w.lo; z <= w.hi; ++z) {
        const double ll = poisson_log_pmf(z, lambda);
        const double pz = std::exp(ll);
        if (pz == 0.0) continue;
        kl += pz * (ll - finite_marginal_log_pmf(prior, gamma, z));
    }
    return kl;
}

double poisson_entropy(double lambda, double tail_mass) {
    if (!(lambda > 0.0)) throw std::domain_error("poisson_entropy: lambda must be positive");
    const ZWindow w = poisson_mass_window(lambda, tail_mass);
    double series = 0.0;
    for (std::int64_t k = std::max<std::int64_t>(2, w.lo); k <= w.hi; ++k)
        series += std::exp(poisson_log_pmf(k, lambda)) * log_factorial(k);
    return lambda * (1.0 - std::log(lambda)) + series;
}

}  // namespace pdiff
