#include "pdiff/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "pdiff/math.hpp"
#include "pdiff/parallel.hpp"
#include "pdiff/sampling.hpp"

namespace pdiff {

namespace {

template <class T>
bool holds(const DistributionSpec& s) {
    return std::holds_alternative<T>(s.params);
}

double zeta_cached(double s) {
    static std::mutex mu;
    static std::map<double, double> memo;
    std::lock_guard<std::mutex> lock(mu);
    const auto it = memo.find(s);
    if (it != memo.end()) return it->second;
    const double v = zeta(s);
    memo.emplace(s, v);
    return v;
}

// --- untruncated discrete PMFs ---------------------------------------------

double pmf_untruncated(const DistributionSpec& spec, std::int64_t k) {
    if (k < 0) return 0.0;
    if (const auto* pm = std::get_if<PoissMixParams>(&spec.params)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < pm->weights.size(); ++i)
            acc += pm->weights[i] * std::exp(poisson_log_pmf(k, pm->lambdas[i]));
        return acc;
    }
    if (const auto* zp = std::get_if<ZipParams>(&spec.params)) {
        const double poisson = std::exp(poisson_log_pmf(k, zp->lambda));
        if (k == 0) return zp->pi0 + (1.0 - zp->pi0) * poisson;
        return (1.0 - zp->pi0) * poisson;
    }
    if (const auto* nb = std::get_if<NBinomMixParams>(&spec.params)) {
        double acc = 0.0;
        for (std::size_t i = 0; i < nb->weights.size(); ++i) {
            const double r = nb->r[i], p = nb->p[i];
            acc += nb->weights[i] *
                   std::exp(log_gamma(r + static_cast<double>(k)) - log_factorial(k) -
                            log_gamma(r) + r * std::log(p) +
                            static_cast<double>(k) * std::log1p(-p));
        }
        return acc;
    }
    if (const auto* bn = std::get_if<BnbParams>(&spec.params)) {
        return std::exp(log_gamma(bn->r + static_cast<double>(k)) - log_factorial(k) -
                        log_gamma(bn->r) + log_beta(bn->a + bn->r, bn->b + static_cast<double>(k)) -
                        log_beta(bn->a, bn->b));
    }
    if (const auto* zf = std::get_if<ZipfParams>(&spec.params)) {
        if (k < 1) return 0.0;
        return std::exp(-zf->alpha * std::log(static_cast<double>(k))) / zeta_cached(zf->alpha);
    }
    if (const auto* ys = std::get_if<YuleSimonParams>(&spec.params)) {
        if (k < 1) return 0.0;
        const double kd = static_cast<double>(k);
        return ys->rho * std::exp(log_gamma(kd) + log_gamma(ys->rho + 1.0) -
                                  log_gamma(kd + ys->rho + 1.0));
    }
    throw std::invalid_argument("pmf: continuous distribution");
}

double truncated_norm(const DistributionSpec& spec) {
    double z = 0.0;
    for (std::int64_t k = 0; k <= spec.K; ++k) z += pmf_untruncated(spec, k);
    return z;
}

// --- untruncated discrete samplers ------------------------------------------

std::size_t pick_component(const std::vector<double>& weights, RngStream& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u <= acc) return i;
    }
    return weights.size() - 1;
}

std::int64_t nbinom_sample(RngStream& rng, double r, double p) {
    // Gamma-Poisson mixture: lambda ~ Gamma(r, p/(1-p)), then Poisson(lambda).
    const double lambda = gamma_sample(rng, r, p / (1.0 - p));
    return poisson_sample(rng, lambda);
}

std::int64_t zipf_sample(RngStream& rng, double alpha) {
    // Devroye's rejection sampler for the Zipf law, alpha > 1.
    const double am1 = alpha - 1.0;
    const double b = std::pow(2.0, am1);
    while (true) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        const double x = std::floor(std::pow(u, -1.0 / am1));
        if (x < 1.0 || x > 9e18) continue;
        const double t = std::pow(1.0 + 1.0 / x, am1);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::int64_t>(x);
    }
}

std::int64_t yule_simon_sample(RngStream& rng, double rho) {
    // Exponential-geometric mixture; support starts at 1.
    const double w = rng.exponential(rho);
    const double p = std::exp(-w);
    if (p >= 1.0) return 1;
    const double denom = std::log1p(-p);
    const std::int64_t k = 1 + static_cast<std::int64_t>(std::floor(std::log(rng.uniform()) / denom));
    return std::max<std::int64_t>(1, k);
}

double sample_discrete_untruncated(const DistributionSpec& spec, RngStream& rng) {
    if (const auto* pm = std::get_if<PoissMixParams>(&spec.params)) {
        const std::size_t c = pick_component(pm->weights, rng);
        return static_cast<double>(poisson_sample(rng, pm->lambdas[c]));
    }
    if (const auto* zp = std::get_if<ZipParams>(&spec.params)) {
        if (rng.uniform() < zp->pi0) return 0.0;
        return static_cast<double>(poisson_sample(rng, zp->lambda));
    }
    if (const auto* nb = std::get_if<NBinomMixParams>(&spec.params)) {
        const std::size_t c = pick_component(nb->weights, rng);
        return static_cast<double>(nbinom_sample(rng, nb->r[c], nb->p[c]));
    }
    if (const auto* bn = std::get_if<BnbParams>(&spec.params)) {
        const double p = beta_sample(rng, bn->a, bn->b);
        return static_cast<double>(nbinom_sample(rng, bn->r, std::min(std::max(p, 1e-12), 1.0 - 1e-12)));
    }
    if (const auto* zf = std::get_if<ZipfParams>(&spec.params))
        return static_cast<double>(zipf_sample(rng, zf->alpha));
    if (const auto* ys = std::get_if<YuleSimonParams>(&spec.params))
        return static_cast<double>(yule_simon_sample(rng, ys->rho));
    throw std::invalid_argument("sample_discrete_untruncated: continuous distribution");
}

double sample_continuous(const DistributionSpec& spec, RngStream& rng) {
    if (const auto* g = std::get_if<GammaParams>(&spec.params))
        return gamma_sample(rng, g->shape, 1.0 / g->scale);
    if (const auto* ln = std::get_if<LogNormalParams>(&spec.params))
        return std::exp(ln->mu + ln->sigma * rng.normal());
    if (const auto* lo = std::get_if<LomaxParams>(&spec.params))
        return lo->s * (std::pow(rng.uniform(), -1.0 / lo->c) - 1.0);
    if (const auto* hc = std::get_if<HalfCauchyParams>(&spec.params))
        return hc->s * std::tan(1.5707963267948966 * rng.uniform());
    if (const auto* ht = std::get_if<HalfTParams>(&spec.params)) {
        const double chi2 = gamma_sample(rng, ht->nu / 2.0, 0.5);
        return ht->s * std::abs(rng.normal()) / std::sqrt(chi2 / ht->nu);
    }
    if (const auto* wb = std::get_if<WeibullParams>(&spec.params))
        return wb->lambda * std::pow(-std::log(rng.uniform()), 1.0 / wb->k);
    if (const auto* be = std::get_if<BetaParams>(&spec.params))
        return beta_sample(rng, be->a, be->b);
    if (const auto* un = std::get_if<UniformParams>(&spec.params))
        return un->lo + (un->hi - un->lo) * rng.uniform();
    throw std::invalid_argument("sample_continuous: discrete distribution");
}

}  // namespace

bool DistributionSpec::is_discrete() const {
    return holds<PoissMixParams>(*this) || holds<ZipParams>(*this) ||
           holds<NBinomMixParams>(*this) || holds<BnbParams>(*this) || holds<ZipfParams>(*this) ||
           holds<YuleSimonParams>(*this);
}

std::string DistributionSpec::name() const {
    if (holds<PoissMixParams>(*this)) return "poissmix";
    if (holds<ZipParams>(*this)) return "zip";
    if (holds<NBinomMixParams>(*this)) return "nbinommix";
    if (holds<BnbParams>(*this)) return "bnb";
    if (holds<ZipfParams>(*this)) return "zipf";
    if (holds<YuleSimonParams>(*this)) return "yulesimon";
    if (holds<GammaParams>(*this)) return "gamma";
    if (holds<LogNormalParams>(*this)) return "lognormal";
    if (holds<LomaxParams>(*this)) return "lomax";
    if (holds<HalfCauchyParams>(*this)) return "halfcauchy";
    if (holds<HalfTParams>(*this)) return "halft";
    if (holds<WeibullParams>(*this)) return "weibull";
    if (holds<BetaParams>(*this)) return "beta";
    return "uniform";
}

DistributionSpec DistributionSpec::by_name(const std::string& name) {
    DistributionSpec s;
    if (name == "poissmix") {
        s.params = PoissMixParams{};
        s.truncate = false;  // truncation at 50 would erase the lambda = 100 mode
    } else if (name == "zip") {
        s.params = ZipParams{};
        s.truncate = true;
    } else if (name == "nbinommix") {
        s.params = NBinomMixParams{};
        s.truncate = true;
    } else if (name == "bnb") {
        s.params = BnbParams{};
        s.truncate = true;
    } else if (name == "zipf") {
        s.params = ZipfParams{};
        s.truncate = true;
    } else if (name == "yulesimon") {
        s.params = YuleSimonParams{};
        s.truncate = true;
    } else if (name == "gamma") {
        s.params = GammaParams{};
    } else if (name == "lognormal") {
        s.params = LogNormalParams{};
    } else if (name == "lomax") {
        s.params = LomaxParams{};
    } else if (name == "halfcauchy") {
        s.params = HalfCauchyParams{};
    } else if (name == "halft") {
        s.params = HalfTParams{};
    } else if (name == "weibull") {
        s.params = WeibullParams{};
    } else if (name == "beta") {
        s.params = BetaParams{};
    } else if (name == "uniform") {
        s.params = UniformParams{};
    } else {
        throw std::invalid_argument("unknown distribution: " + name);
    }
    return s;
}

std::vector<std::string> DistributionSpec::known_names() {
    return {"poissmix", "zip",        "nbinommix", "bnb",  "zipf",    "yulesimon", "gamma",
            "lognormal", "lomax",     "halfcauchy", "halft", "weibull", "beta",      "uniform"};
}

Vec sample_spec(const DistributionSpec& spec, std::int64_t n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample_spec: n must be positive");
    const bool discrete = spec.is_discrete();
    const RngStream base = rng.fork();
    Vec out(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        RngStream sub = base.substream(i);
        double v;
        if (discrete) {
            do {
                v = sample_discrete_untruncated(spec, sub);
            } while (spec.truncate && v > static_cast<double>(spec.K));
        } else {
            v = sample_continuous(spec, sub);
        }
        out[static_cast<Eigen::Index>(i)] = v;
    });
    return out;
}

double pmf(const DistributionSpec& spec, std::int64_t k) {
    if (!spec.is_discrete()) throw std::invalid_argument("pmf: continuous distribution");
    if (!spec.truncate) return pmf_untruncated(spec, k);
    if (k < 0 || k > spec.K) return 0.0;
    return pmf_untruncated(spec, k) / truncated_norm(spec);
}

double pdf(const DistributionSpec& spec, double x) {
    if (spec.is_discrete()) throw std::invalid_argument("pdf: discrete distribution");
    if (const auto* g = std::get_if<GammaParams>(&spec.params)) {
        if (x < 0.0) return 0.0;
        if (x == 0.0) return g->shape < 1.0 ? std::numeric_limits<double>::infinity()
                                            : (g->shape == 1.0 ? 1.0 / g->scale : 0.0);
        return std::exp((g->shape - 1.0) * std::log(x) - x / g->scale - log_gamma(g->shape) -
                        g->shape * std::log(g->scale));
    }
    if (const auto* ln = std::get_if<LogNormalParams>(&spec.params)) {
        if (x <= 0.0) return 0.0;
        const double t = (std::log(x) - ln->mu) / ln->sigma;
        return std::exp(-0.5 * t * t) / (x * ln->sigma * 2.5066282746310002);
    }
    if (const auto* lo = std::get_if<LomaxParams>(&spec.params)) {
        if (x < 0.0) return 0.0;
        return lo->c / lo->s * std::pow(1.0 + x / lo->s, -(lo->c + 1.0));
    }
    if (const auto* hc = std::get_if<HalfCauchyParams>(&spec.params)) {
        if (x < 0.0) return 0.0;
        const double t = x / hc->s;
        return 2.0 / (3.141592653589793 * hc->s * (1.0 + t * t));
    }
    if (const auto* ht = std::get_if<HalfTParams>(&spec.params)) {
        if (x < 0.0) return 0.0;
        const double t = x / ht->s;
        const double ln_norm = log_gamma((ht->nu + 1.0) / 2.0) - log_gamma(ht->nu / 2.0) -
                               0.5 * std::log(ht->nu * 3.141592653589793);
        return 2.0 / ht->s *
               std::exp(ln_norm - (ht->nu + 1.0) / 2.0 * std::log1p(t * t / ht->nu));
    }
    if (const auto* wb = std::get_if<WeibullParams>(&spec.params)) {
        if (x < 0.0) return 0.0;
        if (x == 0.0) return wb->k < 1.0 ? std::numeric_limits<double>::infinity()
                                         : (wb->k == 1.0 ? 1.0 / wb->lambda : 0.0);
        const double t = x / wb->lambda;
        return wb->k / wb->lambda * std::pow(t, wb->k - 1.0) * std::exp(-std::pow(t, wb->k));
    }
    if (const auto* be = std::get_if<BetaParams>(&spec.params)) {
        if (x < 0.0 || x > 1.0) return 0.0;
        if ((x == 0.0 && be->a < 1.0) || (x == 1.0 && be->b < 1.0))
            return std::numeric_limits<double>::infinity();
        if (x == 0.0 || x == 1.0)
            return std::exp(-log_beta(be->a, be->b)) *
                   std::pow(x, be->a - 1.0) * std::pow(1.0 - x, be->b - 1.0);
        return std::exp((be->a - 1.0) * std::log(x) + (be->b - 1.0) * std::log1p(-x) -
                        log_beta(be->a, be->b));
    }
    const auto& un = std::get<UniformParams>(spec.params);
    if (x < un.lo || x > un.hi) return 0.0;
    return 1.0 / (un.hi - un.lo);
}

double cdf(const DistributionSpec& spec, double x) {
    if (spec.is_discrete()) throw std::invalid_argument("cdf: discrete distribution");
    if (x <= 0.0 && !holds<UniformParams>(spec)) return 0.0;
    if (const auto* g = std::get_if<GammaParams>(&spec.params))
        return reg_gamma_p(g->shape, x / g->scale);
    if (const auto* ln = std::get_if<LogNormalParams>(&spec.params))
        return 0.5 * std::erfc(-(std::log(x) - ln->mu) / (ln->sigma * 1.4142135623730951));
    if (const auto* lo = std::get_if<LomaxParams>(&spec.params))
        return 1.0 - std::pow(1.0 + x / lo->s, -lo->c);
    if (const auto* hc = std::get_if<HalfCauchyParams>(&spec.params))
        return 2.0 / 3.141592653589793 * std::atan(x / hc->s);
    if (const auto* ht = std::get_if<HalfTParams>(&spec.params)) {
        const double t = x / ht->s;
        return 1.0 - reg_beta(ht->nu / 2.0, 0.5, ht->nu / (ht->nu + t * t));
    }
    if (const auto* wb = std::get_if<WeibullParams>(&spec.params))
        return 1.0 - std::exp(-std::pow(x / wb->lambda, wb->k));
    if (const auto* be = std::get_if<BetaParams>(&spec.params))
        return reg_beta(be->a, be->b, std::min(1.0, x));
    const auto& un = std::get<UniformParams>(spec.params);
    if (x <= un.lo) return 0.0;
    if (x >= un.hi) return 1.0;
    return (x - un.lo) / (un.hi - un.lo);
}

namespace {

// Analytic entropy contribution of a power-law tail p(k) ~ C k^{-s} beyond N,
// via the midpoint Euler-Maclaurin continuation.
double power_tail_entropy(double C, double s, std::int64_t N) {
    const double M = static_cast<double>(N) + 0.5;
    const double m1s = std::pow(M, 1.0 - s);
    const double lnM = std::log(M);
    return C * m1s * (s * (lnM / (s - 1.0) + 1.0 / ((s - 1.0) * (s - 1.0))) -
                      std::log(C) / (s - 1.0));
}

double tail_exponent(const DistributionSpec& spec) {
    if (const auto* bn = std::get_if<BnbParams>(&spec.params)) return 1.0 + bn->a;
    if (const auto* zf = std::get_if<ZipfParams>(&spec.params)) return zf->alpha;
    if (const auto* ys = std::get_if<YuleSimonParams>(&spec.params)) return ys->rho + 1.0;
    return 0.0;  // light tail: direct summation suffices
}

}  // namespace

double true_entropy(const DistributionSpec& spec, TruncationMode mode) {
    if (!spec.is_discrete()) throw std::invalid_argument("true_entropy: continuous distribution");
    if (mode == TruncationMode::RenormalizedK) {
        const double z = truncated_norm(spec);
        double h = 0.0;
        for (std::int64_t k = 0; k <= spec.K; ++k) {
            const double p = pmf_untruncated(spec, k) / z;
            if (p > 0.0) h -= p * std::log(p);
        }
        return h;
    }
    const double s = tail_exponent(spec);
    const std::int64_t cap = s > 0.0 ? 2000000 : 100000000;
    double h = 0.0, mass = 0.0;
    std::int64_t k = 0;
    for (; k <= cap; ++k) {
        const double p = pmf_untruncated(spec, k);
        if (p > 0.0) {
            h -= p * std::log(p);
            mass += p;
        }
        if (1.0 - mass < 1e-12 && k > 8) return h;
    }
    if (s <= 1.0)
        throw std::runtime_error("true_entropy: untruncated sum did not converge");
    // Power-law continuation fitted at the summation boundary.
    const double C = pmf_untruncated(spec, cap) * std::pow(static_cast<double>(cap), s);
    return h + power_tail_entropy(C, s, cap);
}

FinitePrior to_finite_prior(const DistributionSpec& spec, double tail_mass) {
    if (!spec.is_discrete()) throw std::invalid_argument("to_finite_prior: continuous distribution");
    std::vector<double> support, probs;
    double mass = 0.0;
    const std::int64_t cap = spec.truncate ? spec.K : 1000000;
    for (std::int64_t k = 0; k <= cap; ++k) {
        const double p = pmf(spec, k);
        if (p > 0.0) {
            support.push_back(static_cast<double>(k));
            probs.push_back(p);
            mass += p;
        }
        if (1.0 - mass < tail_mass && k > 8) break;
    }
    FinitePrior prior;
    prior.support = Eigen::Map<const Vec>(support.data(), static_cast<Eigen::Index>(support.size()));
    prior.probs = Eigen::Map<const Vec>(probs.data(), static_cast<Eigen::Index>(probs.size()));
    prior.probs /= prior.probs.sum();
    prior.validate();
    return prior;
}

}  // namespace pdiff
