#include "pdiff/sampling.hpp"

#include <cmath>
#include <stdexcept>

#include "pdiff/math.hpp"

namespace pdiff {

namespace {

std::int64_t poisson_inversion(RngStream& rng, double lambda) {
    const double u = rng.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
        if (k > 2000) break;  // cdf == 1 up to rounding long before this
    }
    return k;
}

// Transformed rejection with squeeze (Hormann's PTRD).
std::int64_t poisson_ptrd(RngStream& rng, double lambda) {
    const double log_lambda = std::log(lambda);
    const double b = 0.931 + 2.53 * std::sqrt(lambda);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    while (true) {
        double u = rng.uniform() - 0.5;
        const double v = rng.uniform();
        const double us = 0.5 - std::abs(u);
        const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
        if (kf < 0.0) continue;
        const std::int64_t k = static_cast<std::int64_t>(kf);
        if (us >= 0.07 && v <= v_r) return k;
        if (us < 0.013 && v > us) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = -lambda + kf * log_lambda - log_factorial(k);
        if (lhs <= rhs) return k;
    }
}

}  // namespace

std::int64_t poisson_sample(RngStream& rng, double lambda) {
    if (lambda < 0.0 || std::isnan(lambda) || std::isinf(lambda))
        throw std::domain_error("poisson_sample: lambda must be finite and non-negative");
    if (lambda == 0.0) return 0;
    if (lambda < 30.0) return poisson_inversion(rng, lambda);
    if (lambda < 1e10) return poisson_ptrd(rng, lambda);
    const double draw = std::round(lambda + std::sqrt(lambda) * rng.normal());
    return draw < 0.0 ? 0 : static_cast<std::int64_t>(draw);
}

double gamma_sample(RngStream& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::domain_error("gamma_sample: shape and rate must be positive");
    if (shape < 1.0) {
        // Gamma(shape) = Gamma(shape + 1) * U^{1/shape}
        const double g = gamma_sample(rng, shape + 1.0, 1.0);
        return g * std::pow(rng.uniform(), 1.0 / shape) / rate;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    while (true) {
        double x, v;
        do {
            x = rng.normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
}

double beta_sample(RngStream& rng, double a, double b) {
    const double x = gamma_sample(rng, a, 1.0);
    const double y = gamma_sample(rng, b, 1.0);
    return x / (x + y);
}

}  // namespace pdiff
