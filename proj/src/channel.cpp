#include "pdiff/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "pdiff/parallel.hpp"
#include "pdiff/sampling.hpp"

namespace pdiff {

Vec corrupt_poisson(const Vec& x, double gamma, double eps, RngStream& rng) {
    if (!(gamma > 0.0)) throw std::domain_error("corrupt_poisson: gamma must be positive");
    if (eps < 0.0) throw std::domain_error("corrupt_poisson: eps must be non-negative");
    if ((x < 0.0).any())
        throw std::domain_error("corrupt_poisson: negative component; the Poisson channel "
                                "accepts non-negative inputs only");
    const RngStream base = rng.fork();
    Vec z(x.size());
    parallel_for(static_cast<std::size_t>(x.size()), [&](std::size_t i) {
        RngStream sub = base.substream(i);
        z[static_cast<Eigen::Index>(i)] = static_cast<double>(
            poisson_sample(sub, gamma * (x[static_cast<Eigen::Index>(i)] + eps)));
    });
    return z;
}

Vec normalize_observation(const Vec& z, double gamma) {
    if (!(gamma > 0.0)) throw std::domain_error("normalize_observation: gamma must be positive");
    return z / (1.0 + gamma);
}

Vec corrupt_gaussian(const Vec& x, double gamma, RngStream& rng) {
    if (gamma < 0.0) throw std::domain_error("corrupt_gaussian: gamma must be non-negative");
    const double root = std::sqrt(gamma);
    const RngStream base = rng.fork();
    Vec z(x.size());
    parallel_for(static_cast<std::size_t>(x.size()), [&](std::size_t i) {
        RngStream sub = base.substream(i);
        z[static_cast<Eigen::Index>(i)] = root * x[static_cast<Eigen::Index>(i)] + sub.normal();
    });
    return z;
}

}  // namespace pdiff
