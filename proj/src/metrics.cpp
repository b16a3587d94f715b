#include "pdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pdiff/parallel.hpp"

namespace pdiff {

double wasserstein1(const Vec& a, const Vec& b) {
    if (a.size() == 0 || b.size() == 0)
        throw std::invalid_argument("wasserstein1: empty sample");
    std::vector<double> xs(a.data(), a.data() + a.size());
    std::vector<double> ys(b.data(), b.data() + b.size());
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());

    if (xs.size() == ys.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) acc += std::abs(xs[i] - ys[i]);
        return acc / static_cast<double>(xs.size());
    }

    // integral of |F_a - F_b| over the merged breakpoints
    const double na = static_cast<double>(xs.size());
    const double nb = static_cast<double>(ys.size());
    std::size_t i = 0, j = 0;
    double dist = 0.0;
    double prev = std::min(xs[0], ys[0]);
    while (i < xs.size() || j < ys.size()) {
        const double xi = i < xs.size() ? xs[i] : std::numeric_limits<double>::infinity();
        const double yj = j < ys.size() ? ys[j] : std::numeric_limits<double>::infinity();
        const double t = std::min(xi, yj);
        dist += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (t - prev);
        prev = t;
        while (i < xs.size() && xs[i] == t) ++i;
        while (j < ys.size() && ys[j] == t) ++j;
    }
    return dist;
}

double empirical_nll(const Vec& test, const Vec& gen_pmf, double floor_prob) {
    if (test.size() == 0) throw std::invalid_argument("empirical_nll: empty test set");
    if (!(floor_prob > 0.0)) throw std::invalid_argument("empirical_nll: floor must be positive");
    Vec floored = gen_pmf.max(floor_prob);
    const double norm = floored.sum();
    floored /= norm;
    const int K = static_cast<int>(gen_pmf.size()) - 1;
    const double log_floor = std::log(floor_prob / norm);  // off-support fallback
    double acc = 0.0;
    for (Eigen::Index i = 0; i < test.size(); ++i) {
        const double r = std::nearbyint(test[i]);
        if (r >= 0.0 && r <= static_cast<double>(K))
            acc -= std::log(floored[static_cast<Eigen::Index>(r)]);
        else
            acc -= log_floor;
    }
    return acc / static_cast<double>(test.size());
}

double empirical_nll(const Vec& test, const EmpiricalPmf& gen_pmf) {
    const double floor_prob =
        1.0 / (static_cast<double>(gen_pmf.n) * static_cast<double>(gen_pmf.K + 1));
    return empirical_nll(test, gen_pmf.probs(), floor_prob);
}

EmpiricalPmf estimate_pmf(const Vec& samples, int K) {
    if (K < 0) throw std::invalid_argument("estimate_pmf: K must be non-negative");
    EmpiricalPmf pmf;
    pmf.K = K;
    pmf.n = samples.size();
    pmf.counts = Eigen::ArrayXi::Zero(K + 1);
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
        const double r = std::nearbyint(samples[i]);
        if (r >= 0.0 && r <= static_cast<double>(K))
            pmf.counts[static_cast<Eigen::Index>(r)] += 1;
        else
            pmf.overflow += 1;
    }
    return pmf;
}

Vec smooth_pmf(const EmpiricalPmf& pmf, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("smooth_pmf: bandwidth must be positive");
    const int K = pmf.K;
    // Kernel over every reachable lattice offset, normalized to unit mass.
    Vec kernel(2 * K + 1);
    for (int d = -K; d <= K; ++d)
        kernel[d + K] = std::exp(-0.5 * static_cast<double>(d) * static_cast<double>(d) / (h * h));
    kernel /= kernel.sum();

    const Vec p = pmf.probs();
    Vec out = Vec::Zero(K + 1);
    for (int k = 0; k <= K; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= K; ++j) acc += p[j] * kernel[k - j + K];
        out[k] = acc;
    }
    const double mass = out.sum();
    if (mass > 0.0) out /= mass;
    return out;
}

BootstrapBands bootstrap_bands(const Vec& samples, int B, int K, double h, RngStream& rng) {
    if (B < 2) throw std::invalid_argument("bootstrap_bands: need at least 2 resamples");
    const Eigen::Index n = samples.size();
    if (n == 0) throw std::invalid_argument("bootstrap_bands: empty sample");
    const RngStream base = rng.fork();
    Mat curves(B, K + 1);
    parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
        RngStream sub = base.substream(b);
        Vec resample(n);
        for (Eigen::Index i = 0; i < n; ++i)
            resample[i] = samples[static_cast<Eigen::Index>(sub.next() % static_cast<std::uint64_t>(n))];
        curves.row(static_cast<Eigen::Index>(b)) =
            smooth_pmf(estimate_pmf(resample, K), h).matrix().transpose();
    });
    BootstrapBands bands;
    bands.mean = curves.colwise().mean().transpose().array();
    Vec sd(K + 1);
    for (int k = 0; k <= K; ++k) {
        const double m = bands.mean[k];
        double acc = 0.0;
        for (int b = 0; b < B; ++b) {
            const double d = curves(b, k) - m;
            acc += d * d;
        }
        sd[k] = std::sqrt(acc / static_cast<double>(B - 1));
    }
    bands.sd = sd;
    return bands;
}

}  // namespace pdiff
