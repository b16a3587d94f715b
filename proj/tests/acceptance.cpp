// Acceptance suite: end-to-end checks of the library against its numerical
// contracts, one PASS/FAIL line per criterion.  Exits non-zero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "pdiff/channel.hpp"
#include "pdiff/likelihood.hpp"
#include "pdiff/math.hpp"
#include "pdiff/metrics.hpp"
#include "pdiff/oracle.hpp"
#include "pdiff/sampler.hpp"
#include "pdiff/sampling.hpp"
#include "pdiff/synthetic.hpp"
#include "pdiff/trainer.hpp"
#include "pdiff/validate.hpp"

using namespace pdiff;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

double now_seconds() {
    static const auto start = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void criterion(int number, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& fn) {
    const double t0 = now_seconds();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = fn();
    } catch (const std::exception& e) {
        pass = false;
        detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++g_failures;
    std::printf("%s criterion %2d (%s): %s [%.1f s]\n", pass ? "PASS" : "FAIL", number,
                name.c_str(), detail.c_str(), now_seconds() - t0);
    std::fflush(stdout);
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

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

// Binary-input Gaussian channel: estimate (1/2) integral of e^a * mmse via
// the closed-form tanh posterior mean with `draws` Monte Carlo inputs/node.
double binary_gaussian_estimate(int draws, std::uint64_t seed) {
    RngStream rng(seed, 0);
    Vec data(draws);
    for (int i = 0; i < draws; ++i) data[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
    DenoiserFn tanh_posterior = [](const Vec& z, double gamma) {
        return (std::sqrt(gamma) * z).tanh().eval();
    };
    QuadratureSpec quad;
    quad.scheme = QuadratureScheme::UniformGrid;
    quad.n_points = 1500;
    quad.mc_draws_per_node = 1;
    quad.alpha_lo = -14.0;
    quad.alpha_hi = 10.0;
    RngStream qr(seed + 1, 1);
    return estimate_nll_gaussian(tanh_posterior, data, quad, qr).total;
}

// ---------------------------------------------------------------------------
// Shared state produced by the end-to-end run (criterion 8) and reused by
// criterion 9.
// ---------------------------------------------------------------------------

struct EndToEnd {
    bool ready = false;
    TrainResult poisson;
    Vec test_data;
    double w1_poisson = 0.0;
    double w1_gaussian = 0.0;
    double nll_at_10 = 0.0;
    double nll_at_200 = 0.0;
};
EndToEnd g_e2e;

std::pair<bool, std::string> run_end_to_end() {
    const double t_begin = now_seconds();
    RngStream gen_rng(1001, 0);
    const DistributionSpec pm = DistributionSpec::by_name("poissmix");
    const Vec train_data = sample_spec(pm, 50000, gen_rng);
    RngStream test_rng(1002, 0);
    g_e2e.test_data = sample_spec(pm, 50000, test_rng);

    // denoiser trained the paper-default way, interrogated at 10 and 200 epochs
    TrainConfig pcfg = TrainConfig::defaults_for(NoiseKind::Poisson, LossKind::Prl);
    pcfg.epochs = 10;
    pcfg.seed = 7;
    TrainResult prun = train(pcfg, train_data);

    QuadratureSpec quad;
    quad.n_points = 600;
    quad.mc_draws_per_node = 2;
    const Vec nll_subset = g_e2e.test_data.head(2000);
    RngStream q1(11, 0);
    g_e2e.nll_at_10 = estimate_nll_poisson(model_denoiser(prun.model), nll_subset, quad,
                                           prun.model.eps_shift, q1)
                          .total;

    pcfg.epochs = 200;
    prun = train(pcfg, train_data, &prun);
    const bool epoch_loss_drops = prun.state.epoch_loss.back() < prun.state.epoch_loss.front();
    RngStream q2(12, 0);
    g_e2e.nll_at_200 = estimate_nll_poisson(model_denoiser(prun.model), nll_subset, quad,
                                            prun.model.eps_shift, q2)
                           .total;

    const GammaSchedule sched =
        make_schedule(100, prun.model.snr_loc - 2.0 * prun.model.snr_scale,
                      prun.model.snr_loc + 2.0 * prun.model.snr_scale);
    RngStream srng(13, 0);
    const SampleResult gen = reverse_sample(prun.model, sched, 50000, srng);
    g_e2e.w1_poisson = wasserstein1(gen.rounded, g_e2e.test_data);

    // Gaussian + MSE baseline, trained identically, ancestral sampling
    TrainConfig gcfg = TrainConfig::defaults_for(NoiseKind::Gaussian, LossKind::Mse);
    gcfg.epochs = 200;
    gcfg.seed = 7;
    const TrainResult grun = train(gcfg, train_data);
    RngStream grng(14, 0);
    const SampleResult ggen = gaussian_reverse_sample(grun.model, 100, 1e-4, 2e-2, 50000, grng);
    g_e2e.w1_gaussian = wasserstein1(ggen.rounded, g_e2e.test_data);

    g_e2e.poisson = std::move(prun);
    g_e2e.ready = true;

    const double minutes = (now_seconds() - t_begin) / 60.0;
    const bool order_ok = g_e2e.w1_poisson < g_e2e.w1_gaussian;
    const bool level_ok = g_e2e.w1_poisson <= 1.5;
    const bool time_ok = minutes <= 30.0;
    const bool pass = order_ok && level_ok && time_ok && epoch_loss_drops;
    return {pass, "W1 " + fmt(g_e2e.w1_poisson) + " (count channel) vs " +
                      fmt(g_e2e.w1_gaussian) + " (gaussian baseline), threshold 1.5; " +
                      "epoch-200 loss < epoch-1 " + (epoch_loss_drops ? "yes" : "NO") + "; " +
                      fmt(minutes) + " min"};
}

}  // namespace

int main(int argc, char** argv) {
    (void)argc;
    (void)argv;
    now_seconds();  // start the clock

    criterion(1, "exact-likelihood identity", []() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform12();
        RngStream rng(1, 0);
        const Vec data = draw_uniform12(20000, rng);
        QuadratureSpec quad;  // logistic (-1, 5) over [-28, 37]
        quad.n_points = 1000;
        quad.mc_draws_per_node = 4;
        RngStream qr(2, 0);
        const double t0 = now_seconds();
        const NllReport rep = estimate_nll_poisson(oracle_denoiser(prior), data, quad, 1e-6, qr);
        const double seconds = now_seconds() - t0;
        const double err = std::abs(rep.total - std::log(2.0));
        const bool pass = err <= 0.01 && seconds < 60.0;
        return {pass, "total " + fmt(rep.total) + " vs ln2, |err| " + fmt(err) +
                          " <= 0.01, " + fmt(seconds) + " s"};
    });

    criterion(2, "binary gaussian channel", []() -> std::pair<bool, std::string> {
        const double t0 = now_seconds();
        const double point = binary_gaussian_estimate(4000, 77);
        const double point_err = std::abs(point - std::log(2.0));

        // O(1/sqrt(n)) decay: RMS error over replicates halves when draws quadruple
        const int reps = 40;
        double sq_small = 0.0, sq_big = 0.0;
        for (int r = 0; r < reps; ++r) {
            const double e1 = binary_gaussian_estimate(1000, 1000 + 17 * r) - std::log(2.0);
            const double e4 = binary_gaussian_estimate(4000, 5000 + 17 * r) - std::log(2.0);
            sq_small += e1 * e1;
            sq_big += e4 * e4;
        }
        const double ratio = std::sqrt(sq_big / reps) / std::sqrt(sq_small / reps);
        const double seconds = now_seconds() - t0;
        const bool pass =
            point_err <= 2e-3 && ratio >= 0.35 && ratio <= 0.7 && seconds < 120.0;
        return {pass, "estimate " + fmt(point) + " (|err| " + fmt(point_err) +
                          " <= 2e-3); rms-error ratio 4x draws " + fmt(ratio) +
                          " in [0.35, 0.7]; " + fmt(seconds) + " s"};
    });

    criterion(3, "conjugate-oracle agreement", []() -> std::pair<bool, std::string> {
        for (const double rate : {0.5, 1.0, 2.0}) {
            for (const double gamma : {0.3, 1.0, 5.0}) {
                auto marginal = [rate, gamma](std::int64_t z) {
                    return exp_prior_marginal_pmf(rate, gamma, z);
                };
                for (std::int64_t z = 0; z <= 50; ++z) {
                    const double expect = static_cast<double>(z + 1) / (rate + gamma);
                    if (std::abs(tgr_estimate(marginal, gamma, z) - expect) >
                        1e-10 * std::max(1.0, expect))
                        return {false, "marginal-estimate mismatch at z=" + std::to_string(z)};
                }
            }
        }
        for (const double g0 : {0.01, 0.1, 1.0, 10.0}) {
            const double closed = exp_prior_partial_integral(1.0, g0);
            if (closed > g0 / 2.0) return {false, "cap violated at gamma0=" + fmt(g0)};
            // Simpson on the series with the grid refined toward zero
            const int n = 2000;
            double acc = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double t = static_cast<double>(i) / n;
                const double g = g0 * t * t;
                const double f = g > 0.0 ? exp_prior_mprl_series(1.0, g) : 0.5;
                acc += f * 2.0 * g0 * t * (i == 0 || i == n ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
            }
            acc /= 3.0 * n;
            if (std::abs(closed - acc) > 1e-4)
                return {false, "quadrature mismatch at gamma0=" + fmt(g0) + ": " + fmt(closed) +
                                   " vs " + fmt(acc)};
        }
        return {true, "marginal estimate = conjugacy to 1e-10 (z <= 50); partial integral "
                      "<= gamma0/2 and within 1e-4 of quadrature"};
    });

    criterion(4, "information-derivative identity", []() -> std::pair<bool, std::string> {
        const FinitePrior prior = uniform12();
        std::string details;
        for (const double gamma : {0.5, 1.0, 2.0}) {
            auto info = [&](double g) { return mutual_information_finite(prior, g, 1e-14); };
            const double h = gamma * 1e-3;
            const double d1 = (info(gamma + h) - info(gamma - h)) / (2.0 * h);
            const double d2 = (info(gamma + h / 2.0) - info(gamma - h / 2.0)) / h;
            const double deriv = (4.0 * d2 - d1) / 3.0;
            const double loss = marginal_mprl(prior, gamma, 1e-14);
            const double rel = std::abs(deriv - loss) / std::abs(loss);
            if (rel > 1e-3)
                return {false, "relative error " + fmt(rel) + " at gamma=" + fmt(gamma)};
            details += fmt(rel) + " ";
        }
        return {true, "relative errors " + details + "all < 1e-3"};
    });

    criterion(5, "loss and posterior property suite", []() -> std::pair<bool, std::string> {
        const double t0 = now_seconds();
        const auto results = run_validation(ValidationLevel::Fast);
        std::size_t failed = 0;
        std::string first_fail;
        for (const auto& r : results)
            if (!r.pass) {
                ++failed;
                if (first_fail.empty()) first_fail = r.name + " (" + r.detail + ")";
            }
        const double seconds = now_seconds() - t0;
        const bool pass = failed == 0 && seconds < 300.0;
        return {pass, failed == 0 ? std::to_string(results.size()) + " checks pass in " +
                                        fmt(seconds) + " s"
                                  : "first failure: " + first_fail};
    });

    criterion(6, "gradient correctness", []() -> std::pair<bool, std::string> {
        const auto results = run_validation(ValidationLevel::Fast);
        std::string detail;
        for (const auto& r : results) {
            if (r.name.rfind("gradient-check", 0) == 0) {
                if (!r.pass) return {false, r.name + ": " + r.detail};
                detail += r.name + " ok; ";
            }
        }
        return {!detail.empty(), detail + "both losses, every parameter"};
    });

    criterion(7, "source-entropy reproduction", []() -> std::pair<bool, std::string> {
        const DistributionSpec pm = DistributionSpec::by_name("poissmix");
        const double h = true_entropy(pm, TruncationMode::Untruncated);
        if (std::abs(h - 3.80) > 0.05)
            return {false, "count-mixture entropy " + fmt(h) + " outside 3.80 +- 0.05"};
        std::uint64_t seed = 300;
        for (const auto& name : {"poissmix", "zip", "nbinommix", "bnb", "zipf", "yulesimon"}) {
            const DistributionSpec spec = DistributionSpec::by_name(name);
            const double entropy = true_entropy(
                spec, spec.truncate ? TruncationMode::RenormalizedK : TruncationMode::Untruncated);
            // probability table keeps the 1e6-draw cross-entropy cheap
            const int kmax = spec.truncate ? spec.K : 800;
            std::vector<double> logp(static_cast<std::size_t>(kmax) + 1,
                                     std::numeric_limits<double>::quiet_NaN());
            for (int k = 0; k <= kmax; ++k) {
                const double p = pmf(spec, k);
                logp[static_cast<std::size_t>(k)] = p > 0.0 ? std::log(p) : 0.0;
            }
            RngStream rng(seed++, 0);
            const std::int64_t n = 1000000;
            const Vec samples = sample_spec(spec, n, rng);
            double acc = 0.0, acc2 = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double lp = -logp[static_cast<std::size_t>(samples[i])];
                acc += lp;
                acc2 += lp * lp;
            }
            const double mean = acc / static_cast<double>(n);
            const double se = std::sqrt(
                (acc2 / static_cast<double>(n) - mean * mean) / static_cast<double>(n));
            if (std::abs(mean - entropy) > 3.0 * se + 1e-9)
                return {false, std::string(name) + ": cross-entropy " + fmt(mean) + " vs " +
                                   fmt(entropy) + " (3 se = " + fmt(3.0 * se) + ")"};
        }
        return {true, "count-mixture entropy " + fmt(h) +
                          " within 3.80 +- 0.05; cross-entropy within 3 se on all six"};
    });

    criterion(8, "end-to-end sample quality ordering", run_end_to_end);

    criterion(9, "quadrature-scheme agreement", []() -> std::pair<bool, std::string> {
        if (!g_e2e.ready) return {false, "end-to-end model unavailable"};
        const Vec data = g_e2e.test_data.head(500);
        QuadratureSpec logistic;
        logistic.n_points = 1000;
        logistic.mc_draws_per_node = 8;
        QuadratureSpec uniform = logistic;
        uniform.scheme = QuadratureScheme::UniformGrid;
        const DenoiserFn denoiser = model_denoiser(g_e2e.poisson.model);
        RngStream r1(21, 0), r2(22, 0);
        const double a =
            estimate_nll_poisson(denoiser, data, logistic, g_e2e.poisson.model.eps_shift, r1)
                .diffusion_term;
        const double b =
            estimate_nll_poisson(denoiser, data, uniform, g_e2e.poisson.model.eps_shift, r2)
                .diffusion_term;
        const double rel = std::abs(a - b) / b;
        return {rel <= 0.02, "logistic " + fmt(a) + " vs uniform " + fmt(b) +
                                 " (relative gap " + fmt(rel) + " <= 0.02)"};
    });

    // piggybacked on criterion 8: the likelihood bound tightens with training
    // and stays above the source entropy
    criterion(8, "likelihood bound ordering (supplement)", []() -> std::pair<bool, std::string> {
        if (!g_e2e.ready) return {false, "end-to-end model unavailable"};
        const double entropy = 3.8041846626513064;
        const bool monotone = g_e2e.nll_at_200 <= g_e2e.nll_at_10;
        const bool above = g_e2e.nll_at_200 >= entropy - 0.05;
        return {monotone && above, "nll@10 " + fmt(g_e2e.nll_at_10) + " >= nll@200 " +
                                       fmt(g_e2e.nll_at_200) + " >= source entropy " +
                                       fmt(entropy) + " - 0.05"};
    });

    criterion(10, "cli determinism", []() -> std::pair<bool, std::string> {
        const std::string cli = PDIFF_CLI_PATH;
        const fs::path dir = fs::temp_directory_path() / "pdiff_acceptance_cli";
        fs::remove_all(dir);
        fs::create_directories(dir);
        auto file = [&](const std::string& name) { return (dir / name).string(); };
        auto run = [&](const std::string& args) {
            const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
            return WEXITSTATUS(std::system(cmd.c_str()));
        };
        auto slurp = [](const std::string& p) {
            std::ifstream is(p, std::ios::binary);
            std::ostringstream os;
            os << is.rdbuf();
            return os.str();
        };

        const std::string data = file("data.csv");
        if (run("gen-data --dist zip --n 4000 --seed 3 --out " + data) != 0)
            return {false, "gen-data failed"};
        if (run("gen-data --dist zip --n 4000 --seed 3 --out " + file("data2.csv")) != 0)
            return {false, "gen-data rerun failed"};
        if (slurp(data) != slurp(file("data2.csv"))) return {false, "gen-data not byte-stable"};

        {
            std::ofstream os(file("cfg.json"));
            os << R"({"data": ")" << data << R"(", "noise": "poisson", "loss": "prl",)"
               << R"( "epochs": 2, "batch_size": 64, "seed": 5,)"
               << R"( "arch": {"hidden_dim": 16, "embed_dim": 16}})";
        }
        for (const char* out : {"m1.ckpt", "m2.ckpt"})
            if (run("train --config " + file("cfg.json") + " --out " + file(out)) != 0)
                return {false, "train failed"};
        if (slurp(file("m1.ckpt")) != slurp(file("m2.ckpt")))
            return {false, "train not byte-stable"};

        for (const char* out : {"s1.csv", "s2.csv"})
            if (run("sample --model " + file("m1.ckpt") + " --n 300 --seed 9 --out " +
                    file(out)) != 0)
                return {false, "sample failed"};
        if (slurp(file("s1.csv")) != slurp(file("s2.csv")))
            return {false, "sample not byte-stable"};

        for (const char* out : {"r1.json", "r2.json"})
            if (run("nll --model " + file("m1.ckpt") + " --data " + data +
                    " --points 100 --mc-draws 2 --seed 4 --out " + file(out)) != 0)
                return {false, "nll failed"};
        if (slurp(file("r1.json")) != slurp(file("r2.json")))
            return {false, "nll not byte-stable"};

        for (const char* out : {"e1.json", "e2.json"})
            if (run("eval --gen " + file("s1.csv") + " --test " + data + " --seed 2 --out " +
                    file(out)) != 0)
                return {false, "eval failed"};
        const bool ok = slurp(file("e1.json")) == slurp(file("e2.json"));
        fs::remove_all(dir);
        return {ok, ok ? "gen-data, train, sample, nll, eval byte-identical on rerun"
                       : "eval not byte-stable"};
    });

    std::printf("%s: %d criterion failure(s), total %.1f min\n",
                g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL", g_failures,
                now_seconds() / 60.0);
    return g_failures == 0 ? 0 : 1;
}
