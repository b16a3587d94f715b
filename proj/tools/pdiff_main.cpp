// pdiff: count-data diffusion toolkit.
//
// Subcommands cover the full pipeline: synthetic data generation, denoiser
// training, reverse-chain sampling, likelihood estimation, sample-quality
// metrics, and the numerical identity suite.
//
// Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 validation
// failure.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "pdiff/io.hpp"
#include "pdiff/likelihood.hpp"
#include "pdiff/metrics.hpp"
#include "pdiff/parallel.hpp"
#include "pdiff/sampler.hpp"
#include "pdiff/serialize.hpp"
#include "pdiff/synthetic.hpp"
#include "pdiff/trainer.hpp"
#include "pdiff/validate.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

using pdiff::Json;

void write_json(const std::string& path, const Json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << j.dump(2) << "\n";
}

Json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open " + path);
    Json j;
    is >> j;
    return j;
}

Json manifest_header(const std::string& command) {
    Json m;
    m["tool"] = "pdiff";
    m["version"] = kToolVersion;
    m["command"] = command;
    return m;
}

// --- gen-data ----------------------------------------------------------------

struct GenDataArgs {
    std::string dist;
    std::int64_t n = 50000;
    std::uint64_t seed = 1;
    int K = -1;
    int truncate = -1;  // -1 keep default, 0 off, 1 on
    std::string out;
};

int cmd_gen_data(const GenDataArgs& args) {
    if (args.n < 1) throw std::invalid_argument("gen-data: n must be positive");
    pdiff::DistributionSpec spec = pdiff::DistributionSpec::by_name(args.dist);
    if (args.K >= 0) spec.K = args.K;
    if (args.truncate >= 0) spec.truncate = args.truncate == 1;

    pdiff::RngStream rng(args.seed, 0x67656e64ULL);
    const pdiff::Vec samples = pdiff::sample_spec(spec, args.n, rng);
    pdiff::write_samples_csv(args.out, samples);

    Json m = manifest_header("gen-data");
    m["spec"] = pdiff::spec_to_json(spec);
    m["n"] = args.n;
    m["seed"] = args.seed;
    m["output"] = args.out;
    m["output_sha256"] = pdiff::sha256_file(args.out);
    write_json(args.out + ".manifest.json", m);
    std::cout << "wrote " << args.n << " samples from " << spec.name() << " to " << args.out
              << "\n";
    return 0;
}

// --- train ---------------------------------------------------------------

struct TrainArgs {
    std::string config_path;
    std::string out;
    bool resume = false;
};

int cmd_train(const TrainArgs& args) {
    const Json cfg_json = read_json(args.config_path);
    if (!cfg_json.contains("data"))
        throw std::invalid_argument("train config: missing 'data' path");
    const pdiff::TrainConfig cfg = pdiff::train_config_from_json(cfg_json);
    const std::string data_path = cfg_json.at("data").get<std::string>();
    const pdiff::Vec data = pdiff::read_samples_csv(data_path);

    pdiff::TrainResult resume_state;
    const pdiff::TrainResult* resume_ptr = nullptr;
    if (args.resume) {
        pdiff::Checkpoint ck = pdiff::load_checkpoint(args.out);
        if (!ck.has_state)
            throw std::invalid_argument("train --resume: checkpoint has no optimizer state");
        resume_state.model = std::move(ck.model);
        resume_state.state = std::move(ck.state);
        resume_ptr = &resume_state;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const pdiff::TrainResult run = pdiff::train(cfg, data, resume_ptr);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    pdiff::save_checkpoint(args.out, run.model, &run.state);
    pdiff::write_history_csv(args.out + ".history.csv", run.state.epoch_loss);

    Json m = manifest_header("train");
    m["config"] = pdiff::train_config_to_json(cfg);
    m["config"]["data"] = data_path;
    m["data_sha256"] = pdiff::sha256_file(data_path);
    m["epochs_done"] = run.state.epochs_done;
    m["final_loss"] =
        run.state.epoch_loss.empty() ? 0.0 : run.state.epoch_loss.back();
    m["checkpoint"] = args.out;
    m["checkpoint_sha256"] = pdiff::sha256_file(args.out);
    write_json(args.out + ".manifest.json", m);
    std::cout << "trained " << run.state.epochs_done << " epochs in " << static_cast<int>(seconds)
              << "s, final loss "
              << (run.state.epoch_loss.empty() ? 0.0 : run.state.epoch_loss.back()) << "\n";
    return 0;
}

// --- sample ----------------------------------------------------------------

struct SampleArgs {
    std::string model_path;
    int T = 100;
    std::int64_t n = 1000;
    std::uint64_t seed = 1;
    double alpha_min = std::nan("");
    double alpha_max = std::nan("");
    bool raw = false;
    std::string out;
};

int cmd_sample(const SampleArgs& args) {
    const pdiff::Checkpoint ck = pdiff::load_checkpoint(args.model_path);
    pdiff::RngStream rng(args.seed, 0x73616d70ULL);
    pdiff::SampleResult result;
    Json schedule;
    if (ck.model.noise == pdiff::NoiseKind::Poisson) {
        const double lo =
            std::isnan(args.alpha_min) ? ck.model.snr_loc - 2.0 * ck.model.snr_scale : args.alpha_min;
        const double hi =
            std::isnan(args.alpha_max) ? ck.model.snr_loc + 2.0 * ck.model.snr_scale : args.alpha_max;
        const pdiff::GammaSchedule sched = pdiff::make_schedule(args.T, lo, hi);
        result = pdiff::reverse_sample(ck.model, sched, args.n, rng);
        schedule = {{"kind", "log_snr"}, {"T", args.T}, {"alpha_min", lo}, {"alpha_max", hi}};
    } else {
        result = pdiff::gaussian_reverse_sample(ck.model, args.T, 1e-4, 2e-2, args.n, rng);
        schedule = {{"kind", "linear_beta"}, {"T", args.T}, {"beta_min", 1e-4}, {"beta_max", 2e-2}};
    }
    pdiff::write_samples_csv(args.out, args.raw ? result.continuous : result.rounded);

    Json m = manifest_header("sample");
    m["model"] = args.model_path;
    m["model_sha256"] = pdiff::sha256_file(args.model_path);
    m["schedule"] = schedule;
    m["n"] = args.n;
    m["seed"] = args.seed;
    m["raw"] = args.raw;
    m["output"] = args.out;
    m["output_sha256"] = pdiff::sha256_file(args.out);
    write_json(args.out + ".manifest.json", m);
    std::cout << "sampled " << args.n << " values to " << args.out << "\n";
    return 0;
}

// --- nll ---------------------------------------------------------------------

struct NllArgs {
    std::string model_path;
    std::string data_path;
    std::string scheme = "logistic";
    int points = 1000;
    int mc_draws = 8;
    double alpha_lo = std::nan("");
    double alpha_hi = std::nan("");
    double loc = std::nan("");
    double scale = std::nan("");
    std::uint64_t seed = 1;
    bool bits = false;
    std::string out;
};

int cmd_nll(const NllArgs& args) {
    const pdiff::Checkpoint ck = pdiff::load_checkpoint(args.model_path);
    const pdiff::Vec data_raw = pdiff::read_samples_csv(args.data_path);
    const pdiff::Vec data = ck.model.to_channel_domain(data_raw);

    pdiff::QuadratureSpec quad;
    if (args.scheme == "logistic")
        quad.scheme = pdiff::QuadratureScheme::LogisticImportance;
    else if (args.scheme == "uniform")
        quad.scheme = pdiff::QuadratureScheme::UniformGrid;
    else
        throw std::invalid_argument("nll: scheme must be logistic or uniform");
    quad.n_points = args.points;
    quad.mc_draws_per_node = args.mc_draws;
    quad.loc = std::isnan(args.loc) ? ck.model.snr_loc : args.loc;
    quad.scale = std::isnan(args.scale) ? ck.model.snr_scale : args.scale;
    if (ck.model.noise == pdiff::NoiseKind::Gaussian) {
        const auto [lo, hi] = pdiff::default_gaussian_bounds(data);
        quad.alpha_lo = lo;
        quad.alpha_hi = hi;
    }
    if (!std::isnan(args.alpha_lo)) quad.alpha_lo = args.alpha_lo;
    if (!std::isnan(args.alpha_hi)) quad.alpha_hi = args.alpha_hi;

    pdiff::RngStream rng(args.seed, 0x6e6c6cULL);
    const pdiff::DenoiserFn denoiser = pdiff::model_denoiser(ck.model);
    const pdiff::NllReport report =
        ck.model.noise == pdiff::NoiseKind::Poisson
            ? pdiff::estimate_nll_poisson(denoiser, data, quad, ck.model.eps_shift, rng,
                                          1.0 / ck.model.channel_scale)
            : pdiff::estimate_nll_gaussian(denoiser, data, quad, rng);

    Json j = pdiff::nll_report_to_json(report);
    if (args.bits) j["total_bits_per_dim"] = report.total / std::log(2.0);
    j["quadrature"] = pdiff::quadrature_to_json(quad);
    j["model"] = args.model_path;
    j["data"] = args.data_path;
    j["data_sha256"] = pdiff::sha256_file(args.data_path);
    j["seed"] = args.seed;
    write_json(args.out, j);
    pdiff::write_curve_csv(args.out + ".curve.csv", report.curve);

    Json m = manifest_header("nll");
    m["report"] = args.out;
    m["report_sha256"] = pdiff::sha256_file(args.out);
    m["model_sha256"] = pdiff::sha256_file(args.model_path);
    m["data_sha256"] = j["data_sha256"];
    m["seed"] = args.seed;
    m["quadrature"] = j["quadrature"];
    write_json(args.out + ".manifest.json", m);
    std::printf("nll total %.6f nats (diffusion %.6f, left %.3g, right %.3g)\n", report.total,
                report.diffusion_term, report.left_tail, report.right_tail);
    return 0;
}

// --- eval ----------------------------------------------------------------

struct EvalArgs {
    std::string gen_path;
    std::string test_path;
    int K = 50;
    double h = 1.0;
    int B = 10;
    bool smoothed_nll = false;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_eval(const EvalArgs& args) {
    const pdiff::Vec gen = pdiff::read_samples_csv(args.gen_path);
    const pdiff::Vec test = pdiff::read_samples_csv(args.test_path);

    const double w1 = pdiff::wasserstein1(gen, test);
    const pdiff::EmpiricalPmf pmf = pdiff::estimate_pmf(gen, args.K);
    const pdiff::Vec smoothed = pdiff::smooth_pmf(pmf, args.h);
    const double floor_prob =
        1.0 / (static_cast<double>(pmf.n) * static_cast<double>(args.K + 1));
    const double nll = args.smoothed_nll ? pdiff::empirical_nll(test, smoothed, floor_prob)
                                         : pdiff::empirical_nll(test, pmf);
    pdiff::RngStream rng(args.seed, 0x6576616cULL);
    const pdiff::BootstrapBands bands = pdiff::bootstrap_bands(gen, args.B, args.K, args.h, rng);

    Json j = manifest_header("eval");
    j["gen"] = args.gen_path;
    j["test"] = args.test_path;
    j["gen_sha256"] = pdiff::sha256_file(args.gen_path);
    j["test_sha256"] = pdiff::sha256_file(args.test_path);
    j["K"] = args.K;
    j["bandwidth"] = args.h;
    j["bootstrap"] = args.B;
    j["seed"] = args.seed;
    j["nll_floor"] = floor_prob;
    j["nll_on_smoothed"] = args.smoothed_nll;
    j["w1"] = w1;
    j["nll"] = nll;
    j["overflow"] = pmf.overflow;
    write_json(args.out, j);
    pdiff::write_pmf_csv(args.out + ".pmf.csv", pmf.probs(), smoothed,
                         (bands.mean - bands.sd).max(0.0), bands.mean + bands.sd);
    std::printf("w1 %.6f, nll %.6f nats (overflow %lld)\n", w1, nll,
                static_cast<long long>(pmf.overflow));
    return 0;
}

// --- validate ------------------------------------------------------------

int cmd_validate(const std::string& level_name, std::uint64_t seed) {
    pdiff::ValidationLevel level;
    if (level_name == "fast")
        level = pdiff::ValidationLevel::Fast;
    else if (level_name == "full")
        level = pdiff::ValidationLevel::Full;
    else
        throw std::invalid_argument("validate: level must be fast or full");
    const auto results = pdiff::run_validation(level, seed);
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::printf("%-46s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.detail.c_str());
        if (!r.pass) ++failed;
    }
    std::printf("%zu/%zu checks passed\n", results.size() - failed, results.size());
    if (failed > 0) {
        for (const auto& r : results)
            if (!r.pass) std::fprintf(stderr, "validation failure: %s\n", r.name.c_str());
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pdiff: Poisson-channel diffusion for count data"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (default: PDIFF_THREADS or hardware)");

    GenDataArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "draw samples from a synthetic benchmark");
    gen_cmd->add_option("--dist", gen.dist, "distribution name")
        ->required()
        ->check(CLI::IsMember(pdiff::DistributionSpec::known_names()));
    gen_cmd->add_option("--n", gen.n, "sample count");
    gen_cmd->add_option("--seed", gen.seed, "rng seed");
    gen_cmd->add_option("--K", gen.K, "truncation support cap");
    gen_cmd->add_flag("--truncate,!--no-truncate", gen.truncate, "override truncation default");
    gen_cmd->add_option("--out", gen.out, "output csv path")->required();

    TrainArgs train_args;
    CLI::App* train_cmd = app.add_subcommand("train", "train a denoiser from a config file");
    train_cmd->add_option("--config", train_args.config_path, "json config path")->required();
    train_cmd->add_option("--out", train_args.out, "checkpoint path")->required();
    train_cmd->add_flag("--resume", train_args.resume, "continue from the checkpoint at --out");

    SampleArgs sample_args;
    CLI::App* sample_cmd = app.add_subcommand("sample", "generate via the reverse chain");
    sample_cmd->add_option("--model", sample_args.model_path, "checkpoint path")->required();
    sample_cmd->add_option("--T", sample_args.T, "number of reverse steps");
    sample_cmd->add_option("--n", sample_args.n, "number of samples");
    sample_cmd->add_option("--seed", sample_args.seed, "rng seed");
    sample_cmd->add_option("--alpha-min", sample_args.alpha_min, "lowest log-SNR");
    sample_cmd->add_option("--alpha-max", sample_args.alpha_max, "highest log-SNR");
    sample_cmd->add_flag("--raw", sample_args.raw, "write continuous outputs instead of lattice");
    sample_cmd->add_option("--out", sample_args.out, "output csv path")->required();

    NllArgs nll_args;
    CLI::App* nll_cmd = app.add_subcommand("nll", "estimate negative log-likelihood");
    nll_cmd->add_option("--model", nll_args.model_path, "checkpoint path")->required();
    nll_cmd->add_option("--data", nll_args.data_path, "data csv path")->required();
    nll_cmd->add_option("--scheme", nll_args.scheme, "logistic or uniform");
    nll_cmd->add_option("--points", nll_args.points, "quadrature nodes");
    nll_cmd->add_option("--mc-draws", nll_args.mc_draws, "corruption draws per node");
    nll_cmd->add_option("--alpha-lo", nll_args.alpha_lo, "lower log-SNR bound");
    nll_cmd->add_option("--alpha-hi", nll_args.alpha_hi, "upper log-SNR bound");
    nll_cmd->add_option("--loc", nll_args.loc, "logistic location");
    nll_cmd->add_option("--scale", nll_args.scale, "logistic scale");
    nll_cmd->add_option("--seed", nll_args.seed, "rng seed");
    nll_cmd->add_flag("--bits", nll_args.bits, "also report bits per dimension");
    nll_cmd->add_option("--out", nll_args.out, "report json path")->required();

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "compare generated samples to test samples");
    eval_cmd->add_option("--gen", eval_args.gen_path, "generated csv")->required();
    eval_cmd->add_option("--test", eval_args.test_path, "test csv")->required();
    eval_cmd->add_option("--K", eval_args.K, "support cap");
    eval_cmd->add_option("--bandwidth", eval_args.h, "smoothing bandwidth");
    eval_cmd->add_option("--B", eval_args.B, "bootstrap resamples");
    eval_cmd->add_flag("--smoothed-nll", eval_args.smoothed_nll,
                       "score test data on the smoothed pmf");
    eval_cmd->add_option("--seed", eval_args.seed, "rng seed");
    eval_cmd->add_option("--out", eval_args.out, "report json path")->required();

    std::string validate_level = "fast";
    std::uint64_t validate_seed = 20260808;
    CLI::App* validate_cmd = app.add_subcommand("validate", "run the numerical identity suite");
    validate_cmd->add_option("--level", validate_level, "fast or full");
    validate_cmd->add_option("--seed", validate_seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (threads > 0) pdiff::set_thread_count(threads);
        if (gen_cmd->parsed()) return cmd_gen_data(gen);
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (sample_cmd->parsed()) return cmd_sample(sample_args);
        if (nll_cmd->parsed()) return cmd_nll(nll_args);
        if (eval_cmd->parsed()) return cmd_eval(eval_args);
        if (validate_cmd->parsed()) return cmd_validate(validate_level, validate_seed);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
