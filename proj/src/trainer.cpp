#include "pdiff/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "pdiff/math.hpp"

namespace pdiff {

TrainConfig TrainConfig::defaults_for(NoiseKind noise, LossKind loss) {
    TrainConfig cfg;
    cfg.noise = noise;
    cfg.loss = loss;
    if (noise == NoiseKind::Gaussian) {
        cfg.snr_loc = 6.0;
        cfg.snr_scale = 3.0;
    }
    cfg.arch.output_activation = (noise == NoiseKind::Gaussian && loss == LossKind::Mse)
                                     ? OutputActivation::Identity
                                     : OutputActivation::SoftplusEps;
    return cfg;
}

void TrainConfig::validate() const {
    if (epochs < 1 || batch_size < 1 || !(lr > 0.0))
        throw std::invalid_argument("TrainConfig: epochs, batch_size, lr must be positive");
    if (!(snr_scale > 0.0)) throw std::invalid_argument("TrainConfig: snr_scale must be positive");
    if (eps_shift < 0.0) throw std::invalid_argument("TrainConfig: eps_shift must be >= 0");
    arch.validate();
}

Vec TrainedModel::to_channel_domain(const Vec& x) const {
    if (noise == NoiseKind::Poisson) return x / channel_scale;
    if (loss == LossKind::Mse) return (x - data_mean) / data_std;
    return 1.0 + (x - data_min) / data_range;  // Gaussian + PRL: [1, 2]
}

Vec TrainedModel::from_model_output(const Vec& yhat) const {
    if (noise == NoiseKind::Poisson) return yhat * channel_scale;
    if (loss == LossKind::Mse) return yhat * data_std + data_mean;
    return (yhat - 1.0) * data_range + data_min;
}

Mat TrainedModel::model_input(const Vec& z, double gamma) const {
    Vec in;
    if (noise == NoiseKind::Poisson)
        in = z / (1.0 + gamma);
    else
        in = z / std::sqrt(1.0 + gamma);
    return Eigen::Map<const Mat>(in.data(), in.size(), 1);
}

Vec TrainedModel::denoise(const Vec& z, double gamma) const {
    const Mat in = model_input(z, gamma);
    const Vec alpha = Vec::Constant(z.size(), std::log(gamma));
    return forward(params, in, alpha).col(0).array();
}

namespace {

TrainedModel make_model_shell(const TrainConfig& cfg, const Vec& data) {
    TrainedModel m;
    m.noise = cfg.noise;
    m.loss = cfg.loss;
    m.eps_shift = cfg.eps_shift;
    m.snr_loc = cfg.snr_loc;
    m.snr_scale = cfg.snr_scale;
    if (cfg.noise == NoiseKind::Poisson) {
        // channel domain: counts rescaled to mean 10
        const double mean = data.mean();
        m.channel_scale = mean > 0.0 ? mean / 10.0 : 1.0;
    } else if (cfg.loss == LossKind::Mse) {
        m.data_mean = data.mean();
        const double var = (data - m.data_mean).square().mean();
        m.data_std = var > 0.0 ? std::sqrt(var) : 1.0;
    } else {
        m.data_min = data.minCoeff();
        m.data_range = std::max(1e-12, data.maxCoeff() - m.data_min);
    }
    return m;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Vec& data, const TrainResult* resume) {
    config.validate();
    if (data.size() == 0) throw std::invalid_argument("train: empty data");
    if (config.noise == NoiseKind::Poisson && (data < 0.0).any())
        throw std::invalid_argument("train: Poisson noise requires non-negative data");

    TrainResult run;
    RngStream rng(config.seed, 0x7261696eULL);  // training stream
    if (resume) {
        run = *resume;
        rng = RngStream(resume->state.rng_seed, resume->state.rng_stream);
        rng.set_state(resume->state.rng_state);
    } else {
        run.model = make_model_shell(config, data);
        RngStream init_rng(config.seed, 0x696e6974ULL);
        run.model.params = init_params(config.arch, init_rng);
        run.state.opt =
            make_adam_state(run.model.params, config.lr, config.beta1, config.beta2);
        run.state.epochs_done = 0;
    }
    TrainedModel& model = run.model;

    const Vec x_channel = model.to_channel_domain(data);
    const Eigen::Index n = data.size();
    const int steps_per_epoch =
        static_cast<int>((n + config.batch_size - 1) / config.batch_size);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));

    for (int epoch = run.state.epochs_done; epoch < config.epochs; ++epoch) {
        // Fresh identity-seeded Fisher-Yates per epoch, so a resumed run
        // shuffles exactly like the uninterrupted one.
        std::iota(order.begin(), order.end(), 0);
        for (Eigen::Index i = n - 1; i > 0; --i) {
            const Eigen::Index j = static_cast<Eigen::Index>(
                rng.next() % static_cast<std::uint64_t>(i + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double epoch_loss = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            const Eigen::Index b0 = static_cast<Eigen::Index>(step) * config.batch_size;
            const Eigen::Index bs = std::min<Eigen::Index>(config.batch_size, n - b0);
            Vec xb(bs);
            for (Eigen::Index i = 0; i < bs; ++i)
                xb[i] = x_channel[order[static_cast<std::size_t>(b0 + i)]];

            const double alpha = logistic_quantile(rng.uniform(), config.snr_loc, config.snr_scale);
            const double gamma = std::exp(alpha);

            Vec z = config.noise == NoiseKind::Poisson
                        ? corrupt_poisson(xb, gamma, config.eps_shift, rng)
                        : corrupt_gaussian(xb, gamma, rng);

            const Mat input = model.model_input(z, gamma);
            const Vec alphas = Vec::Constant(bs, alpha);
            ForwardCache cache;
            forward(model.params, input, alphas, cache);

            const double q = logistic_pdf(alpha, config.snr_loc, config.snr_scale);
            const double w =
                (config.weight_mode == WeightMode::InvQ ? 1.0 : std::exp(alpha)) / q;
            const Vec weights = Vec::Constant(bs, w / static_cast<double>(bs));
            const Mat targets = Eigen::Map<const Mat>(xb.data(), bs, 1);

            BackwardResult back = backward(model.params, cache, targets, weights, config.loss);
            if (!std::isfinite(back.loss)) {
                char msg[160];
                std::snprintf(msg, sizeof(msg),
                              "train: non-finite loss at epoch %d step %d (alpha=%.6g gamma=%.6g)",
                              epoch, step, alpha, gamma);
                throw std::runtime_error(msg);
            }
            adam_step(run.state.opt, model.params, back.grads);
            epoch_loss += back.loss;
        }
        run.state.epoch_loss.push_back(epoch_loss / steps_per_epoch);
        run.state.epochs_done = epoch + 1;
    }

    run.state.rng_state = rng.state();
    run.state.rng_seed = rng.seed();
    run.state.rng_stream = rng.stream_id();
    return run;
}

CrossTrainResult cross_train(const TrainConfig& base, const Vec& data) {
    auto variant = [&](NoiseKind noise, LossKind loss) {
        TrainConfig cfg = TrainConfig::defaults_for(noise, loss);
        cfg.epochs = base.epochs;
        cfg.batch_size = base.batch_size;
        cfg.lr = base.lr;
        cfg.beta1 = base.beta1;
        cfg.beta2 = base.beta2;
        cfg.weight_mode = base.weight_mode;
        cfg.seed = base.seed;
        cfg.eps_shift = base.eps_shift;
        cfg.arch = base.arch;
        cfg.arch.output_activation = (noise == NoiseKind::Gaussian && loss == LossKind::Mse)
                                         ? OutputActivation::Identity
                                         : OutputActivation::SoftplusEps;
        return train(cfg, data);
    };
    CrossTrainResult out;
    out.poisson_prl = variant(NoiseKind::Poisson, LossKind::Prl);
    out.poisson_mse = variant(NoiseKind::Poisson, LossKind::Mse);
    out.gaussian_prl = variant(NoiseKind::Gaussian, LossKind::Prl);
    out.gaussian_mse = variant(NoiseKind::Gaussian, LossKind::Mse);
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint serialization (little-endian binary)
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'D', 'I', 'F', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 2;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

template <class T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_doubles(std::ofstream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::ifstream& is) {
    const auto n = get<std::uint64_t>(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainedModel& model,
                     const TrainerState* state) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(kMagic, sizeof(kMagic));
    put(os, kVersion);
    const ArchSpec& a = model.params.arch;
    put<std::int32_t>(os, a.input_dim);
    put<std::int32_t>(os, a.hidden_dim);
    put<std::int32_t>(os, a.n_hidden_layers);
    put<std::int32_t>(os, a.embed_dim);
    put(os, a.leaky_slope);
    put<std::uint8_t>(os, a.output_activation == OutputActivation::SoftplusEps ? 0 : 1);
    put<std::uint8_t>(os, a.alpha_input ? 1 : 0);
    put<std::uint8_t>(os, model.noise == NoiseKind::Poisson ? 0 : 1);
    put<std::uint8_t>(os, model.loss == LossKind::Prl ? 0 : 1);
    put(os, model.channel_scale);
    put(os, model.data_mean);
    put(os, model.data_std);
    put(os, model.data_min);
    put(os, model.data_range);
    put(os, model.eps_shift);
    put(os, model.snr_loc);
    put(os, model.snr_scale);
    put_doubles(os, model.params.flatten());
    put<std::uint8_t>(os, state ? 1 : 0);
    if (state) {
        put<std::int64_t>(os, state->opt.step);
        put(os, state->opt.lr);
        put(os, state->opt.beta1);
        put(os, state->opt.beta2);
        put(os, state->opt.eps_opt);
        put_doubles(os, state->opt.m);
        put_doubles(os, state->opt.v);
        put<std::int32_t>(os, state->epochs_done);
        put(os, state->rng_seed);
        put(os, state->rng_stream);
        for (const auto w : state->rng_state) put(os, w);
        put_doubles(os, state->epoch_loss);
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::invalid_argument("load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    if (get<std::uint32_t>(is) != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version");
    Checkpoint ck;
    ArchSpec a;
    a.input_dim = get<std::int32_t>(is);
    a.hidden_dim = get<std::int32_t>(is);
    a.n_hidden_layers = get<std::int32_t>(is);
    a.embed_dim = get<std::int32_t>(is);
    a.leaky_slope = get<double>(is);
    a.output_activation =
        get<std::uint8_t>(is) == 0 ? OutputActivation::SoftplusEps : OutputActivation::Identity;
    a.alpha_input = get<std::uint8_t>(is) == 1;
    ck.model.noise = get<std::uint8_t>(is) == 0 ? NoiseKind::Poisson : NoiseKind::Gaussian;
    ck.model.loss = get<std::uint8_t>(is) == 0 ? LossKind::Prl : LossKind::Mse;
    ck.model.channel_scale = get<double>(is);
    ck.model.data_mean = get<double>(is);
    ck.model.data_std = get<double>(is);
    ck.model.data_min = get<double>(is);
    ck.model.data_range = get<double>(is);
    ck.model.eps_shift = get<double>(is);
    ck.model.snr_loc = get<double>(is);
    ck.model.snr_scale = get<double>(is);
    RngStream dummy;
    ck.model.params = init_params(a, dummy);
    ck.model.params.unflatten(get_doubles(is));
    if (get<std::uint8_t>(is) == 1) {
        ck.has_state = true;
        ck.state.opt.step = get<std::int64_t>(is);
        ck.state.opt.lr = get<double>(is);
        ck.state.opt.beta1 = get<double>(is);
        ck.state.opt.beta2 = get<double>(is);
        ck.state.opt.eps_opt = get<double>(is);
        ck.state.opt.m = get_doubles(is);
        ck.state.opt.v = get_doubles(is);
        ck.state.epochs_done = get<std::int32_t>(is);
        ck.state.rng_seed = get<std::uint64_t>(is);
        ck.state.rng_stream = get<std::uint64_t>(is);
        for (auto& w : ck.state.rng_state) w = get<std::uint64_t>(is);
        ck.state.epoch_loss = get_doubles(is);
    }
    return ck;
}

}  // namespace pdiff
