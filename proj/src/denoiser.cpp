#include "pdiff/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pdiff/math.hpp"

namespace pdiff {

namespace {

constexpr double kLayerNormEps = 1e-6;
constexpr double kHeadEps = 1e-6;

template <class P, class F>
void visit_tensors(P& p, F&& f) {
    f(p.embed_w);
    f(p.embed_b);
    f(p.in_w);
    f(p.in_b);
    f(p.cond_w);
    for (std::size_t l = 0; l < p.ln_gain.size(); ++l) {
        f(p.ln_gain[l]);
        f(p.ln_shift[l]);
    }
    for (std::size_t l = 0; l < p.hid_w.size(); ++l) {
        f(p.hid_w[l]);
        f(p.hid_b[l]);
    }
    f(p.out_w);
    f(p.out_b);
}

DenoiserParams zeros_like(const ArchSpec& arch) {
    DenoiserParams p;
    p.arch = arch;
    const int H = arch.hidden_dim, D = arch.input_dim, E = arch.embed_dim;
    p.embed_w = Mat::Zero(E, E);
    p.embed_b = Vec::Zero(E);
    p.in_w = Mat::Zero(D + (arch.alpha_input ? 1 : 0), H);
    p.in_b = Vec::Zero(H);
    p.cond_w = Mat::Zero(E, H);
    p.ln_gain.assign(static_cast<std::size_t>(arch.n_hidden_layers), Vec::Zero(H));
    p.ln_shift.assign(static_cast<std::size_t>(arch.n_hidden_layers), Vec::Zero(H));
    p.hid_w.assign(static_cast<std::size_t>(arch.n_hidden_layers - 1), Mat::Zero(H, H));
    p.hid_b.assign(static_cast<std::size_t>(arch.n_hidden_layers - 1), Vec::Zero(H));
    p.out_w = Mat::Zero(H, D);
    p.out_b = Vec::Zero(D);
    return p;
}

void check_finite(const Mat& m, const std::string& where) {
    if (!m.allFinite())
        throw std::runtime_error("forward: non-finite values at " + where);
}

Vec col_sum(const Mat& m) { return m.colwise().sum().transpose().array(); }

}  // namespace

void ArchSpec::validate() const {
    if (input_dim < 1 || hidden_dim < 1 || n_hidden_layers < 1 || embed_dim < 2)
        throw std::invalid_argument("ArchSpec: dimensions must be positive (embed_dim >= 2)");
    if (embed_dim % 2 != 0) throw std::invalid_argument("ArchSpec: embed_dim must be even");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
        throw std::invalid_argument("ArchSpec: leaky_slope must be in (0, 1)");
}

std::int64_t DenoiserParams::count() const {
    std::int64_t n = 0;
    visit_tensors(*this, [&](const auto& t) { n += t.size(); });
    return n;
}

std::vector<double> DenoiserParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(count()));
    visit_tensors(*this, [&](const auto& t) {
        const double* d = t.data();
        flat.insert(flat.end(), d, d + t.size());
    });
    return flat;
}

void DenoiserParams::unflatten(const std::vector<double>& flat) {
    std::size_t pos = 0;
    visit_tensors(*this, [&](auto& t) {
        if (pos + static_cast<std::size_t>(t.size()) > flat.size())
            throw std::invalid_argument("unflatten: size mismatch");
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos) + t.size(), t.data());
        pos += static_cast<std::size_t>(t.size());
    });
    if (pos != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

DenoiserParams init_params(const ArchSpec& arch, RngStream& rng) {
    arch.validate();
    DenoiserParams p = zeros_like(arch);
    auto fill_uniform = [&rng](Mat& w) {
        const double bound = std::sqrt(1.0 / static_cast<double>(w.rows()));
        for (Eigen::Index c = 0; c < w.cols(); ++c)
            for (Eigen::Index r = 0; r < w.rows(); ++r)
                w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
    };
    fill_uniform(p.embed_w);
    fill_uniform(p.in_w);
    fill_uniform(p.cond_w);
    for (auto& w : p.hid_w) fill_uniform(w);
    fill_uniform(p.out_w);
    for (auto& g : p.ln_gain) g.setOnes();
    return p;
}

Vec logsnr_features(double alpha, int embed_dim) {
    // Geometric frequency ladder from 4 down to 4e-4: the top end resolves
    // the sharp posterior transitions (about one log-SNR unit wide), the
    // bottom end spans the whole working range without aliasing.
    const int half = embed_dim / 2;
    Vec f(embed_dim);
    for (int j = 0; j < half; ++j) {
        const double freq =
            half > 1 ? 4.0 * std::exp(-std::log(1e4) * static_cast<double>(j) / (half - 1))
                     : 1.0;
        f[2 * j] = std::sin(freq * alpha);
        f[2 * j + 1] = std::cos(freq * alpha);
    }
    return f;
}

Vec embed_logsnr(const DenoiserParams& params, double alpha) {
    const Vec f = logsnr_features(alpha, params.arch.embed_dim);
    Vec pre = (f.matrix().transpose() * params.embed_w).transpose().array() + params.embed_b;
    return pre.unaryExpr([](double v) { return silu(v); });
}

Mat forward(const DenoiserParams& params, const Mat& z, const Vec& alpha) {
    ForwardCache cache;
    return forward(params, z, alpha, cache);
}

Mat forward(const DenoiserParams& params, const Mat& z, const Vec& alpha, ForwardCache& cache) {
    const ArchSpec& arch = params.arch;
    const Eigen::Index n = z.rows();
    if (z.cols() != arch.input_dim || alpha.size() != n)
        throw std::invalid_argument("forward: batch shape mismatch");
    const int L = arch.n_hidden_layers;
    const double slope = arch.leaky_slope;

    cache.z = z;
    cache.alpha = alpha;

    // Constant-alpha batches (one log-SNR per minibatch / quadrature node /
    // sampling step) reuse a single feature row.
    const bool const_alpha = n > 0 && (alpha == alpha[0]).all();
    cache.features.resize(n, arch.embed_dim);
    if (const_alpha) {
        cache.features.rowwise() = logsnr_features(alpha[0], arch.embed_dim).matrix().transpose();
    } else {
        for (Eigen::Index i = 0; i < n; ++i)
            cache.features.row(i) = logsnr_features(alpha[i], arch.embed_dim).matrix().transpose();
    }
    cache.embed_pre = cache.features * params.embed_w;
    cache.embed_pre.rowwise() += params.embed_b.matrix().transpose();
    cache.embed = cache.embed_pre.unaryExpr([](double v) { return silu(v); });

    if (arch.alpha_input) {
        cache.first_in.resize(n, arch.input_dim + 1);
        cache.first_in.leftCols(arch.input_dim) = z;
        cache.first_in.col(arch.input_dim) = alpha.matrix();
    } else {
        cache.first_in = z;
    }
    Mat h = cache.first_in * params.in_w + cache.embed * params.cond_w;
    h.rowwise() += params.in_b.matrix().transpose();
    check_finite(h, "input layer");

    cache.norm.assign(static_cast<std::size_t>(L), Mat());
    cache.affine.assign(static_cast<std::size_t>(L), Mat());
    cache.act.assign(static_cast<std::size_t>(L), Mat());
    cache.inv_std.assign(static_cast<std::size_t>(L), Vec());

    for (int l = 0; l < L; ++l) {
        const std::size_t ul = static_cast<std::size_t>(l);
        const Vec mean = h.rowwise().mean().array();
        Mat centered = (h.array().colwise() - mean).matrix();
        const Vec var = centered.array().square().rowwise().mean();
        const Vec inv_std = (var + kLayerNormEps).sqrt().inverse();
        Mat norm = (centered.array().colwise() * inv_std).matrix();
        Mat affine = ((norm.array().rowwise() * params.ln_gain[ul].transpose()).rowwise() +
                      params.ln_shift[ul].transpose())
                         .matrix();
        Mat act = affine.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        check_finite(act, "hidden layer " + std::to_string(l));

        cache.norm[ul] = std::move(norm);
        cache.affine[ul] = std::move(affine);
        cache.act[ul] = std::move(act);
        cache.inv_std[ul] = inv_std;

        if (l < L - 1) {
            h = cache.act[ul] * params.hid_w[ul];
            h.rowwise() += params.hid_b[ul].matrix().transpose();
        }
    }

    cache.head_pre = cache.act[static_cast<std::size_t>(L - 1)] * params.out_w;
    cache.head_pre.rowwise() += params.out_b.matrix().transpose();

    if (arch.output_activation == OutputActivation::SoftplusEps) {
        // Observation skip: seed the head with softplus^-1 of the add-one
        // smoothed observation z + 1/(1+gamma).  The zero function of the
        // trainable part is then the stabilized count estimate, which already
        // matches the posterior mean at high SNR; the network only has to
        // learn the correction, bounded in every regime.
        for (Eigen::Index i = 0; i < n; ++i) {
            const double smoothing = 1.0 / (1.0 + std::exp(cache.alpha[i]));
            for (Eigen::Index d = 0; d < arch.input_dim; ++d) {
                const double c = std::max(cache.z(i, d), 0.0) + smoothing;
                cache.head_pre(i, d) += c > 30.0 ? c : std::log(std::expm1(c));
            }
        }
        check_finite(cache.head_pre, "output layer");
        cache.out = cache.head_pre.unaryExpr([](double v) { return softplus(v) + kHeadEps; });
    } else {
        check_finite(cache.head_pre, "output layer");
        cache.out = cache.head_pre;
    }
    return cache.out;
}

BackwardResult backward(const DenoiserParams& params, const ForwardCache& cache,
                        const Mat& targets, const Vec& sample_weights, LossKind loss_kind) {
    const ArchSpec& arch = params.arch;
    const Eigen::Index n = cache.z.rows();
    if (targets.rows() != n || targets.cols() != arch.input_dim || sample_weights.size() != n)
        throw std::invalid_argument("backward: batch shape mismatch");
    const int L = arch.n_hidden_layers;
    const double slope = arch.leaky_slope;

    BackwardResult result;
    result.grads = zeros_like(arch);

    double loss = 0.0;
    Mat d_out(n, arch.input_dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = sample_weights[i];
        for (Eigen::Index d = 0; d < arch.input_dim; ++d) {
            const double x = targets(i, d);
            const double xhat = cache.out(i, d);
            if (loss_kind == LossKind::Prl) {
                loss += w * prl(x, xhat);
                d_out(i, d) = w * (1.0 - x / xhat);
            } else {
                loss += w * squared_error(x, xhat);
                d_out(i, d) = w * 2.0 * (xhat - x);
            }
        }
    }
    result.loss = loss;

    Mat d_head = d_out;
    if (arch.output_activation == OutputActivation::SoftplusEps)
        d_head = (d_out.array() *
                  cache.head_pre.unaryExpr([](double v) { return sigmoid(v); }).array())
                     .matrix();

    const Mat& a_last = cache.act[static_cast<std::size_t>(L - 1)];
    result.grads.out_w = a_last.transpose() * d_head;
    result.grads.out_b = col_sum(d_head);
    Mat d_act = d_head * params.out_w.transpose();

    for (int l = L - 1; l >= 0; --l) {
        const std::size_t ul = static_cast<std::size_t>(l);
        Mat d_affine = (d_act.array() * cache.affine[ul].unaryExpr([slope](double v) {
                                             return v > 0.0 ? 1.0 : slope;
                                         }).array())
                           .matrix();
        result.grads.ln_gain[ul] =
            (d_affine.array() * cache.norm[ul].array()).colwise().sum().transpose();
        result.grads.ln_shift[ul] = col_sum(d_affine);
        Mat d_norm = (d_affine.array().rowwise() * params.ln_gain[ul].transpose()).matrix();

        // LayerNorm backward: dh = inv_std * (dn - mean(dn) - nhat * mean(dn .* nhat)),
        // means taken across the feature dimension.
        const Vec mean_dn = d_norm.rowwise().mean().array();
        const Vec mean_dn_nhat = (d_norm.array() * cache.norm[ul].array()).rowwise().mean();
        Mat d_h = (((d_norm.array().colwise() - mean_dn) -
                    (cache.norm[ul].array().colwise() * mean_dn_nhat))
                       .colwise() *
                   cache.inv_std[ul])
                      .matrix();

        if (l > 0) {
            const std::size_t wl = static_cast<std::size_t>(l - 1);
            result.grads.hid_w[wl] = cache.act[wl].transpose() * d_h;
            result.grads.hid_b[wl] = col_sum(d_h);
            d_act = d_h * params.hid_w[wl].transpose();
        } else {
            result.grads.in_w = cache.first_in.transpose() * d_h;
            result.grads.in_b = col_sum(d_h);
            result.grads.cond_w = cache.embed.transpose() * d_h;
            Mat d_embed = d_h * params.cond_w.transpose();
            Mat d_pre = (d_embed.array() * cache.embed_pre.unaryExpr([](double v) {
                                                const double s = sigmoid(v);
                                                return s * (1.0 + v * (1.0 - s));
                                            }).array())
                            .matrix();
            result.grads.embed_w = cache.features.transpose() * d_pre;
            result.grads.embed_b = col_sum(d_pre);
        }
    }
    return result;
}

AdamState make_adam_state(const DenoiserParams& params, double lr, double beta1, double beta2,
                          double eps_opt) {
    AdamState s;
    s.m.assign(static_cast<std::size_t>(params.count()), 0.0);
    s.v.assign(static_cast<std::size_t>(params.count()), 0.0);
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps_opt = eps_opt;
    return s;
}

void adam_step(AdamState& state, DenoiserParams& params, const DenoiserParams& grads) {
    const std::vector<double> g = grads.flatten();
    std::vector<double> theta = params.flatten();
    if (g.size() != state.m.size() || theta.size() != state.m.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < g.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        theta[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps_opt);
    }
    params.unflatten(theta);
}

}  // namespace pdiff
