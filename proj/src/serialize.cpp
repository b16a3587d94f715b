#include "pdiff/serialize.hpp"

#include <set>
#include <stdexcept>

namespace pdiff {

namespace {

void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw std::invalid_argument(where + ": unknown key '" + key + "'");
}

}  // namespace

const char* noise_name(NoiseKind k) { return k == NoiseKind::Poisson ? "poisson" : "gaussian"; }
const char* loss_name(LossKind k) { return k == LossKind::Prl ? "prl" : "mse"; }

NoiseKind noise_from_name(const std::string& s) {
    if (s == "poisson") return NoiseKind::Poisson;
    if (s == "gaussian") return NoiseKind::Gaussian;
    throw std::invalid_argument("noise must be one of {poisson, gaussian} "
                                "(valid pairs: poisson|gaussian x prl|mse), got '" + s + "'");
}

LossKind loss_from_name(const std::string& s) {
    if (s == "prl") return LossKind::Prl;
    if (s == "mse") return LossKind::Mse;
    throw std::invalid_argument("loss must be one of {prl, mse} "
                                "(valid pairs: poisson|gaussian x prl|mse), got '" + s + "'");
}

Json spec_to_json(const DistributionSpec& spec) {
    Json j;
    j["name"] = spec.name();
    j["truncate"] = spec.truncate;
    j["K"] = spec.K;
    Json p;
    if (const auto* pm = std::get_if<PoissMixParams>(&spec.params)) {
        p["weights"] = pm->weights;
        p["lambdas"] = pm->lambdas;
    } else if (const auto* zp = std::get_if<ZipParams>(&spec.params)) {
        p["pi0"] = zp->pi0;
        p["lambda"] = zp->lambda;
    } else if (const auto* nb = std::get_if<NBinomMixParams>(&spec.params)) {
        p["weights"] = nb->weights;
        p["r"] = nb->r;
        p["p"] = nb->p;
    } else if (const auto* bn = std::get_if<BnbParams>(&spec.params)) {
        p["a"] = bn->a;
        p["b"] = bn->b;
        p["r"] = bn->r;
    } else if (const auto* zf = std::get_if<ZipfParams>(&spec.params)) {
        p["alpha"] = zf->alpha;
    } else if (const auto* ys = std::get_if<YuleSimonParams>(&spec.params)) {
        p["rho"] = ys->rho;
    } else if (const auto* g = std::get_if<GammaParams>(&spec.params)) {
        p["shape"] = g->shape;
        p["scale"] = g->scale;
    } else if (const auto* ln = std::get_if<LogNormalParams>(&spec.params)) {
        p["mu"] = ln->mu;
        p["sigma"] = ln->sigma;
    } else if (const auto* lo = std::get_if<LomaxParams>(&spec.params)) {
        p["c"] = lo->c;
        p["s"] = lo->s;
    } else if (const auto* hc = std::get_if<HalfCauchyParams>(&spec.params)) {
        p["s"] = hc->s;
    } else if (const auto* ht = std::get_if<HalfTParams>(&spec.params)) {
        p["nu"] = ht->nu;
        p["s"] = ht->s;
    } else if (const auto* wb = std::get_if<WeibullParams>(&spec.params)) {
        p["k"] = wb->k;
        p["lambda"] = wb->lambda;
    } else if (const auto* be = std::get_if<BetaParams>(&spec.params)) {
        p["a"] = be->a;
        p["b"] = be->b;
    } else {
        const auto& un = std::get<UniformParams>(spec.params);
        p["lo"] = un.lo;
        p["hi"] = un.hi;
    }
    j["params"] = p;
    return j;
}

DistributionSpec spec_from_json(const Json& j) {
    reject_unknown_keys(j, {"name", "truncate", "K", "params"}, "distribution spec");
    DistributionSpec spec = DistributionSpec::by_name(j.at("name").get<std::string>());
    if (j.contains("truncate")) spec.truncate = j.at("truncate").get<bool>();
    if (j.contains("K")) spec.K = j.at("K").get<int>();
    if (!j.contains("params")) return spec;
    const Json& p = j.at("params");
    if (auto* pm = std::get_if<PoissMixParams>(&spec.params)) {
        reject_unknown_keys(p, {"weights", "lambdas"}, "poissmix params");
        if (p.contains("weights")) pm->weights = p.at("weights").get<std::vector<double>>();
        if (p.contains("lambdas")) pm->lambdas = p.at("lambdas").get<std::vector<double>>();
    } else if (auto* zp = std::get_if<ZipParams>(&spec.params)) {
        reject_unknown_keys(p, {"pi0", "lambda"}, "zip params");
        if (p.contains("pi0")) zp->pi0 = p.at("pi0").get<double>();
        if (p.contains("lambda")) zp->lambda = p.at("lambda").get<double>();
    } else if (auto* nb = std::get_if<NBinomMixParams>(&spec.params)) {
        reject_unknown_keys(p, {"weights", "r", "p"}, "nbinommix params");
        if (p.contains("weights")) nb->weights = p.at("weights").get<std::vector<double>>();
        if (p.contains("r")) nb->r = p.at("r").get<std::vector<double>>();
        if (p.contains("p")) nb->p = p.at("p").get<std::vector<double>>();
    } else if (auto* bn = std::get_if<BnbParams>(&spec.params)) {
        reject_unknown_keys(p, {"a", "b", "r"}, "bnb params");
        if (p.contains("a")) bn->a = p.at("a").get<double>();
        if (p.contains("b")) bn->b = p.at("b").get<double>();
        if (p.contains("r")) bn->r = p.at("r").get<double>();
    } else if (auto* zf = std::get_if<ZipfParams>(&spec.params)) {
        reject_unknown_keys(p, {"alpha"}, "zipf params");
        if (p.contains("alpha")) zf->alpha = p.at("alpha").get<double>();
    } else if (auto* ys = std::get_if<YuleSimonParams>(&spec.params)) {
        reject_unknown_keys(p, {"rho"}, "yulesimon params");
        if (p.contains("rho")) ys->rho = p.at("rho").get<double>();
    } else if (auto* g = std::get_if<GammaParams>(&spec.params)) {
        reject_unknown_keys(p, {"shape", "scale"}, "gamma params");
        if (p.contains("shape")) g->shape = p.at("shape").get<double>();
        if (p.contains("scale")) g->scale = p.at("scale").get<double>();
    } else if (auto* ln = std::get_if<LogNormalParams>(&spec.params)) {
        reject_unknown_keys(p, {"mu", "sigma"}, "lognormal params");
        if (p.contains("mu")) ln->mu = p.at("mu").get<double>();
        if (p.contains("sigma")) ln->sigma = p.at("sigma").get<double>();
    } else if (auto* lo = std::get_if<LomaxParams>(&spec.params)) {
        reject_unknown_keys(p, {"c", "s"}, "lomax params");
        if (p.contains("c")) lo->c = p.at("c").get<double>();
        if (p.contains("s")) lo->s = p.at("s").get<double>();
    } else if (auto* hc = std::get_if<HalfCauchyParams>(&spec.params)) {
        reject_unknown_keys(p, {"s"}, "halfcauchy params");
        if (p.contains("s")) hc->s = p.at("s").get<double>();
    } else if (auto* ht = std::get_if<HalfTParams>(&spec.params)) {
        reject_unknown_keys(p, {"nu", "s"}, "halft params");
        if (p.contains("nu")) ht->nu = p.at("nu").get<double>();
        if (p.contains("s")) ht->s = p.at("s").get<double>();
    } else if (auto* wb = std::get_if<WeibullParams>(&spec.params)) {
        reject_unknown_keys(p, {"k", "lambda"}, "weibull params");
        if (p.contains("k")) wb->k = p.at("k").get<double>();
        if (p.contains("lambda")) wb->lambda = p.at("lambda").get<double>();
    } else if (auto* be = std::get_if<BetaParams>(&spec.params)) {
        reject_unknown_keys(p, {"a", "b"}, "beta params");
        if (p.contains("a")) be->a = p.at("a").get<double>();
        if (p.contains("b")) be->b = p.at("b").get<double>();
    } else {
        auto& un = std::get<UniformParams>(spec.params);
        reject_unknown_keys(p, {"lo", "hi"}, "uniform params");
        if (p.contains("lo")) un.lo = p.at("lo").get<double>();
        if (p.contains("hi")) un.hi = p.at("hi").get<double>();
    }
    return spec;
}

TrainConfig train_config_from_json(const Json& j) {
    reject_unknown_keys(j,
                        {"data", "noise", "loss", "epochs", "batch_size", "lr", "beta1", "beta2",
                         "snr_loc", "snr_scale", "weight_mode", "seed", "eps_shift", "arch"},
                        "train config");
    const NoiseKind noise = noise_from_name(j.at("noise").get<std::string>());
    const LossKind loss = loss_from_name(j.at("loss").get<std::string>());
    TrainConfig cfg = TrainConfig::defaults_for(noise, loss);
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("beta1")) cfg.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) cfg.beta2 = j.at("beta2").get<double>();
    if (j.contains("snr_loc")) cfg.snr_loc = j.at("snr_loc").get<double>();
    if (j.contains("snr_scale")) cfg.snr_scale = j.at("snr_scale").get<double>();
    if (j.contains("weight_mode")) {
        const std::string m = j.at("weight_mode").get<std::string>();
        if (m == "inv_q")
            cfg.weight_mode = WeightMode::InvQ;
        else if (m == "ea_over_q")
            cfg.weight_mode = WeightMode::EaOverQ;
        else
            throw std::invalid_argument("weight_mode must be inv_q or ea_over_q");
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("eps_shift")) cfg.eps_shift = j.at("eps_shift").get<double>();
    if (j.contains("arch")) {
        const Json& a = j.at("arch");
        reject_unknown_keys(a,
                            {"input_dim", "hidden_dim", "n_hidden_layers", "embed_dim",
                             "leaky_slope", "output_activation", "alpha_input"},
                            "arch");
        if (a.contains("input_dim")) cfg.arch.input_dim = a.at("input_dim").get<int>();
        if (a.contains("hidden_dim")) cfg.arch.hidden_dim = a.at("hidden_dim").get<int>();
        if (a.contains("n_hidden_layers"))
            cfg.arch.n_hidden_layers = a.at("n_hidden_layers").get<int>();
        if (a.contains("embed_dim")) cfg.arch.embed_dim = a.at("embed_dim").get<int>();
        if (a.contains("leaky_slope")) cfg.arch.leaky_slope = a.at("leaky_slope").get<double>();
        if (a.contains("alpha_input")) cfg.arch.alpha_input = a.at("alpha_input").get<bool>();
        if (a.contains("output_activation")) {
            const std::string act = a.at("output_activation").get<std::string>();
            if (act == "softplus_eps")
                cfg.arch.output_activation = OutputActivation::SoftplusEps;
            else if (act == "identity")
                cfg.arch.output_activation = OutputActivation::Identity;
            else
                throw std::invalid_argument("output_activation must be softplus_eps or identity");
        }
    }
    cfg.validate();
    return cfg;
}

Json train_config_to_json(const TrainConfig& cfg) {
    Json j;
    j["noise"] = noise_name(cfg.noise);
    j["loss"] = loss_name(cfg.loss);
    j["epochs"] = cfg.epochs;
    j["batch_size"] = cfg.batch_size;
    j["lr"] = cfg.lr;
    j["beta1"] = cfg.beta1;
    j["beta2"] = cfg.beta2;
    j["snr_loc"] = cfg.snr_loc;
    j["snr_scale"] = cfg.snr_scale;
    j["weight_mode"] = cfg.weight_mode == WeightMode::InvQ ? "inv_q" : "ea_over_q";
    j["seed"] = cfg.seed;
    j["eps_shift"] = cfg.eps_shift;
    j["arch"] = {{"input_dim", cfg.arch.input_dim},
                 {"hidden_dim", cfg.arch.hidden_dim},
                 {"n_hidden_layers", cfg.arch.n_hidden_layers},
                 {"embed_dim", cfg.arch.embed_dim},
                 {"leaky_slope", cfg.arch.leaky_slope},
                 {"alpha_input", cfg.arch.alpha_input},
                 {"output_activation", cfg.arch.output_activation == OutputActivation::SoftplusEps
                                           ? "softplus_eps"
                                           : "identity"}};
    return j;
}

Json quadrature_to_json(const QuadratureSpec& quad) {
    Json j;
    j["scheme"] =
        quad.scheme == QuadratureScheme::LogisticImportance ? "logistic" : "uniform";
    j["n_points"] = quad.n_points;
    j["loc"] = quad.loc;
    j["scale"] = quad.scale;
    j["alpha_lo"] = quad.alpha_lo;
    j["alpha_hi"] = quad.alpha_hi;
    j["mc_draws_per_node"] = quad.mc_draws_per_node;
    return j;
}

Json nll_report_to_json(const NllReport& report) {
    Json j;
    j["diffusion_term"] = report.diffusion_term;
    j["left_tail"] = report.left_tail;
    j["right_tail"] = report.right_tail;
    j["total"] = report.total;
    j["units"] = report.units;
    j["n_nodes"] = report.curve.size();
    return j;
}

}  // namespace pdiff
