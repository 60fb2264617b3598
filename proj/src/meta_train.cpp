#include "opal/meta_train.hpp"

#include <cmath>
#include <sstream>

namespace opal {

using nlohmann::json;

double reward(double f_design, double f_final, double eps, std::optional<double> known_shift) {
    if (!(eps > 0.0)) throw std::invalid_argument("reward: eps must be positive");
    const double shift = known_shift.value_or(0.0);
    const double a = std::max(f_design - shift, 0.0);
    const double b = std::max(f_final - shift, 0.0);
    if (a == b) return 0.0;
    return std::log10((a + eps) / (b + eps));
}

double update_baseline(double baseline, double reward, std::size_t episode, double alpha) {
    if (episode == 0) throw std::invalid_argument("update_baseline: episodes are 1-based");
    if (episode == 1) return reward;
    return alpha * baseline + (1.0 - alpha) * reward;
}

double clip_gradient(Eigen::VectorXd& grad, double max_norm) {
    const double norm = grad.norm();
    if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
    return norm;
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (grad.size() != m_.size() || params.size() != m_.size())
        throw std::invalid_argument("adam: size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

json Adam::state() const {
    return {{"lr", lr_},
            {"beta1", beta1_},
            {"beta2", beta2_},
            {"eps", eps_},
            {"t", t_},
            {"m", std::vector<double>(m_.data(), m_.data() + m_.size())},
            {"v", std::vector<double>(v_.data(), v_.data() + v_.size())}};
}

void Adam::load_state(const json& j) {
    const auto m = j.at("m").get<std::vector<double>>();
    const auto v = j.at("v").get<std::vector<double>>();
    if (m.size() != static_cast<std::size_t>(m_.size()) || v.size() != m.size())
        throw std::invalid_argument("adam state: size mismatch");
    m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), m_.size());
    v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), v_.size());
    t_ = j.at("t").get<long>();
}

void TrainConfig::validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho", "must lie in (0, 1)");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw ConfigError("alpha", "must lie in [0, 1)");
    if (!(beta >= 0.0)) throw ConfigError("beta", "must be nonnegative");
    if (!(lambda_aux >= 0.0)) throw ConfigError("lambda_aux", "must be nonnegative");
    if (!(lr >= 0.0)) throw ConfigError("lr", "must be nonnegative");
    if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm", "must be nonnegative");
    if (hidden < 1) throw ConfigError("hidden", "must be positive");
    if (tasks.dims.empty()) throw ConfigError("dims", "at least one dimension is required");
    if (tasks.budget_per_dim == 0) throw ConfigError("budget_multiplier", "must be positive");
    if (!(tasks.noise_fraction >= 0.0 && tasks.noise_fraction <= 1.0))
        throw ConfigError("noise_fraction", "must lie in [0, 1]");
    for (std::size_t d : tasks.dims) {
        if (d < 2) throw ConfigError("dims", "dimensions must be at least 2");
        const auto design = static_cast<std::size_t>(std::floor(rho * static_cast<double>(tasks.budget_per_dim * d)));
        if (design < 50)
            throw ConfigError("rho", "design budget " + std::to_string(design) + " at d=" + std::to_string(d) +
                                         " is smaller than the probe population (50)");
    }
    if (task_pool == TaskPool::restricted)
        for (Family f : tasks.families)
            if (std::find(restricted_families().begin(), restricted_families().end(), f) ==
                restricted_families().end())
                throw ConfigError("families", std::string(to_string(f)) + " is not in the restricted pool");
}

json TrainConfig::to_json() const {
    std::vector<std::string> fams;
    for (Family f : tasks.families) fams.emplace_back(to_string(f));
    return {{"episodes", episodes},
            {"rho", rho},
            {"beta", beta},
            {"lambda_aux", lambda_aux},
            {"alpha", alpha},
            {"lr", lr},
            {"clip_norm", clip_norm},
            {"seed", seed},
            {"task_pool", to_string(task_pool)},
            {"graph_mode", to_string(graph_mode)},
            {"dims", tasks.dims},
            {"families", fams},
            {"budget_multiplier", tasks.budget_per_dim},
            {"noise_fraction", tasks.noise_fraction},
            {"noise_scale", tasks.noise_scale},
            {"hidden", hidden},
            {"checkpoint_every", checkpoint_every}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    c.episodes = j.value("episodes", c.episodes);
    c.rho = j.value("rho", c.rho);
    c.beta = j.value("beta", c.beta);
    c.lambda_aux = j.value("lambda_aux", c.lambda_aux);
    c.alpha = j.value("alpha", c.alpha);
    c.lr = j.value("lr", c.lr);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.seed = j.value("seed", c.seed);
    c.task_pool = task_pool_from_string(j.value("task_pool", std::string("mixed")));
    c.graph_mode = graph_mode_from_string(j.value("graph_mode", std::string("knn")));
    c.tasks.dims = j.value("dims", c.tasks.dims);
    c.tasks.families.clear();
    for (const auto& name : j.value("families", std::vector<std::string>{}))
        c.tasks.families.push_back(family_from_string(name));
    c.tasks.budget_per_dim = j.value("budget_multiplier", c.tasks.budget_per_dim);
    c.tasks.noise_fraction = j.value("noise_fraction", c.tasks.noise_fraction);
    c.tasks.noise_scale = j.value("noise_scale", c.tasks.noise_scale);
    c.hidden = j.value("hidden", c.hidden);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    return c;
}

std::string episode_log_header() {
    return "episode,family,dim,label,R,b,A,loss,grad_norm,entropy,aux_loss,f_design,f_final,fe_total,flagged,tokens";
}

std::string episode_log_row(const EpisodeRecord& r) {
    std::ostringstream os;
    os.precision(12);
    os << r.episode << ',' << to_string(r.task.family) << ',' << r.task.dim << ',' << to_string(r.task.label)
       << ',' << r.reward << ',' << r.baseline << ',' << r.advantage << ',' << r.loss << ',' << r.grad_norm
       << ',' << r.entropy << ',' << r.aux_loss << ',' << r.f_design_best << ',' << r.f_final_best << ','
       << r.total_evals << ',' << (r.flagged ? 1 : 0) << ',';
    for (std::size_t i = 0; i < r.tokens.size(); ++i)
        os << (i ? " " : "") << to_string(token_from_index(r.tokens[i]));
    return os.str();
}

DesignProbe run_design_probe(Environment& env, double rho, const GraphConfig& graph, Rng& rng) {
    DesignProbe probe;
    const std::size_t T = env.budget();
    probe.design_budget = static_cast<std::size_t>(std::floor(rho * static_cast<double>(T)));
    probe.run_budget = T - probe.design_budget;
    // batches may run past the nominal budget by less than one call
    env.permit_overshoot(std::max(env.overshoot_allowance(), T));
    env.set_recording(true);
    probe.design = design_phase(env, probe.design_budget, rng);
    probe.graph = build_graph(env, graph, rng);
    env.set_recording(false);
    return probe;
}

Trainer::Trainer(TrainConfig config) : config_(std::move(config)) {
    config_.validate();
    Architecture arch;
    arch.hidden = config_.hidden;
    params_ = PolicyParams::initialized(arch, derive_seed(config_.seed, 0x1417));
    adam_ = Adam(params_.flat().size(), config_.lr);
}

Trainer::Trainer(TrainConfig config, const Checkpoint& resume) : config_(std::move(config)) {
    config_.validate();
    if (resume.arch.hidden != config_.hidden)
        throw ConfigError("hidden", "checkpoint was trained with hidden=" + std::to_string(resume.arch.hidden));
    params_ = resume.policy();
    adam_ = Adam(params_.flat().size(), config_.lr);
    if (resume.metadata.contains("adam")) adam_.load_state(resume.metadata.at("adam"));
    baseline_ = resume.metadata.value("baseline", 0.0);
    episode_ = resume.episode;
}

GraphConfig Trainer::graph_config() const {
    GraphConfig g;
    g.mode = config_.graph_mode;
    return g;
}

EpisodeRecord Trainer::step() {
    const std::size_t e = episode_ + 1;
    Rng rng(derive_seed(config_.seed, e));
    SampledTask task = sample_task(rng, config_.task_pool, config_.tasks);
    Environment& env = task.env;

    EpisodeRecord rec;
    rec.episode = e;
    rec.task = task.spec;
    const DesignProbe probe = run_design_probe(env, config_.rho, graph_config(), rng);
    rec.f_design_best = probe.design.best;
    rec.design_evals = probe.design.evals;

    const ForwardPass pass = forward(probe.graph.H, probe.graph.A, params_);
    const PolicyOutput out = decode(pass, DecodeMode::sample, rng);
    rec.tokens = out.tokens;
    rec.entropy = out.entropy;
    {
        Eigen::Index cls = 0;
        pass.aux_logits.maxCoeff(&cls);
        rec.aux_prediction = static_cast<int>(cls);
    }

    const RunTrace trace = execute_program(env, probe.design.state, out.program, probe.run_budget, rng());
    rec.f_final_best = std::min(trace.final_best(), probe.design.best);
    rec.run_evals = trace.fe_used();
    rec.total_evals = env.evals_used();

    rec.reward = reward(rec.f_design_best, rec.f_final_best, kRewardEps, env.known_shift());
    // baseline first, then the advantage against the smoothed value
    const double next_baseline = update_baseline(baseline_, rec.reward, e, config_.alpha);
    rec.baseline = next_baseline;
    rec.advantage = rec.reward - next_baseline;

    LossTerms terms;
    terms.tokens = out.tokens;
    terms.advantage = rec.advantage;
    terms.label = static_cast<int>(task.spec.label);
    terms.beta = config_.beta;
    terms.lambda_aux = config_.lambda_aux;
    try {
        LossResult loss = loss_and_gradient(probe.graph.H, probe.graph.A, terms, params_);
        rec.loss = loss.loss;
        rec.aux_loss = loss.aux_loss;
        rec.raw_grad_norm = clip_gradient(loss.grad, config_.clip_norm);
        rec.grad_norm = loss.grad.norm();
        adam_.step(params_.flat(), loss.grad);
    } catch (const NumericalError&) {
        rec.flagged = true;
        rec.loss = std::numeric_limits<double>::quiet_NaN();
    }
    baseline_ = next_baseline;
    episode_ = e;
    return rec;
}

std::vector<EpisodeRecord> Trainer::run(std::size_t episodes,
                                        const std::function<void(const EpisodeRecord&)>& on_episode) {
    std::vector<EpisodeRecord> log;
    log.reserve(episodes);
    for (std::size_t i = 0; i < episodes; ++i) {
        log.push_back(step());
        if (on_episode) on_episode(log.back());
    }
    return log;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ck;
    ck.arch = params_.arch();
    ck.params = params_.flat();
    ck.seed = config_.seed;
    ck.episode = episode_;
    ck.metadata = {{"train_config", config_.to_json()},
                   {"lambda_aux", config_.lambda_aux},
                   {"graph_mode", to_string(config_.graph_mode)},
                   {"task_pool", to_string(config_.task_pool)},
                   {"baseline", baseline_},
                   {"adam", adam_.state()}};
    return ck;
}

TrainResult train(const TrainConfig& config) {
    Trainer trainer(config);
    TrainResult result{trainer.params(), trainer.run(config.episodes)};
    result.params = trainer.params();
    return result;
}

}  // namespace opal
