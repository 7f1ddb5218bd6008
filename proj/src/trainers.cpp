#include "bcdp/trainers.hpp"

#include <algorithm>
#include <cmath>

#include "bcdp/error.hpp"
#include "bcdp/metrics.hpp"

namespace bcdp {

std::string to_string(AlphaMode mode) {
    switch (mode) {
    case AlphaMode::auto_balance: return "auto";
    case AlphaMode::literal: return "literal";
    case AlphaMode::fixed: return "fixed";
    }
    return "auto";
}

AlphaMode parse_alpha_mode(const std::string& text) {
    if (text == "auto") return AlphaMode::auto_balance;
    if (text == "literal") return AlphaMode::literal;
    if (text == "fixed") return AlphaMode::fixed;
    throw ValidationError("unknown alpha mode '" + text + "' (expected auto, literal or fixed)");
}

double alpha_auto(double l_bc, double l_q) { return std::abs(l_bc) / (std::abs(l_q) + 1e-8); }

double alpha_literal(double l_bc, double l_q) {
    const double denom = std::abs(l_bc);
    return std::abs(l_q) / (denom > 0.0 ? denom : 1e-8);
}

void BcdpConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in (0, 1]");
    if (t_freq < 1) throw ValidationError("t_freq must be at least 1");
    if (batch_size < 1) throw ValidationError("batch size must be positive");
    if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw ValidationError("learning rates must be positive");
    if (training_steps < 1) throw ValidationError("training steps must be positive");
    if (!(target_noise_std >= 0.0) || !(target_noise_clip >= 0.0)) throw ValidationError("noise settings must be non-negative");
    if (!std::isfinite(alpha_value)) throw ValidationError("alpha must be finite");
}

void BcConfig::validate() const {
    if (batch_size < 1) throw ValidationError("batch size must be positive");
    if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
    if (training_steps < 1) throw ValidationError("training steps must be positive");
}

namespace {

nn::Matrix softmax_rows(const nn::Matrix& logits) {
    nn::Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const double m = logits.row(i).maxCoeff();
        p.row(i) = (logits.row(i).array() - m).exp().matrix();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out, bool tabular) {
    std::vector<int> dims{in};
    if (!tabular) dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

nn::DenseNet make_actor(const FeatureSpec& f, bool discrete, double bound, const std::vector<int>& hidden, Rng& rng) {
    if (discrete)
        return nn::DenseNet::initialized(layer_dims(f.state_width(), hidden, f.n_actions, f.one_hot_state),
                                         nn::Activation::identity, rng);
    return nn::DenseNet::initialized(layer_dims(f.state_width(), hidden, f.action_dim, false),
                                     nn::Activation::tanh_scaled, rng, bound);
}

nn::DenseNet make_critic(const FeatureSpec& f, bool discrete, const std::vector<int>& hidden, Rng& rng) {
    if (discrete)
        return nn::DenseNet::initialized(layer_dims(f.state_width(), hidden, f.n_actions, f.one_hot_state),
                                         nn::Activation::identity, rng);
    return nn::DenseNet::initialized(layer_dims(f.state_width() + f.action_dim, hidden, 1, false),
                                     nn::Activation::identity, rng);
}

nn::LossAndGrad actor_bc(const nn::DenseNet& actor, bool discrete, const nn::Matrix& states,
                         const nn::Matrix& actions) {
    return nn::loss_and_grad(actor, {states, actions},
                             discrete ? nn::LossKind::cross_entropy : nn::LossKind::mse);
}

void check_compatible(const Demoset& a, const Demoset& b) {
    if (a.state_dim != b.state_dim || a.action_dim != b.action_dim || a.encoding != b.encoding ||
        a.n_states != b.n_states || a.n_actions != b.n_actions)
        throw StructuralError("expert and offline datasets have different dimensions");
}

} // namespace

// ---------------------------------------------------------------------------

Vec Actor::act(const Vec& state) const {
    nn::Matrix x(1, features.state_width());
    features.write_state(state, x, 0);
    const nn::Matrix out = net.forward(x);
    if (discrete) {
        Eigen::Index best = 0;
        out.row(0).maxCoeff(&best);
        return {static_cast<double>(best)};
    }
    return Vec(out.data(), out.data() + out.size());
}

nlohmann::json to_json(const Actor& actor) {
    return {{"net", nn::to_json(actor.net)},
            {"features", to_json(actor.features)},
            {"discrete", actor.discrete},
            {"action_bound", actor.action_bound}};
}

Actor actor_from_json(const nlohmann::json& j) {
    Actor a;
    a.net = nn::net_from_json(j.at("net"));
    a.features = features_from_json(j.at("features"));
    a.discrete = j.at("discrete").get<bool>();
    a.action_bound = j.at("action_bound").get<double>();
    if (a.net.input_dim() != a.features.state_width()) throw ValidationError("actor input width does not match features");
    return a;
}

std::string TrainLog::to_csv() const {
    std::string out = "step,critic_loss,bc_loss,q_term,alpha,eval_return\n";
    for (const auto& e : entries) {
        out += std::to_string(e.step) + "," + metrics::format_double(e.critic_loss) + "," +
               metrics::format_double(e.bc_loss) + "," + metrics::format_double(e.q_term) + "," +
               metrics::format_double(e.alpha) + ",";
        if (e.eval_return) out += metrics::format_double(*e.eval_return);
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------

TransitionTable TransitionTable::build(const Demoset& ds, const FeatureSpec& features) {
    TransitionTable t;
    const auto n = static_cast<Eigen::Index>(ds.n_transitions());
    t.states.resize(n, features.state_width());
    t.next_states.resize(n, features.state_width());
    t.actions.resize(n, ds.action_dim);
    t.rewards = Eigen::VectorXd::Zero(n);
    t.done = Eigen::VectorXd::Zero(n);
    t.labeled = ds.labeled();
    Eigen::Index row = 0;
    for (const auto& traj : ds.trajectories)
        for (const auto& rec : traj) {
            features.write_state(rec.s, t.states, row);
            features.write_state(rec.s_next, t.next_states, row);
            for (int k = 0; k < ds.action_dim; ++k) t.actions(row, k) = rec.a[static_cast<std::size_t>(k)];
            if (rec.reward_label) t.rewards(row) = *rec.reward_label;
            t.done(row) = rec.done ? 1.0 : 0.0;
            ++row;
        }
    return t;
}

SampledBatch SampledBatch::gather(const TransitionTable& table, const std::vector<Eigen::Index>& rows) {
    SampledBatch b;
    const auto n = static_cast<Eigen::Index>(rows.size());
    b.states.resize(n, table.states.cols());
    b.next_states.resize(n, table.next_states.cols());
    b.actions.resize(n, table.actions.cols());
    b.rewards.resize(n);
    b.done.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = rows[static_cast<std::size_t>(i)];
        b.states.row(i) = table.states.row(r);
        b.next_states.row(i) = table.next_states.row(r);
        b.actions.row(i) = table.actions.row(r);
        b.rewards(i) = table.rewards(r);
        b.done(i) = table.done(r);
    }
    return b;
}

SampledBatch SampledBatch::concat(const SampledBatch& a, const SampledBatch& b) {
    if (b.size() == 0) return a;
    if (a.size() == 0) return b;
    SampledBatch out;
    out.states.resize(a.size() + b.size(), a.states.cols());
    out.states << a.states, b.states;
    out.next_states.resize(a.size() + b.size(), a.next_states.cols());
    out.next_states << a.next_states, b.next_states;
    out.actions.resize(a.size() + b.size(), a.actions.cols());
    out.actions << a.actions, b.actions;
    out.rewards.resize(a.size() + b.size());
    out.rewards << a.rewards, b.rewards;
    out.done.resize(a.size() + b.size());
    out.done << a.done, b.done;
    return out;
}

// ---------------------------------------------------------------------------

BcdpTrainer::BcdpTrainer(const Demoset& expert, const Demoset& offline_labeled, const BcdpConfig& config,
                         bool bc_on_union)
    : config_(config), bc_on_union_(bc_on_union), rng_(config.seed) {
    config_.validate();
    if (expert.n_transitions() == 0) throw ValidationError("expert dataset is empty");
    const bool has_offline = offline_labeled.n_transitions() > 0;
    if (has_offline) {
        check_compatible(expert, offline_labeled);
        if (!offline_labeled.labeled()) throw ValidationError("offline dataset must carry reward labels");
    }
    discrete_ = expert.discrete_actions();
    action_bound_ = expert.action_bound;
    features_ = FeatureSpec::from(expert);
    if (has_offline)
        features_.fit_normalization({&expert, &offline_labeled});
    else
        features_.fit_normalization({&expert});

    expert_ = TransitionTable::build(label_constant(expert, 1.0), features_);
    if (has_offline) offline_ = TransitionTable::build(offline_labeled, features_);

    actor_ = make_actor(features_, discrete_, action_bound_, config_.actor_hidden, rng_);
    critic1_ = make_critic(features_, discrete_, config_.critic_hidden, rng_);
    critic2_ = make_critic(features_, discrete_, config_.critic_hidden, rng_);
    actor_target_ = actor_;
    critic1_target_ = critic1_;
    critic2_target_ = critic2_;
    actor_adam_ = nn::AdamState::for_net(actor_, config_.lr_actor);
    critic1_adam_ = nn::AdamState::for_net(critic1_, config_.lr_critic);
    critic2_adam_ = nn::AdamState::for_net(critic2_, config_.lr_critic);
}

SampledBatch BcdpTrainer::sample(const TransitionTable& table, std::size_t n) {
    std::vector<Eigen::Index> rows(n);
    const auto size = static_cast<std::size_t>(table.size());
    for (auto& r : rows) r = static_cast<Eigen::Index>(rng_.index(size));
    return SampledBatch::gather(table, rows);
}

nn::Matrix BcdpTrainer::critic_input(const nn::Matrix& states, const nn::Matrix& actions) const {
    nn::Matrix x(states.rows(), states.cols() + actions.cols());
    x << states, actions;
    return x;
}

Eigen::VectorXd BcdpTrainer::q_values(const nn::DenseNet& critic, const nn::Matrix& states,
                                      const nn::Matrix& actions) const {
    if (!discrete_) return critic.forward(critic_input(states, actions)).col(0);
    const nn::Matrix q = critic.forward(states);
    Eigen::VectorXd out(states.rows());
    for (Eigen::Index i = 0; i < states.rows(); ++i)
        out(i) = q(i, static_cast<Eigen::Index>(std::llround(actions(i, 0))));
    return out;
}

Eigen::VectorXd BcdpTrainer::critic_target(const SampledBatch& batch) {
    const Eigen::Index n = batch.size();
    Eigen::VectorXd next_value(n);
    if (discrete_) {
        const nn::Matrix p = softmax_rows(actor_target_.forward(batch.next_states));
        const nn::Matrix q = critic1_target_.forward(batch.next_states).cwiseMin(critic2_target_.forward(batch.next_states));
        next_value = (p.array() * q.array()).rowwise().sum();
    } else {
        nn::Matrix a = actor_target_.forward(batch.next_states);
        if (config_.target_noise_std > 0.0) {
            const double clip = config_.target_noise_clip * action_bound_;
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                for (Eigen::Index j = 0; j < a.cols(); ++j) {
                    const double noise =
                        std::clamp(rng_.normal() * config_.target_noise_std * action_bound_, -clip, clip);
                    a(i, j) = std::clamp(a(i, j) + noise, -action_bound_, action_bound_);
                }
        }
        const nn::Matrix x = critic_input(batch.next_states, a);
        next_value = critic1_target_.forward(x).col(0).cwiseMin(critic2_target_.forward(x).col(0));
    }
    const double terminal_scale = config_.absorbing_terminal ? 1.0 / (1.0 - config_.gamma) : 1.0;
    const Eigen::ArrayXd done = batch.done.array();
    return batch.rewards.array() * (1.0 + done * (terminal_scale - 1.0)) +
           (1.0 - done) * config_.gamma * next_value.array();
}

double BcdpTrainer::critic_update(const SampledBatch& batch, const Eigen::VectorXd& y, nn::DenseNet& critic,
                                  nn::AdamState& adam) {
    nn::ForwardCache cache;
    const auto n = static_cast<double>(batch.size());
    double loss = 0.0;
    nn::Matrix d_out;
    if (discrete_) {
        const nn::Matrix q = critic.forward(batch.states, cache);
        d_out = nn::Matrix::Zero(q.rows(), q.cols());
        for (Eigen::Index i = 0; i < q.rows(); ++i) {
            const auto a = static_cast<Eigen::Index>(std::llround(batch.actions(i, 0)));
            const double diff = q(i, a) - y(i);
            loss += diff * diff;
            d_out(i, a) = 2.0 * diff / n;
        }
        loss /= n;
    } else {
        const nn::Matrix q = critic.forward(critic_input(batch.states, batch.actions), cache);
        auto lo = nn::output_loss(nn::LossKind::mse, q, y);
        loss = lo.loss;
        d_out = std::move(lo.d_output);
    }
    nn::adam_update(critic, critic.backward(cache, d_out), adam);
    if (!critic.all_finite()) throw ValidationError("critic parameters became non-finite");
    return loss;
}

nn::LossAndGrad BcdpTrainer::bc_loss_and_grad(const SampledBatch& batch) const {
    return actor_bc(actor_, discrete_, batch.states, batch.actions);
}

nn::LossAndGrad BcdpTrainer::q_loss_and_grad(const SampledBatch& batch) const {
    const auto n = static_cast<double>(batch.size());
    nn::ForwardCache actor_cache;
    const nn::Matrix out = actor_.forward(batch.states, actor_cache);
    nn::LossAndGrad result;
    if (discrete_) {
        const nn::Matrix p = softmax_rows(out);
        const nn::Matrix q = critic1_.forward(batch.states);
        const Eigen::VectorXd v = (p.array() * q.array()).rowwise().sum();
        result.loss = -v.sum() / n;
        nn::Matrix d_logits = q;
        d_logits.colwise() -= v;
        d_logits = (-1.0 / n) * (p.array() * d_logits.array()).matrix();
        result.grads = actor_.backward(actor_cache, d_logits);
    } else {
        nn::ForwardCache critic_cache;
        const nn::Matrix q = critic1_.forward(critic_input(batch.states, out), critic_cache);
        result.loss = -q.sum() / n;
        nn::Matrix d_input;
        critic1_.backward(critic_cache, nn::Matrix::Constant(q.rows(), 1, -1.0 / n), &d_input);
        result.grads = actor_.backward(actor_cache, d_input.rightCols(out.cols()));
    }
    return result;
}

LogEntry BcdpTrainer::step() {
    ++step_;
    const auto b = static_cast<std::size_t>(config_.batch_size);
    const SampledBatch be = sample(expert_, b);
    SampledBatch bo;
    if (offline_.size() > 0) bo = sample(offline_, b);
    last_offline_rewards_ = bo.rewards;
    const SampledBatch bu = SampledBatch::concat(be, bo);

    LogEntry entry;
    entry.step = step_;
    const Eigen::VectorXd y = critic_target(bu);
    entry.critic_loss = 0.5 * (critic_update(bu, y, critic1_, critic1_adam_) + critic_update(bu, y, critic2_, critic2_adam_));

    const nn::LossAndGrad bc = bc_loss_and_grad(bc_on_union_ ? bu : be);
    entry.bc_loss = bc.loss;
    last_actor_ = {bc.grads, std::nullopt, 0.0, bc.grads};

    const bool delayed = step_ % config_.t_freq == 0;
    if (delayed) {
        nn::LossAndGrad q = q_loss_and_grad(bu);
        double alpha = config_.alpha_value;
        if (config_.alpha_mode == AlphaMode::auto_balance) alpha = alpha_auto(bc.loss, q.loss);
        if (config_.alpha_mode == AlphaMode::literal) alpha = alpha_literal(bc.loss, q.loss);
        if (alpha != 0.0) last_actor_.applied.add_scaled(q.grads, alpha);
        last_actor_.alpha = alpha;
        last_actor_.g_q = std::move(q.grads);
        entry.q_term = q.loss;
        entry.alpha = alpha;
    }
    nn::adam_update(actor_, last_actor_.applied, actor_adam_);
    if (!actor_.all_finite()) throw ValidationError("actor parameters became non-finite");

    if (delayed) {
        nn::soft_update(actor_target_, actor_, config_.tau);
        nn::soft_update(critic1_target_, critic1_, config_.tau);
        nn::soft_update(critic2_target_, critic2_, config_.tau);
        ++target_updates_;
    }
    return entry;
}

Actor BcdpTrainer::actor() const { return {actor_, features_, discrete_, action_bound_}; }

TrainLog BcdpTrainer::train(const std::function<double(const Actor&)>& evaluator, int eval_every) {
    TrainLog log;
    log.entries.reserve(static_cast<std::size_t>(config_.training_steps));
    for (int i = 0; i < config_.training_steps; ++i) {
        LogEntry e = step();
        if (evaluator && eval_every > 0 && (e.step % eval_every == 0 || i + 1 == config_.training_steps))
            e.eval_return = evaluator(actor());
        log.entries.push_back(e);
    }
    return log;
}

TrainResult bcdp_train(const Demoset& expert, const Demoset& offline_labeled, const BcdpConfig& config,
                       const std::function<double(const Actor&)>& evaluator, int eval_every) {
    BcdpTrainer trainer(expert, offline_labeled, config, false);
    TrainLog log = trainer.train(evaluator, eval_every);
    return {trainer.actor(), std::move(log), trainer.rng().state()};
}

TrainResult uds_train(const Demoset& expert, const Demoset& offline, const BcdpConfig& config,
                      const std::function<double(const Actor&)>& evaluator, int eval_every) {
    const Demoset zero = offline.n_transitions() > 0 ? label_constant(offline, 0.0) : offline;
    BcdpTrainer trainer(expert, zero, config, true);
    TrainLog log = trainer.train(evaluator, eval_every);
    return {trainer.actor(), std::move(log), trainer.rng().state()};
}

// ---------------------------------------------------------------------------

TrainResult bc_train(const Demoset& data, const std::optional<std::vector<double>>& weights, const BcConfig& config,
                     const std::function<double(const Actor&)>& evaluator, int eval_every) {
    config.validate();
    const std::size_t n = data.n_transitions();
    if (n == 0) throw ValidationError("BC needs a nonempty dataset");

    std::vector<double> cumulative;
    double total = 0.0;
    Demoset support = data.empty_like();
    if (weights) {
        if (weights->size() != n) throw ValidationError("one weight per transition is required");
        std::size_t k = 0;
        for (const auto& traj : data.trajectories) {
            Trajectory kept;
            for (const auto& rec : traj) {
                const double w = (*weights)[k++];
                if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("BC weight outside [0, 1]");
                total += w;
                cumulative.push_back(total);
                if (w > 0.0) kept.push_back(rec);
            }
            if (!kept.empty()) support.trajectories.push_back(std::move(kept));
        }
        if (!(total > 0.0)) throw ValidationError("all BC weights are zero");
    } else {
        support = data;
    }

    Actor actor;
    actor.discrete = data.discrete_actions();
    actor.action_bound = data.action_bound;
    actor.features = FeatureSpec::from(data);
    actor.features.fit_normalization({&support});

    Rng rng(config.seed);
    actor.net = make_actor(actor.features, actor.discrete, actor.action_bound, config.hidden, rng);
    auto adam = nn::AdamState::for_net(actor.net, config.lr);
    const TransitionTable table = TransitionTable::build(data, actor.features);

    TrainLog log;
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(config.batch_size));
    for (int i = 0; i < config.training_steps; ++i) {
        for (auto& r : rows) {
            if (weights) {
                const double u = rng.uniform() * total;
                const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
                r = static_cast<Eigen::Index>(std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1));
            } else {
                r = static_cast<Eigen::Index>(rng.index(n));
            }
        }
        const SampledBatch batch = SampledBatch::gather(table, rows);
        const auto lg = actor_bc(actor.net, actor.discrete, batch.states, batch.actions);
        nn::adam_update(actor.net, lg.grads, adam);
        if (!actor.net.all_finite()) throw ValidationError("actor parameters became non-finite");
        LogEntry e;
        e.step = i + 1;
        e.bc_loss = lg.loss;
        if (evaluator && eval_every > 0 && (e.step % eval_every == 0 || i + 1 == config.training_steps))
            e.eval_return = evaluator(actor);
        log.entries.push_back(e);
    }
    return {std::move(actor), std::move(log), rng.state()};
}

} // namespace bcdp
