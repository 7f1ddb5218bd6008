#include "bcdp/reward_labeler.hpp"

#include <algorithm>
#include <cmath>

#include "bcdp/error.hpp"

namespace bcdp {

std::string to_string(RescaleMode mode) { return mode == RescaleMode::linear_ratio ? "linear" : "log"; }

RescaleMode parse_rescale_mode(const std::string& text) {
    if (text == "linear") return RescaleMode::linear_ratio;
    if (text == "log") return RescaleMode::log_ratio;
    throw ValidationError("unknown rescale mode '" + text + "' (expected linear or log)");
}

FeatureSpec FeatureSpec::from(const Demoset& ds) {
    FeatureSpec f;
    f.state_dim = ds.state_dim;
    f.action_dim = ds.action_dim;
    f.n_states = ds.n_states;
    f.n_actions = ds.n_actions;
    f.one_hot_state = ds.encoding == "index" && ds.n_states > 0;
    f.one_hot_action = ds.n_actions > 0;
    return f;
}

void FeatureSpec::fit_normalization(const std::vector<const Demoset*>& sets) {
    if (one_hot_state) return;
    const auto d = static_cast<std::size_t>(state_dim);
    std::vector<double> sum(d, 0.0), sq(d, 0.0);
    double n = 0.0;
    for (const Demoset* ds : sets)
        for (const auto& traj : ds->trajectories)
            for (const auto& rec : traj) {
                for (std::size_t i = 0; i < d; ++i) {
                    sum[i] += rec.s[i];
                    sq[i] += rec.s[i] * rec.s[i];
                }
                n += 1.0;
            }
    if (n == 0.0) throw ValidationError("cannot fit normalization on empty data");
    state_shift.assign(d, 0.0);
    state_scale.assign(d, 1.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double mean = sum[i] / n;
        state_shift[i] = mean;
        state_scale[i] = std::max(std::sqrt(std::max(sq[i] / n - mean * mean, 0.0)), 1e-3);
    }
}

void FeatureSpec::write_state(const Vec& s, nn::Matrix& out, Eigen::Index row, Eigen::Index col0) const {
    if (one_hot_state) {
        const auto idx = static_cast<int>(std::llround(s.at(0)));
        if (idx < 0 || idx >= n_states) throw ValidationError("state index out of range");
        out.block(row, col0, 1, n_states).setZero();
        out(row, col0 + idx) = 1.0;
        return;
    }
    for (int i = 0; i < state_dim; ++i) {
        double v = s.at(static_cast<std::size_t>(i));
        if (!state_shift.empty()) v = (v - state_shift[static_cast<std::size_t>(i)]) / state_scale[static_cast<std::size_t>(i)];
        out(row, col0 + i) = v;
    }
}

void FeatureSpec::write_action(const Vec& a, nn::Matrix& out, Eigen::Index row, Eigen::Index col0) const {
    if (one_hot_action) {
        const auto idx = static_cast<int>(std::llround(a.at(0)));
        if (idx < 0 || idx >= n_actions) throw ValidationError("action index out of range");
        out.block(row, col0, 1, n_actions).setZero();
        out(row, col0 + idx) = 1.0;
        return;
    }
    for (int i = 0; i < action_dim; ++i) out(row, col0 + i) = a.at(static_cast<std::size_t>(i));
}

namespace {

std::vector<const TransitionRecord*> flatten(const Demoset& ds) {
    std::vector<const TransitionRecord*> out;
    out.reserve(ds.n_transitions());
    for (const auto& traj : ds.trajectories)
        for (const auto& rec : traj) out.push_back(&rec);
    return out;
}

nn::Matrix sa_features(const FeatureSpec& f, const std::vector<const TransitionRecord*>& records) {
    nn::Matrix x(static_cast<Eigen::Index>(records.size()), f.state_width() + f.action_width());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        f.write_state(records[i]->s, x, row);
        f.write_action(records[i]->a, x, row, f.state_width());
    }
    return x;
}

} // namespace

double Discriminator::raw(const Vec& s, const Vec& a) const {
    TransitionRecord rec{s, a, s, false, std::nullopt};
    return raw_batch({&rec})(0, 0);
}

nn::Matrix Discriminator::raw_batch(const std::vector<const TransitionRecord*>& records) const {
    return net.forward(sa_features(features, records));
}

Discriminator train_discriminator(const Demoset& expert, const Demoset& offline, const DiscriminatorConfig& config) {
    if (expert.n_transitions() == 0 || offline.n_transitions() == 0)
        throw ValidationError("discriminator needs nonempty expert and offline data");
    if (expert.state_dim != offline.state_dim || expert.action_dim != offline.action_dim ||
        expert.encoding != offline.encoding || expert.n_states != offline.n_states ||
        expert.n_actions != offline.n_actions)
        throw StructuralError("expert and offline datasets have different dimensions");
    if (config.steps < 1 || config.batch_size < 1) throw ValidationError("steps and batch size must be positive");

    Discriminator disc;
    disc.features = FeatureSpec::from(expert);
    disc.features.fit_normalization({&expert, &offline});

    Rng rng(config.seed);
    std::vector<int> dims{disc.features.state_width() + disc.features.action_width()};
    dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
    dims.push_back(1);
    disc.net = nn::DenseNet::initialized(dims, nn::Activation::sigmoid, rng);
    auto adam = nn::AdamState::for_net(disc.net, config.lr);

    const auto exp_records = flatten(expert);
    const auto off_records = flatten(offline);
    const auto b = static_cast<std::size_t>(config.batch_size);
    std::vector<const TransitionRecord*> batch(2 * b);
    nn::Matrix targets(static_cast<Eigen::Index>(2 * b), 1);
    targets.topRows(static_cast<Eigen::Index>(b)).setOnes();
    targets.bottomRows(static_cast<Eigen::Index>(b)).setZero();

    for (int step = 0; step < config.steps; ++step) {
        for (std::size_t i = 0; i < b; ++i) batch[i] = exp_records[rng.index(exp_records.size())];
        for (std::size_t i = 0; i < b; ++i) batch[b + i] = off_records[rng.index(off_records.size())];
        const auto lg = nn::loss_and_grad(disc.net, {sa_features(disc.features, batch), targets}, nn::LossKind::bce);
        nn::adam_update(disc.net, lg.grads, adam);
        if (!disc.net.all_finite()) throw ValidationError("discriminator parameters became non-finite");
    }
    return disc;
}

double density_ratio(double c_raw) {
    if (!(c_raw > 0.0 && c_raw < 1.0)) throw StructuralError("discriminator output must lie strictly inside (0, 1)");
    const double c = std::clamp(c_raw, 0.1, 0.9);
    return c / (1.0 - c);
}

double rescale_ratio(double c_raw, RescaleMode mode) {
    const double rho = density_ratio(c_raw);
    double value = 0.0;
    if (mode == RescaleMode::linear_ratio) {
        value = (9.0 * rho - 1.0) / 80.0;
    } else {
        const double l9 = std::log(9.0);
        value = (std::log(rho) + l9) / (2.0 * l9);
    }
    return std::clamp(value, 0.0, 1.0);
}

RewardLabel label(const Discriminator& disc, const Vec& s, const Vec& a, LabelSource source) {
    if (source == LabelSource::expert) return {1.0, source};
    return {rescale_ratio(disc.raw(s, a), disc.rescale), source};
}

Demoset label_offline(const Discriminator& disc, const Demoset& offline) {
    Demoset out = offline;
    std::vector<TransitionRecord*> records;
    for (auto& traj : out.trajectories)
        for (auto& rec : traj) records.push_back(&rec);
    const std::vector<const TransitionRecord*> view(records.begin(), records.end());
    const nn::Matrix c = disc.raw_batch(view);
    for (std::size_t i = 0; i < records.size(); ++i)
        records[i]->reward_label = rescale_ratio(c(static_cast<Eigen::Index>(i), 0), disc.rescale);
    return out;
}

Demoset label_constant(const Demoset& ds, double value) {
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("reward label outside [0, 1]");
    Demoset out = ds;
    for (auto& traj : out.trajectories)
        for (auto& rec : traj) rec.reward_label = value;
    return out;
}

nlohmann::json to_json(const FeatureSpec& f) {
    return {{"one_hot_state", f.one_hot_state},
            {"one_hot_action", f.one_hot_action},
            {"state_dim", f.state_dim},
            {"action_dim", f.action_dim},
            {"n_states", f.n_states},
            {"n_actions", f.n_actions},
            {"state_shift", f.state_shift},
            {"state_scale", f.state_scale}};
}

FeatureSpec features_from_json(const nlohmann::json& j) {
    FeatureSpec f;
    f.one_hot_state = j.at("one_hot_state").get<bool>();
    f.one_hot_action = j.at("one_hot_action").get<bool>();
    f.state_dim = j.at("state_dim").get<int>();
    f.action_dim = j.at("action_dim").get<int>();
    f.n_states = j.at("n_states").get<int>();
    f.n_actions = j.at("n_actions").get<int>();
    f.state_shift = j.at("state_shift").get<Vec>();
    f.state_scale = j.at("state_scale").get<Vec>();
    if (f.state_shift.size() != f.state_scale.size()) throw ValidationError("normalization vectors differ in length");
    return f;
}

nlohmann::json to_json(const Discriminator& disc) {
    return {{"net", nn::to_json(disc.net)},
            {"features", to_json(disc.features)},
            {"clip_lo", disc.clip_lo},
            {"clip_hi", disc.clip_hi},
            {"rescale", to_string(disc.rescale)}};
}

Discriminator discriminator_from_json(const nlohmann::json& j) {
    Discriminator disc;
    disc.net = nn::net_from_json(j.at("net"));
    disc.features = features_from_json(j.at("features"));
    disc.clip_lo = j.value("clip_lo", 0.1);
    disc.clip_hi = j.value("clip_hi", 0.9);
    disc.rescale = parse_rescale_mode(j.value("rescale", std::string("linear")));
    return disc;
}

} // namespace bcdp
