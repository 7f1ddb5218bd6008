#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bcdp/demoset.hpp"
#include "bcdp/nn.hpp"
#include "bcdp/reward_labeler.hpp"

namespace bcdp {

/// auto_balance: |l_bc| / (|l_q| + 1e-8); literal: l_q / l_bc; fixed: alpha_value.
enum class AlphaMode { auto_balance, literal, fixed };

std::string to_string(AlphaMode mode);
AlphaMode parse_alpha_mode(const std::string& text);

double alpha_auto(double l_bc, double l_q);
double alpha_literal(double l_bc, double l_q);

struct BcdpConfig {
    double gamma = 0.99;
    double tau = 0.005;
    int t_freq = 2;
    int batch_size = 256; ///< per source
    double lr_actor = 1e-3;
    double lr_critic = 1e-3;
    AlphaMode alpha_mode = AlphaMode::auto_balance;
    double alpha_value = 1.0;
    double target_noise_std = 0.2;
    double target_noise_clip = 0.5;
    int training_steps = 10000;
    /// When set, a done transition is treated as entering an absorbing state that repeats its
    /// reward forever, so the target is r / (1 - gamma) instead of r.
    bool absorbing_terminal = false;
    std::uint64_t seed = 0;
    std::vector<int> actor_hidden = {64, 64};
    std::vector<int> critic_hidden = {64, 64};

    void validate() const;
};

/// A policy network plus the feature map it was trained with.
struct Actor {
    nn::DenseNet net;
    FeatureSpec features;
    bool discrete = false;
    double action_bound = 1.0;

    /// Deterministic action: the network output (continuous) or the argmax logit (discrete).
    Vec act(const Vec& state) const;
    nn::Matrix forward_states(const nn::Matrix& state_features) const { return net.forward(state_features); }
};

nlohmann::json to_json(const Actor& actor);
Actor actor_from_json(const nlohmann::json& j);

struct LogEntry {
    long step = 0;
    double critic_loss = 0.0;
    double bc_loss = 0.0;
    double q_term = 0.0;
    double alpha = 0.0;
    std::optional<double> eval_return;
};

struct TrainLog {
    std::vector<LogEntry> entries;

    std::string to_csv() const;
};

/// Dense feature matrices for one dataset.
struct TransitionTable {
    nn::Matrix states;
    nn::Matrix actions;      ///< raw actions; discrete datasets hold the index in column 0
    nn::Matrix next_states;
    Eigen::VectorXd rewards; ///< zero when the dataset is unlabeled
    Eigen::VectorXd done;
    bool labeled = false;

    static TransitionTable build(const Demoset& ds, const FeatureSpec& features);
    Eigen::Index size() const { return states.rows(); }
};

/// A minibatch gathered from one or more tables.
struct SampledBatch {
    nn::Matrix states;
    nn::Matrix actions;
    nn::Matrix next_states;
    Eigen::VectorXd rewards;
    Eigen::VectorXd done;

    Eigen::Index size() const { return states.rows(); }
    static SampledBatch gather(const TransitionTable& table, const std::vector<Eigen::Index>& rows);
    static SampledBatch concat(const SampledBatch& a, const SampledBatch& b);
};

/// Gradient pieces of the most recent actor update.
struct ActorStepDetail {
    nn::Gradients g_bc;
    std::optional<nn::Gradients> g_q;
    double alpha = 0.0;
    nn::Gradients applied;
};

/// BCDP training state: actor, twin critics, delayed copies, optimizers.
///
/// With bc_on_union set, the BC term runs over expert and offline samples
/// together (the UDS comparator); otherwise over expert samples only.
class BcdpTrainer {
public:
    BcdpTrainer(const Demoset& expert, const Demoset& offline_labeled, const BcdpConfig& config,
                bool bc_on_union = false);

    /// One iteration; step numbers start at 1.
    LogEntry step();
    TrainLog train(const std::function<double(const Actor&)>& evaluator = {}, int eval_every = 0);

    /// y = r + (1 - done) * gamma * min_i Q_i'(s', a~) for the given batch.
    Eigen::VectorXd critic_target(const SampledBatch& batch);

    Actor actor() const;
    const nn::DenseNet& actor_net() const { return actor_; }
    const nn::DenseNet& critic(int i) const { return i == 0 ? critic1_ : critic2_; }
    const nn::DenseNet& actor_target() const { return actor_target_; }
    const nn::DenseNet& critic_target_net(int i) const { return i == 0 ? critic1_target_ : critic2_target_; }
    nn::DenseNet& mutable_critic(int i) { return i == 0 ? critic1_ : critic2_; }
    nn::DenseNet& mutable_critic_target(int i) { return i == 0 ? critic1_target_ : critic2_target_; }

    long steps_done() const { return step_; }
    long target_updates() const { return target_updates_; }
    const ActorStepDetail& last_actor_step() const { return last_actor_; }
    const FeatureSpec& features() const { return features_; }
    bool discrete() const { return discrete_; }
    const BcdpConfig& config() const { return config_; }
    /// Rewards of the offline half of the most recent batch.
    const Eigen::VectorXd& last_offline_rewards() const { return last_offline_rewards_; }
    Rng& rng() { return rng_; }

    /// Actor BC loss and its gradient on a batch of states/actions.
    nn::LossAndGrad bc_loss_and_grad(const SampledBatch& batch) const;
    /// l_q = -mean Q1(s, pi(s)) and its gradient w.r.t. actor parameters.
    nn::LossAndGrad q_loss_and_grad(const SampledBatch& batch) const;

    /// Critic input for (s, a) pairs (continuous critics only).
    nn::Matrix critic_input(const nn::Matrix& states, const nn::Matrix& actions) const;
    /// Q_i(s, a) for the batch's own actions.
    Eigen::VectorXd q_values(const nn::DenseNet& critic, const nn::Matrix& states, const nn::Matrix& actions) const;

private:
    SampledBatch sample(const TransitionTable& table, std::size_t n);
    double critic_update(const SampledBatch& batch, const Eigen::VectorXd& y, nn::DenseNet& critic,
                         nn::AdamState& adam);

    BcdpConfig config_;
    bool bc_on_union_;
    bool discrete_;
    double action_bound_;
    FeatureSpec features_;
    TransitionTable expert_;
    TransitionTable offline_;
    Rng rng_;
    nn::DenseNet actor_, actor_target_;
    nn::DenseNet critic1_, critic2_, critic1_target_, critic2_target_;
    nn::AdamState actor_adam_, critic1_adam_, critic2_adam_;
    long step_ = 0;
    long target_updates_ = 0;
    ActorStepDetail last_actor_;
    Eigen::VectorXd last_offline_rewards_;
};

struct TrainResult {
    Actor actor;
    TrainLog log;
    std::string rng_state; ///< sampler state after the last step
};

/// BCDP: expert labels 1, offline labels from the reward labeler (already attached).
TrainResult bcdp_train(const Demoset& expert, const Demoset& offline_labeled, const BcdpConfig& config,
                       const std::function<double(const Actor&)>& evaluator = {}, int eval_every = 0);

/// UDS: BC over the union, expert rewards 1 and offline rewards 0.
TrainResult uds_train(const Demoset& expert, const Demoset& offline, const BcdpConfig& config,
                      const std::function<double(const Actor&)>& evaluator = {}, int eval_every = 0);

struct BcConfig {
    int batch_size = 256;
    double lr = 1e-3;
    int training_steps = 10000;
    std::uint64_t seed = 0;
    std::vector<int> hidden = {64, 64};

    void validate() const;
};

/// Weighted BC. Samples are drawn in proportion to their weight (uniform when weights are absent),
/// so a zero weight removes a sample from training entirely.
TrainResult bc_train(const Demoset& data, const std::optional<std::vector<double>>& weights, const BcConfig& config,
                     const std::function<double(const Actor&)>& evaluator = {}, int eval_every = 0);

} // namespace bcdp
