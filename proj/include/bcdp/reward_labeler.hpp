#pragma once

#include <cstdint>

#include "bcdp/demoset.hpp"
#include "bcdp/nn.hpp"

namespace bcdp {

/// How a clipped density ratio is mapped into [0, 1].
enum class RescaleMode { linear_ratio, log_ratio };

std::string to_string(RescaleMode mode);
RescaleMode parse_rescale_mode(const std::string& text);

struct DiscriminatorConfig {
    int steps = 2000;
    int batch_size = 256; ///< per source; each step sees batch_size expert and batch_size offline samples
    double lr = 1e-3;
    std::vector<int> hidden = {64, 64};
    std::uint64_t seed = 0;
};

/// Feature layout shared by the discriminator and the learners.
///
/// Discrete data with an index encoding becomes a one-hot state; discrete
/// actions become one-hot actions. Continuous values pass through unchanged.
struct FeatureSpec {
    bool one_hot_state = false;
    bool one_hot_action = false;
    int state_dim = 0;      ///< raw state width
    int action_dim = 0;     ///< raw action width
    int n_states = 0;
    int n_actions = 0;
    /// Continuous states are written as (s - state_shift) / state_scale when these are set.
    Vec state_shift;
    Vec state_scale;

    static FeatureSpec from(const Demoset& ds);
    /// Per-dimension mean/std of continuous states over the given sets (std floored at 1e-3).
    void fit_normalization(const std::vector<const Demoset*>& sets);
    int state_width() const { return one_hot_state ? n_states : state_dim; }
    int action_width() const { return one_hot_action ? n_actions : action_dim; }

    void write_state(const Vec& s, nn::Matrix& out, Eigen::Index row, Eigen::Index col0 = 0) const;
    void write_action(const Vec& a, nn::Matrix& out, Eigen::Index row, Eigen::Index col0) const;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

nlohmann::json to_json(const FeatureSpec& f);
FeatureSpec features_from_json(const nlohmann::json& j);

struct Discriminator {
    nn::DenseNet net;
    FeatureSpec features;
    double clip_lo = 0.1;
    double clip_hi = 0.9;
    RescaleMode rescale = RescaleMode::linear_ratio;

    /// Raw sigmoid output c(s, a) in (0, 1).
    double raw(const Vec& s, const Vec& a) const;
    nn::Matrix raw_batch(const std::vector<const TransitionRecord*>& records) const;
};

/// Minimizes BCE with label 1 on expert and 0 on offline (s, a) pairs.
Discriminator train_discriminator(const Demoset& expert, const Demoset& offline, const DiscriminatorConfig& config);

/// rho = c / (1 - c) after clipping c to [0.1, 0.9]; throws for c outside (0, 1).
double density_ratio(double c_raw);

/// Maps a raw discriminator output to an offline reward in [0, 1], nondecreasing in c.
double rescale_ratio(double c_raw, RescaleMode mode = RescaleMode::linear_ratio);

enum class LabelSource { expert, offline };

struct RewardLabel {
    double value = 0.0;
    LabelSource source = LabelSource::offline;
};

RewardLabel label(const Discriminator& disc, const Vec& s, const Vec& a, LabelSource source);

/// Labeled copy of `offline` using the frozen discriminator.
Demoset label_offline(const Discriminator& disc, const Demoset& offline);

/// Labeled copy with every label set to `value` (1 for expert data, 0 for UDS).
Demoset label_constant(const Demoset& ds, double value);

nlohmann::json to_json(const Discriminator& disc);
Discriminator discriminator_from_json(const nlohmann::json& j);

} // namespace bcdp
