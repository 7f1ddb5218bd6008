#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcdp/maze.hpp"

namespace bcdp {

struct TransitionRecord {
    Vec s;
    Vec a;
    Vec s_next;
    bool done = false;
    std::optional<double> reward_label;

    friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

using Trajectory = std::vector<TransitionRecord>;

/// A set of trajectories from one environment and one behavior source.
///
/// `encoding` mirrors Environment::state_encoding(); for discrete data
/// `n_states`/`n_actions` size the one-hot features used by learners.
struct Demoset {
    std::string env_id;
    std::string policy_tag;
    std::uint64_t seed = 0;
    std::string encoding;
    int state_dim = 0;
    int action_dim = 0;
    int n_states = 0;
    int n_actions = 0;
    double action_bound = 1.0;
    std::vector<Trajectory> trajectories;

    std::size_t n_transitions() const;
    bool discrete_actions() const { return n_actions > 0; }
    bool labeled() const;

    /// Dimensions consistent, nonempty trajectories, labels in [0, 1].
    void validate() const;

    /// Header fields copied, no trajectories.
    Demoset empty_like() const;

    friend bool operator==(const Demoset&, const Demoset&) = default;
};

/// Header fields taken from the environment.
Demoset make_demoset(const Environment& env, std::string policy_tag, std::uint64_t seed);

/// Expert rollouts from reset until done or the horizon. Trajectory i uses seed + i.
Demoset generate_expert(const Environment& env, int n_traj, std::uint64_t seed);

/// Uniform-random-action rollouts, unlabeled.
Demoset generate_offline(const Environment& env, const std::string& policy_tag, int n_traj, std::uint64_t seed);

/// JSON Lines: one header object, then one object per transition.
void save_demoset(const Demoset& ds, const std::string& path);
std::string serialize_demoset(const Demoset& ds);
Demoset load_demoset(const std::string& path);
Demoset parse_demoset(const std::string& text);

struct DatasetStats {
    std::size_t n_transitions = 0;
    std::optional<double> mean_reward_label;
    double mean_traj_len = 0.0;
};

DatasetStats dataset_stats(const Demoset& ds);

/// Concatenates trajectories of compatible sets (header from the first).
Demoset merge(const Demoset& first, const Demoset& second);

/// 64-bit FNV-1a, used for dataset content hashes.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t value);

} // namespace bcdp
