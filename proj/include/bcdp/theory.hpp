#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bcdp/mdp.hpp"
#include "bcdp/rng.hpp"

namespace bcdp::theory {

/// Sorted, duplicate-free list of state indices.
using StateSet = std::vector<int>;

std::vector<char> membership(int n_states, const StateSet& set);
StateSet complement(int n_states, const StateSet& set);

struct TheoryInstance {
    TabularMDP mdp;
    TabularPolicy expert_policy;
    StateSet expert_states;
    TabularPolicy eval_policy;
    int n_expert_traj = 0;
    int horizon = 0;
    std::uint64_t seed = 0;

    /// Deterministic policies of the right shape, eval agreeing with expert on expert_states.
    void validate() const;
};

struct ExpertSample {
    StateSet states;
    std::vector<std::vector<int>> trajectories;
};

/// States s_0 .. s_{horizon-1} of n_traj expert rollouts from d0.
ExpertSample sample_expert_dataset(const TabularMDP& mdp, const TabularPolicy& expert, int n_traj, int horizon,
                                   Rng& rng);

/// max over t <= t_max of the expert-distribution mass on states where the policies disagree.
double compute_epsilon(const TabularMDP& mdp, const TabularPolicy& expert, const TabularPolicy& eval, int t_max,
                       double tol = 1e-14);

/// W(s) = sum_{t>=1} gamma^t Pr(s_t in expert_states | s_0 = s), exact.
ValueVector recovery_values(const TabularMDP& mdp, const TabularPolicy& policy, const StateSet& expert_states);

/// min of W over from_states; absent when from_states is empty.
std::optional<double> compute_beta(const TabularMDP& mdp, const TabularPolicy& policy, const StateSet& expert_states,
                                   const StateSet& from_states);

/// States outside expert_states with positive one-step probability under the expert from inside.
StateSet compute_mis(const TabularMDP& mdp, const TabularPolicy& expert, const StateSet& expert_states);

/// Expert action on expert_states; elsewhere the completion maximizing W, ties to the lowest action.
TabularPolicy proposition1_policy(const TabularMDP& mdp, const TabularPolicy& expert, const StateSet& expert_states);

/// min r(s, expert(s)) over states with expert discounted occupancy above 1e-12.
double expert_reward_floor(const TabularMDP& mdp, const TabularPolicy& expert);

inline constexpr double kHoldTol = 1e-8;

struct TheoryReport {
    std::uint64_t seed = 0;
    int n_states = 0;
    double j_pi = 0.0;
    double j_expert = 0.0;
    double epsilon = 0.0;
    std::optional<double> beta;
    std::optional<double> beta_mis;
    double r_e = 0.0;
    int mis_size = 0;
    double lhs = 0.0;
    double rhs_theorem1 = 0.0;
    double rhs_lemma2 = 0.0;
    bool holds_theorem1 = false;
    bool holds_lemma2 = false;
    /// beta * R_E > 1: the sign step of the derivation does not apply.
    bool beta_re_flag = false;
    /// gamma * beta_Mis * R_E > 1: same condition for the restricted bound.
    bool beta_mis_re_flag = false;
};

/// Theorem-style bound and its Mis-restricted variant, computed exactly.
TheoryReport verify_instance(const TheoryInstance& inst, int t_max = 0);

/// Improvement-term helpers, exposed for identity checks.
double classical_rhs(double j_expert, double epsilon, double gamma);
double theorem1_rhs(double j_expert, double epsilon, double gamma, std::optional<double> beta, double r_e);
double lemma2_rhs(double j_expert, double epsilon, double gamma, std::optional<double> beta_mis, double r_e);

struct StateGapRecord {
    int state = 0;
    double gap = 0.0;             ///< V^expert(s) - V^pi(s)
    double outside_mass = 0.0;    ///< E over normalized expert occupancy from s of I[s~ not in D^E]
    double gamma = 0.0;

    double rhs(double factor) const { return factor / ((1.0 - gamma) * (1.0 - gamma)) * outside_mass; }
    bool holds(double factor) const { return gap <= rhs(factor) + kHoldTol; }
};

/// Per-state inequality on an expert-observed start state; throws if s is not in D^E.
StateGapRecord verify_state_gap(const TheoryInstance& inst, int s);

struct InstanceParams {
    int n_states = 20;
    int n_actions = 4;
    double gamma = 0.9;
    double sparsity = 0.7;   ///< fraction of zero entries per transition row
    int n_expert_traj = 3;
};

/// Seeded random MDP, optimal expert, sampled D^E, Proposition-1 completion.
TheoryInstance random_instance(std::uint64_t seed, const InstanceParams& params);

/// Random MDP and expert only (D^E empty, eval = expert); used for dataset redraw studies.
TheoryInstance random_mdp_with_expert(std::uint64_t seed, const InstanceParams& params);

nlohmann::json to_json(const TheoryInstance& inst);
std::uint64_t instance_hash(const TheoryInstance& inst);

struct SuiteConfig {
    int instances = 200;
    InstanceParams params;
    std::uint64_t seed = 1;
};

/// Instance i uses seed + i; reports in seed order.
std::vector<TheoryReport> run_suite(const SuiteConfig& config);

/// true when the report passes every assertion that is not excluded by a flag.
bool report_passes(const TheoryReport& r);

std::string report_csv_header();
std::string report_csv_row(const TheoryReport& r);

} // namespace bcdp::theory
