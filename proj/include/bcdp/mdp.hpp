#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bcdp {

using ValueVector = std::vector<double>;

/// Finite discounted MDP with dense transition tensor.
///
/// `transition` is indexed [s][a][s'] and flattened row-major; `reward` is
/// indexed [s][a]. Rewards are expected in [0, 1].
struct TabularMDP {
    int n_states = 0;
    int n_actions = 0;
    std::vector<double> transition;
    std::vector<double> reward;
    std::vector<double> initial_dist;
    double gamma = 0.9;

    static TabularMDP zeros(int n_states, int n_actions, double gamma);

    double& p(int s, int a, int next) { return transition[index(s, a) * n_states + next]; }
    double p(int s, int a, int next) const { return transition[index(s, a) * n_states + next]; }
    double& r(int s, int a) { return reward[index(s, a)]; }
    double r(int s, int a) const { return reward[index(s, a)]; }

    /// Successor distribution T(. | s, a).
    std::span<const double> row(int s, int a) const {
        return {transition.data() + index(s, a) * n_states, static_cast<std::size_t>(n_states)};
    }

    /// Throws StructuralError on shape problems and ValidationError when a
    /// probability row, reward, or discount is out of range.
    void validate() const;

private:
    std::size_t index(int s, int a) const { return static_cast<std::size_t>(s) * n_actions + a; }
};

/// Deterministic (one action per state) or stochastic (action distribution per state) policy.
struct TabularPolicy {
    enum class Kind { deterministic, stochastic };

    Kind kind = Kind::deterministic;
    int n_actions = 0;
    std::vector<int> actions;        // deterministic
    std::vector<double> probs;       // stochastic, [s][a]

    static TabularPolicy deterministic(std::vector<int> actions, int n_actions);
    static TabularPolicy stochastic(std::vector<double> probs, int n_actions);

    int n_states() const;
    bool is_deterministic() const { return kind == Kind::deterministic; }
    double prob(int s, int a) const;
    int action(int s) const { return actions.at(static_cast<std::size_t>(s)); }

    void validate(const TabularMDP& mdp) const;
};

struct StateOccupancy {
    std::vector<double> mass;

    double total() const;
};

enum class SolveMethod { linear_solve, iterative };

/// Closed-loop quantities under a policy: P_pi[s][s'] and r_pi[s].
std::vector<double> policy_transition_matrix(const TabularMDP& mdp, const TabularPolicy& policy);
std::vector<double> policy_reward(const TabularMDP& mdp, const TabularPolicy& policy);

/// One application of B^pi.
ValueVector bellman_backup(const TabularMDP& mdp, const TabularPolicy& policy, const ValueVector& values);

/// One application of the Bellman optimality operator.
ValueVector bellman_optimality_backup(const TabularMDP& mdp, const ValueVector& values);

/// Greedy policy w.r.t. `values`; ties go to the lowest action index.
TabularPolicy greedy_policy(const TabularMDP& mdp, const ValueVector& values, double tie_tol = 1e-12);

ValueVector policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy, double tol = 1e-10,
                              SolveMethod method = SolveMethod::linear_solve);

struct ValueIterationResult {
    ValueVector values;
    TabularPolicy policy;
    int iterations = 0;
};

ValueIterationResult value_iteration(const TabularMDP& mdp, double tol = 1e-10);

/// J(pi) = d0 . V^pi.
double expected_return(const TabularMDP& mdp, const TabularPolicy& policy, double tol = 1e-10);

/// mass[s'] = sum_t gamma^t Pr(s_t = s' | s_0 ~ start, pi).
StateOccupancy discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& policy,
                                    std::span<const double> start, double tol = 1e-10,
                                    SolveMethod method = SolveMethod::linear_solve);

/// Smallest T with gamma^T / (1 - gamma) < tol.
int truncation_horizon(double gamma, double tol);

double sup_norm_diff(const ValueVector& a, const ValueVector& b);

void to_json(nlohmann::json& j, const TabularMDP& mdp);
void from_json(const nlohmann::json& j, TabularMDP& mdp);

} // namespace bcdp
