#include "bcdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "bcdp/error.hpp"

namespace bcdp {

namespace {

constexpr double kSumTol = 1e-12;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix closed_loop(const TabularMDP& mdp, const TabularPolicy& policy) {
    const auto p = policy_transition_matrix(mdp, policy);
    const int n = mdp.n_states;
    Matrix m(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) m(s, t) = p[static_cast<std::size_t>(s) * n + t];
    return m;
}

} // namespace

TabularMDP TabularMDP::zeros(int n_states, int n_actions, double gamma) {
    if (n_states <= 0 || n_actions <= 0) throw StructuralError("MDP needs at least one state and one action");
    TabularMDP mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transition.assign(static_cast<std::size_t>(n_states) * n_actions * n_states, 0.0);
    mdp.reward.assign(static_cast<std::size_t>(n_states) * n_actions, 0.0);
    mdp.initial_dist.assign(static_cast<std::size_t>(n_states), 0.0);
    return mdp;
}

void TabularMDP::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw StructuralError("MDP needs at least one state and one action");
    const auto sa = static_cast<std::size_t>(n_states) * n_actions;
    if (transition.size() != sa * n_states) throw StructuralError("transition tensor has wrong size");
    if (reward.size() != sa) throw StructuralError("reward table has wrong size");
    if (initial_dist.size() != static_cast<std::size_t>(n_states))
        throw StructuralError("initial distribution has wrong size");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
    for (int s = 0; s < n_states; ++s) {
        for (int a = 0; a < n_actions; ++a) {
            double sum = 0.0;
            for (double q : row(s, a)) {
                if (!(q >= 0.0)) throw ValidationError("negative or NaN transition probability");
                sum += q;
            }
            if (std::abs(sum - 1.0) > kSumTol)
                throw ValidationError("transition row (" + std::to_string(s) + "," + std::to_string(a) +
                                      ") does not sum to 1");
            const double rew = r(s, a);
            if (!(rew >= 0.0 && rew <= 1.0)) throw ValidationError("reward outside [0, 1]");
        }
    }
    double total = 0.0;
    for (double q : initial_dist) {
        if (!(q >= 0.0)) throw ValidationError("negative initial probability");
        total += q;
    }
    if (std::abs(total - 1.0) > kSumTol) throw ValidationError("initial distribution does not sum to 1");
}

TabularPolicy TabularPolicy::deterministic(std::vector<int> actions, int n_actions) {
    TabularPolicy pi;
    pi.kind = Kind::deterministic;
    pi.n_actions = n_actions;
    pi.actions = std::move(actions);
    return pi;
}

TabularPolicy TabularPolicy::stochastic(std::vector<double> probs, int n_actions) {
    TabularPolicy pi;
    pi.kind = Kind::stochastic;
    pi.n_actions = n_actions;
    pi.probs = std::move(probs);
    return pi;
}

int TabularPolicy::n_states() const {
    if (is_deterministic()) return static_cast<int>(actions.size());
    return n_actions > 0 ? static_cast<int>(probs.size() / static_cast<std::size_t>(n_actions)) : 0;
}

double TabularPolicy::prob(int s, int a) const {
    if (is_deterministic()) return action(s) == a ? 1.0 : 0.0;
    return probs[static_cast<std::size_t>(s) * n_actions + a];
}

void TabularPolicy::validate(const TabularMDP& mdp) const {
    if (n_actions != mdp.n_actions) throw StructuralError("policy action count differs from MDP");
    if (is_deterministic()) {
        if (actions.size() != static_cast<std::size_t>(mdp.n_states))
            throw StructuralError("policy covers a different number of states than the MDP");
        for (int a : actions)
            if (a < 0 || a >= n_actions) throw StructuralError("policy action index out of range");
        return;
    }
    if (probs.size() != static_cast<std::size_t>(mdp.n_states) * n_actions)
        throw StructuralError("stochastic policy table has wrong size");
    for (int s = 0; s < mdp.n_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            const double q = prob(s, a);
            if (!(q >= 0.0)) throw ValidationError("negative action probability");
            sum += q;
        }
        if (std::abs(sum - 1.0) > kSumTol) throw ValidationError("policy row does not sum to 1");
    }
}

double StateOccupancy::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

std::vector<double> policy_transition_matrix(const TabularMDP& mdp, const TabularPolicy& policy) {
    policy.validate(mdp);
    const int n = mdp.n_states;
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double w = policy.prob(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.row(s, a);
            for (int t = 0; t < n; ++t) out[static_cast<std::size_t>(s) * n + t] += w * row[t];
        }
    }
    return out;
}

std::vector<double> policy_reward(const TabularMDP& mdp, const TabularPolicy& policy) {
    policy.validate(mdp);
    std::vector<double> out(static_cast<std::size_t>(mdp.n_states), 0.0);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) out[s] += policy.prob(s, a) * mdp.r(s, a);
    return out;
}

ValueVector bellman_backup(const TabularMDP& mdp, const TabularPolicy& policy, const ValueVector& values) {
    if (values.size() != static_cast<std::size_t>(mdp.n_states)) throw StructuralError("value vector has wrong size");
    policy.validate(mdp);
    ValueVector out(values.size(), 0.0);
    for (int s = 0; s < mdp.n_states; ++s) {
        double v = 0.0;
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double w = policy.prob(s, a);
            if (w == 0.0) continue;
            const auto row = mdp.row(s, a);
            double next = 0.0;
            for (int t = 0; t < mdp.n_states; ++t) next += row[t] * values[t];
            v += w * (mdp.r(s, a) + mdp.gamma * next);
        }
        out[s] = v;
    }
    return out;
}

namespace {

double action_value(const TabularMDP& mdp, const ValueVector& values, int s, int a) {
    const auto row = mdp.row(s, a);
    double next = 0.0;
    for (int t = 0; t < mdp.n_states; ++t) next += row[t] * values[t];
    return mdp.r(s, a) + mdp.gamma * next;
}

} // namespace

ValueVector bellman_optimality_backup(const TabularMDP& mdp, const ValueVector& values) {
    if (values.size() != static_cast<std::size_t>(mdp.n_states)) throw StructuralError("value vector has wrong size");
    ValueVector out(values.size());
    for (int s = 0; s < mdp.n_states; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.n_actions; ++a) best = std::max(best, action_value(mdp, values, s, a));
        out[s] = best;
    }
    return out;
}

TabularPolicy greedy_policy(const TabularMDP& mdp, const ValueVector& values, double tie_tol) {
    std::vector<int> actions(static_cast<std::size_t>(mdp.n_states), 0);
    for (int s = 0; s < mdp.n_states; ++s) {
        std::vector<double> q(static_cast<std::size_t>(mdp.n_actions));
        for (int a = 0; a < mdp.n_actions; ++a) q[a] = action_value(mdp, values, s, a);
        const double best = *std::max_element(q.begin(), q.end());
        for (int a = 0; a < mdp.n_actions; ++a) {
            if (q[a] >= best - tie_tol) {
                actions[s] = a;
                break;
            }
        }
    }
    return TabularPolicy::deterministic(std::move(actions), mdp.n_actions);
}

ValueVector policy_evaluation(const TabularMDP& mdp, const TabularPolicy& policy, double tol, SolveMethod method) {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    policy.validate(mdp);
    const int n = mdp.n_states;
    if (method == SolveMethod::linear_solve) {
        const Matrix p = closed_loop(mdp, policy);
        const auto r = policy_reward(mdp, policy);
        const Matrix a = Matrix::Identity(n, n) - mdp.gamma * p;
        const Vector v = a.partialPivLu().solve(Eigen::Map<const Vector>(r.data(), n));
        return ValueVector(v.data(), v.data() + n);
    }
    ValueVector v(static_cast<std::size_t>(n), 0.0);
    for (;;) {
        ValueVector next = bellman_backup(mdp, policy, v);
        const double residual = sup_norm_diff(next, v);
        v = std::move(next);
        // v is now B(v_old); its own residual is at most gamma * residual
        if (mdp.gamma * residual <= tol) return v;
    }
}

ValueIterationResult value_iteration(const TabularMDP& mdp, double tol) {
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    mdp.validate();
    ValueIterationResult result;
    result.values.assign(static_cast<std::size_t>(mdp.n_states), 0.0);
    // ||V_k - V*|| <= gamma/(1-gamma) ||V_k - V_{k-1}||
    const double stop = tol * (1.0 - mdp.gamma) / mdp.gamma;
    for (;;) {
        ValueVector next = bellman_optimality_backup(mdp, result.values);
        const double diff = sup_norm_diff(next, result.values);
        result.values = std::move(next);
        ++result.iterations;
        if (diff <= stop) break;
    }
    result.policy = greedy_policy(mdp, result.values);
    return result;
}

double expected_return(const TabularMDP& mdp, const TabularPolicy& policy, double tol) {
    const auto v = policy_evaluation(mdp, policy, tol);
    double j = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[s] * v[s];
    return j;
}

int truncation_horizon(double gamma, double tol) {
    // gamma^T / (1 - gamma) < tol
    const double t = std::log(tol * (1.0 - gamma)) / std::log(gamma);
    int horizon = std::max(1, static_cast<int>(std::floor(t)) - 1);
    while (std::pow(gamma, horizon) / (1.0 - gamma) >= tol) ++horizon;
    return horizon;
}

StateOccupancy discounted_occupancy(const TabularMDP& mdp, const TabularPolicy& policy,
                                    std::span<const double> start, double tol, SolveMethod method) {
    const int n = mdp.n_states;
    if (start.size() != static_cast<std::size_t>(n)) throw StructuralError("start distribution has wrong size");
    const double start_sum = std::accumulate(start.begin(), start.end(), 0.0);
    if (std::abs(start_sum - 1.0) > 1e-9) throw ValidationError("start distribution does not sum to 1");
    const Matrix p = closed_loop(mdp, policy);
    StateOccupancy occ;
    if (method == SolveMethod::linear_solve) {
        const Matrix a = (Matrix::Identity(n, n) - mdp.gamma * p).transpose();
        const Vector m = a.partialPivLu().solve(Eigen::Map<const Vector>(start.data(), n));
        occ.mass.assign(m.data(), m.data() + n);
        return occ;
    }
    const int horizon = truncation_horizon(mdp.gamma, tol);
    Vector dist = Eigen::Map<const Vector>(start.data(), n);
    Vector mass = Vector::Zero(n);
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
        mass += discount * dist;
        dist = p.transpose() * dist;
        discount *= mdp.gamma;
    }
    occ.mass.assign(mass.data(), mass.data() + n);
    return occ;
}

double sup_norm_diff(const ValueVector& a, const ValueVector& b) {
    if (a.size() != b.size()) throw StructuralError("vectors differ in length");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void to_json(nlohmann::json& j, const TabularMDP& mdp) {
    nlohmann::json transition = nlohmann::json::array();
    nlohmann::json reward = nlohmann::json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        nlohmann::json per_action = nlohmann::json::array();
        nlohmann::json rewards = nlohmann::json::array();
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto row = mdp.row(s, a);
            per_action.push_back(std::vector<double>(row.begin(), row.end()));
            rewards.push_back(mdp.r(s, a));
        }
        transition.push_back(std::move(per_action));
        reward.push_back(std::move(rewards));
    }
    j = nlohmann::json{{"n_states", mdp.n_states},   {"n_actions", mdp.n_actions},
                       {"gamma", mdp.gamma},         {"transition", std::move(transition)},
                       {"reward", std::move(reward)}, {"initial_dist", mdp.initial_dist}};
}

void from_json(const nlohmann::json& j, TabularMDP& mdp) {
    mdp = TabularMDP::zeros(j.at("n_states").get<int>(), j.at("n_actions").get<int>(), j.at("gamma").get<double>());
    const auto& transition = j.at("transition");
    const auto& reward = j.at("reward");
    if (transition.size() != static_cast<std::size_t>(mdp.n_states) ||
        reward.size() != static_cast<std::size_t>(mdp.n_states))
        throw StructuralError("MDP document has inconsistent state count");
    for (int s = 0; s < mdp.n_states; ++s) {
        if (transition[s].size() != static_cast<std::size_t>(mdp.n_actions) ||
            reward[s].size() != static_cast<std::size_t>(mdp.n_actions))
            throw StructuralError("MDP document has inconsistent action count");
        for (int a = 0; a < mdp.n_actions; ++a) {
            const auto row = transition[s][a].get<std::vector<double>>();
            if (row.size() != static_cast<std::size_t>(mdp.n_states))
                throw StructuralError("transition row has wrong length");
            std::copy(row.begin(), row.end(), mdp.transition.begin() + (static_cast<long>(s) * mdp.n_actions + a) * mdp.n_states);
            mdp.r(s, a) = reward[s][a].get<double>();
        }
    }
    mdp.initial_dist = j.at("initial_dist").get<std::vector<double>>();
    mdp.validate();
}

} // namespace bcdp
