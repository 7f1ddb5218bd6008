#include "bcdp/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <Eigen/Dense>

#include "bcdp/demoset.hpp"
#include "bcdp/error.hpp"

namespace bcdp::theory {

namespace {

constexpr double kTieTol = 1e-12;

Eigen::MatrixXd closed_loop(const TabularMDP& mdp, const TabularPolicy& policy) {
    const auto p = policy_transition_matrix(mdp, policy);
    const int n = mdp.n_states;
    Eigen::MatrixXd m(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = 0; t < n; ++t) m(s, t) = p[static_cast<std::size_t>(s) * n + t];
    return m;
}

void require_deterministic(const TabularMDP& mdp, const TabularPolicy& pi, const char* what) {
    if (!pi.is_deterministic()) throw StructuralError(std::string(what) + " must be deterministic");
    pi.validate(mdp);
}

int sample_index(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    int last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    return last;
}

// One-step continuation value under the auxiliary objective W.
double aux_q(const TabularMDP& mdp, const std::vector<char>& in_set, const ValueVector& w, int s, int a) {
    double q = 0.0;
    const auto row = mdp.row(s, a);
    for (int t = 0; t < mdp.n_states; ++t)
        if (row[static_cast<std::size_t>(t)] > 0.0)
            q += row[static_cast<std::size_t>(t)] * (static_cast<double>(in_set[static_cast<std::size_t>(t)]) + w[static_cast<std::size_t>(t)]);
    return mdp.gamma * q;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Sparse Dirichlet(1) row over k distinct random support points.
void random_row(Rng& rng, int n, int k, std::span<double> out) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < k; ++i) std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(i) + rng.index(static_cast<std::size_t>(n - i))]);
    std::fill(out.begin(), out.end(), 0.0);
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const double g = rng.gamma(1.0);
        out[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = g;
        total += g;
    }
    if (!(total > 0.0)) {
        out[static_cast<std::size_t>(idx[0])] = 1.0;
        return;
    }
    for (double& v : out) v /= total;
}

} // namespace

std::vector<char> membership(int n_states, const StateSet& set) {
    std::vector<char> m(static_cast<std::size_t>(n_states), 0);
    for (int s : set) {
        if (s < 0 || s >= n_states) throw StructuralError("state index out of range");
        m[static_cast<std::size_t>(s)] = 1;
    }
    return m;
}

StateSet complement(int n_states, const StateSet& set) {
    const auto m = membership(n_states, set);
    StateSet out;
    for (int s = 0; s < n_states; ++s)
        if (!m[static_cast<std::size_t>(s)]) out.push_back(s);
    return out;
}

void TheoryInstance::validate() const {
    mdp.validate();
    require_deterministic(mdp, expert_policy, "expert policy");
    require_deterministic(mdp, eval_policy, "evaluation policy");
    for (int s : expert_states) {
        if (s < 0 || s >= mdp.n_states) throw ValidationError("expert state out of range");
        if (eval_policy.action(s) != expert_policy.action(s))
            throw ValidationError("evaluation policy disagrees with the expert on expert-observed state " +
                                  std::to_string(s));
    }
    if (!std::is_sorted(expert_states.begin(), expert_states.end()) ||
        std::adjacent_find(expert_states.begin(), expert_states.end()) != expert_states.end())
        throw ValidationError("expert state set must be sorted and duplicate-free");
}

ExpertSample sample_expert_dataset(const TabularMDP& mdp, const TabularPolicy& expert, int n_traj, int horizon,
                                   Rng& rng) {
    require_deterministic(mdp, expert, "expert policy");
    if (n_traj < 1) throw ValidationError("at least one expert trajectory is required");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
    ExpertSample out;
    std::vector<char> seen(static_cast<std::size_t>(mdp.n_states), 0);
    for (int i = 0; i < n_traj; ++i) {
        std::vector<int> traj;
        int s = sample_index(mdp.initial_dist, rng);
        for (int t = 0; t < horizon; ++t) {
            traj.push_back(s);
            seen[static_cast<std::size_t>(s)] = 1;
            if (t + 1 < horizon) s = sample_index(mdp.row(s, expert.action(s)), rng);
        }
        out.trajectories.push_back(std::move(traj));
    }
    for (int s = 0; s < mdp.n_states; ++s)
        if (seen[static_cast<std::size_t>(s)]) out.states.push_back(s);
    return out;
}

double compute_epsilon(const TabularMDP& mdp, const TabularPolicy& expert, const TabularPolicy& eval, int t_max,
                       double tol) {
    require_deterministic(mdp, expert, "expert policy");
    require_deterministic(mdp, eval, "evaluation policy");
    if (t_max < 1) throw ValidationError("t_max must be at least 1");
    const int n = mdp.n_states;
    const Eigen::MatrixXd p = closed_loop(mdp, expert);
    Eigen::RowVectorXd d(n);
    Eigen::RowVectorXd disagree(n);
    for (int s = 0; s < n; ++s) {
        d(s) = mdp.initial_dist[static_cast<std::size_t>(s)];
        disagree(s) = expert.action(s) != eval.action(s) ? 1.0 : 0.0;
    }
    double eps = 0.0;
    for (int t = 0; t <= t_max; ++t) {
        eps = std::max(eps, d.dot(disagree));
        Eigen::RowVectorXd next = d * p;
        const double tv = 0.5 * (next - d).lpNorm<1>();
        d = std::move(next);
        if (tv < tol) {
            eps = std::max(eps, d.dot(disagree));
            break;
        }
    }
    return std::clamp(eps, 0.0, 1.0);
}

ValueVector recovery_values(const TabularMDP& mdp, const TabularPolicy& policy, const StateSet& expert_states) {
    policy.validate(mdp);
    const int n = mdp.n_states;
    const auto in_set = membership(n, expert_states);
    const Eigen::MatrixXd p = closed_loop(mdp, policy);
    Eigen::VectorXd indicator(n);
    for (int s = 0; s < n; ++s) indicator(s) = in_set[static_cast<std::size_t>(s)];
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - mdp.gamma * p;
    const Eigen::VectorXd w = a.partialPivLu().solve(mdp.gamma * (p * indicator));
    ValueVector out(static_cast<std::size_t>(n));
    const double hi = mdp.gamma / (1.0 - mdp.gamma);
    for (int s = 0; s < n; ++s) out[static_cast<std::size_t>(s)] = std::clamp(w(s), 0.0, hi);
    return out;
}

std::optional<double> compute_beta(const TabularMDP& mdp, const TabularPolicy& policy, const StateSet& expert_states,
                                   const StateSet& from_states) {
    if (from_states.empty()) return std::nullopt;
    const auto w = recovery_values(mdp, policy, expert_states);
    double beta = std::numeric_limits<double>::infinity();
    for (int s : from_states) beta = std::min(beta, w.at(static_cast<std::size_t>(s)));
    return beta;
}

StateSet compute_mis(const TabularMDP& mdp, const TabularPolicy& expert, const StateSet& expert_states) {
    require_deterministic(mdp, expert, "expert policy");
    const auto in_set = membership(mdp.n_states, expert_states);
    std::vector<char> hit(static_cast<std::size_t>(mdp.n_states), 0);
    for (int s : expert_states) {
        const auto row = mdp.row(s, expert.action(s));
        for (int t = 0; t < mdp.n_states; ++t)
            if (row[static_cast<std::size_t>(t)] > 0.0 && !in_set[static_cast<std::size_t>(t)]) hit[static_cast<std::size_t>(t)] = 1;
    }
    StateSet out;
    for (int s = 0; s < mdp.n_states; ++s)
        if (hit[static_cast<std::size_t>(s)]) out.push_back(s);
    return out;
}

TabularPolicy proposition1_policy(const TabularMDP& mdp, const TabularPolicy& expert, const StateSet& expert_states) {
    require_deterministic(mdp, expert, "expert policy");
    const int n = mdp.n_states;
    const auto in_set = membership(n, expert_states);
    std::vector<int> actions(static_cast<std::size_t>(n), 0);
    for (int s : expert_states) actions[static_cast<std::size_t>(s)] = expert.action(s);
    TabularPolicy pi = TabularPolicy::deterministic(actions, mdp.n_actions);

    // Policy iteration on the auxiliary objective; only strict improvements switch actions.
    for (int iter = 0; iter < 10 * n * mdp.n_actions + 100; ++iter) {
        const auto w = recovery_values(mdp, pi, expert_states);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            if (in_set[static_cast<std::size_t>(s)]) continue;
            const int current = pi.actions[static_cast<std::size_t>(s)];
            const double q_current = aux_q(mdp, in_set, w, s, current);
            int best = current;
            double q_best = q_current;
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double q = aux_q(mdp, in_set, w, s, a);
                if (q > q_best + kTieTol) {
                    q_best = q;
                    best = a;
                }
            }
            if (best != current) {
                pi.actions[static_cast<std::size_t>(s)] = best;
                changed = true;
            }
        }
        if (!changed) break;
    }

    // Among actions tied with the optimum, take the lowest index.
    const auto w = recovery_values(mdp, pi, expert_states);
    for (int s = 0; s < n; ++s) {
        if (in_set[static_cast<std::size_t>(s)]) continue;
        double q_best = -1.0;
        for (int a = 0; a < mdp.n_actions; ++a) q_best = std::max(q_best, aux_q(mdp, in_set, w, s, a));
        for (int a = 0; a < mdp.n_actions; ++a) {
            if (aux_q(mdp, in_set, w, s, a) >= q_best - kTieTol) {
                pi.actions[static_cast<std::size_t>(s)] = a;
                break;
            }
        }
    }
    return pi;
}

double expert_reward_floor(const TabularMDP& mdp, const TabularPolicy& expert) {
    require_deterministic(mdp, expert, "expert policy");
    const auto occ = discounted_occupancy(mdp, expert, mdp.initial_dist);
    double floor = 1.0;
    bool any = false;
    for (int s = 0; s < mdp.n_states; ++s) {
        if (occ.mass[static_cast<std::size_t>(s)] > 1e-12) {
            floor = std::min(floor, mdp.r(s, expert.action(s)));
            any = true;
        }
    }
    return any ? floor : 0.0;
}

double classical_rhs(double j_expert, double epsilon, double gamma) {
    return j_expert - epsilon / ((1.0 - gamma) * (1.0 - gamma));
}

double theorem1_rhs(double j_expert, double epsilon, double gamma, std::optional<double> beta, double r_e) {
    double rhs = classical_rhs(j_expert, epsilon, gamma);
    if (beta) rhs += epsilon / (1.0 - gamma) * *beta * r_e;
    return rhs;
}

double lemma2_rhs(double j_expert, double epsilon, double gamma, std::optional<double> beta_mis, double r_e) {
    double rhs = classical_rhs(j_expert, epsilon, gamma);
    if (beta_mis) rhs += gamma * epsilon / (1.0 - gamma) * *beta_mis * r_e;
    return rhs;
}

TheoryReport verify_instance(const TheoryInstance& inst, int t_max) {
    inst.validate();
    const auto& mdp = inst.mdp;
    if (t_max <= 0) t_max = 10 * mdp.n_states;
    TheoryReport r;
    r.seed = inst.seed;
    r.n_states = mdp.n_states;
    r.j_pi = expected_return(mdp, inst.eval_policy, 1e-12);
    r.j_expert = expected_return(mdp, inst.expert_policy, 1e-12);
    r.epsilon = compute_epsilon(mdp, inst.expert_policy, inst.eval_policy, t_max);
    r.beta = compute_beta(mdp, inst.eval_policy, inst.expert_states, complement(mdp.n_states, inst.expert_states));
    const StateSet mis = compute_mis(mdp, inst.expert_policy, inst.expert_states);
    r.mis_size = static_cast<int>(mis.size());
    r.beta_mis = compute_beta(mdp, inst.eval_policy, inst.expert_states, mis);
    r.r_e = expert_reward_floor(mdp, inst.expert_policy);
    r.lhs = r.j_pi;
    r.rhs_theorem1 = theorem1_rhs(r.j_expert, r.epsilon, mdp.gamma, r.beta, r.r_e);
    r.rhs_lemma2 = lemma2_rhs(r.j_expert, r.epsilon, mdp.gamma, r.beta_mis, r.r_e);
    r.holds_theorem1 = r.lhs >= r.rhs_theorem1 - kHoldTol;
    r.holds_lemma2 = r.lhs >= r.rhs_lemma2 - kHoldTol;
    r.beta_re_flag = r.beta && *r.beta * r.r_e > 1.0;
    r.beta_mis_re_flag = r.beta_mis && mdp.gamma * *r.beta_mis * r.r_e > 1.0;
    return r;
}

StateGapRecord verify_state_gap(const TheoryInstance& inst, int s) {
    inst.validate();
    const auto& mdp = inst.mdp;
    const auto in_set = membership(mdp.n_states, inst.expert_states);
    if (s < 0 || s >= mdp.n_states || !in_set[static_cast<std::size_t>(s)])
        throw ValidationError("state " + std::to_string(s) + " is not expert-observed");
    const auto v_expert = policy_evaluation(mdp, inst.expert_policy, 1e-12);
    const auto v_pi = policy_evaluation(mdp, inst.eval_policy, 1e-12);
    std::vector<double> start(static_cast<std::size_t>(mdp.n_states), 0.0);
    start[static_cast<std::size_t>(s)] = 1.0;
    const auto occ = discounted_occupancy(mdp, inst.expert_policy, start);
    StateGapRecord rec;
    rec.state = s;
    rec.gamma = mdp.gamma;
    rec.gap = v_expert[static_cast<std::size_t>(s)] - v_pi[static_cast<std::size_t>(s)];
    double outside = 0.0;
    for (int t = 0; t < mdp.n_states; ++t)
        if (!in_set[static_cast<std::size_t>(t)]) outside += occ.mass[static_cast<std::size_t>(t)];
    rec.outside_mass = (1.0 - mdp.gamma) * outside;
    return rec;
}

TheoryInstance random_mdp_with_expert(std::uint64_t seed, const InstanceParams& params) {
    if (params.n_states < 2 || params.n_actions < 2) throw ValidationError("instances need at least 2 states and 2 actions");
    if (!(params.sparsity >= 0.0 && params.sparsity < 1.0)) throw ValidationError("sparsity must lie in [0, 1)");
    const int n = params.n_states;
    Rng rng(seed);
    TheoryInstance inst;
    inst.seed = seed;
    inst.mdp = TabularMDP::zeros(n, params.n_actions, params.gamma);
    const int k = std::max(1, n - static_cast<int>(std::lround(params.sparsity * n)));
    for (int s = 0; s < n; ++s)
        for (int a = 0; a < params.n_actions; ++a) {
            std::span<double> row(inst.mdp.transition.data() + (static_cast<std::size_t>(s) * params.n_actions + a) * n,
                                  static_cast<std::size_t>(n));
            random_row(rng, n, k, row);
        }
    for (double& r : inst.mdp.reward) r = rng.uniform();
    random_row(rng, n, std::max(1, n / 5), inst.mdp.initial_dist);
    inst.expert_policy = value_iteration(inst.mdp, 1e-12).policy;
    inst.eval_policy = inst.expert_policy;
    inst.horizon = n;
    return inst;
}

TheoryInstance random_instance(std::uint64_t seed, const InstanceParams& params) {
    TheoryInstance inst = random_mdp_with_expert(seed, params);
    Rng rng(derive_seed(seed, 1));
    inst.n_expert_traj = params.n_expert_traj;
    inst.expert_states =
        sample_expert_dataset(inst.mdp, inst.expert_policy, params.n_expert_traj, inst.horizon, rng).states;
    inst.eval_policy = proposition1_policy(inst.mdp, inst.expert_policy, inst.expert_states);
    return inst;
}

nlohmann::json to_json(const TheoryInstance& inst) {
    nlohmann::json mdp;
    bcdp::to_json(mdp, inst.mdp);
    return {{"seed", inst.seed},
            {"mdp", mdp},
            {"expert_policy", inst.expert_policy.actions},
            {"eval_policy", inst.eval_policy.actions},
            {"expert_states", inst.expert_states},
            {"n_expert_traj", inst.n_expert_traj},
            {"horizon", inst.horizon}};
}

std::uint64_t instance_hash(const TheoryInstance& inst) { return fnv1a(to_json(inst).dump()); }

std::vector<TheoryReport> run_suite(const SuiteConfig& config) {
    if (config.instances < 1) throw ValidationError("instance count must be positive");
    std::vector<TheoryReport> out;
    out.reserve(static_cast<std::size_t>(config.instances));
    for (int i = 0; i < config.instances; ++i)
        out.push_back(verify_instance(random_instance(config.seed + static_cast<std::uint64_t>(i), config.params)));
    return out;
}

bool report_passes(const TheoryReport& r) {
    return (r.holds_theorem1 || r.beta_re_flag) && (r.holds_lemma2 || r.beta_mis_re_flag);
}

std::string report_csv_header() {
    return "seed,n_states,epsilon,beta,r_e,j_pi,j_expert,rhs_t1,rhs_l2,holds_t1,holds_l2,beta_re_flag";
}

std::string report_csv_row(const TheoryReport& r) {
    std::string row = std::to_string(r.seed) + "," + std::to_string(r.n_states) + "," + fmt(r.epsilon) + ",";
    if (r.beta) row += fmt(*r.beta);
    row += "," + fmt(r.r_e) + "," + fmt(r.j_pi) + "," + fmt(r.j_expert) + "," + fmt(r.rhs_theorem1) + "," +
           fmt(r.rhs_lemma2) + "," + (r.holds_theorem1 ? "1" : "0") + "," + (r.holds_lemma2 ? "1" : "0") + "," +
           (r.beta_re_flag ? "1" : "0");
    return row;
}

} // namespace bcdp::theory
