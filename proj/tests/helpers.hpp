#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "bcdp/mdp.hpp"
#include "bcdp/rng.hpp"

namespace testing {

/// 4-state chain: action 0 moves right (state 3 absorbing), action 1 stays.
/// Only state 3 pays reward 1 (for both actions).
inline bcdp::TabularMDP chain4(double gamma = 0.9) {
    auto mdp = bcdp::TabularMDP::zeros(4, 2, gamma);
    for (int s = 0; s < 4; ++s) {
        mdp.p(s, 0, std::min(s + 1, 3)) = 1.0;
        mdp.p(s, 1, s) = 1.0;
    }
    mdp.r(3, 0) = 1.0;
    mdp.r(3, 1) = 1.0;
    mdp.initial_dist[0] = 1.0;
    return mdp;
}

/// Dense random MDP, generated independently of the library's instance generator.
inline bcdp::TabularMDP dense_random_mdp(std::uint64_t seed, int n, int a, double gamma) {
    bcdp::Rng rng(seed);
    auto mdp = bcdp::TabularMDP::zeros(n, a, gamma);
    for (int s = 0; s < n; ++s)
        for (int k = 0; k < a; ++k) {
            double total = 0.0;
            for (int t = 0; t < n; ++t) {
                mdp.p(s, k, t) = rng.uniform() + 1e-3;
                total += mdp.p(s, k, t);
            }
            for (int t = 0; t < n; ++t) mdp.p(s, k, t) /= total;
            mdp.r(s, k) = rng.uniform();
        }
    double total = 0.0;
    for (int s = 0; s < n; ++s) total += (mdp.initial_dist[s] = rng.uniform() + 1e-3);
    for (double& d : mdp.initial_dist) d /= total;
    return mdp;
}

inline int sample_from(const std::vector<double>& probs, bcdp::Rng& rng) {
    double u = rng.uniform(), acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
}

inline int sample_next(const bcdp::TabularMDP& mdp, int s, int a, bcdp::Rng& rng) {
    const auto row = mdp.row(s, a);
    return sample_from(std::vector<double>(row.begin(), row.end()), rng);
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("bcdp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing
