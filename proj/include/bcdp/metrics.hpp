#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bcdp/maze.hpp"

namespace bcdp::metrics {

/// A closed-loop controller. The Rng is only consumed by stochastic policies.
using Policy = std::function<Vec(const Vec& state, Rng& rng)>;

Policy expert_policy(const Environment& env);
Policy random_policy(const Environment& env);

struct EvalResult {
    double mean_return = 0.0;
    double std_error = 0.0;
    int episodes = 0;
    std::optional<double> normalized;
    std::vector<double> returns;
};

inline constexpr int kDefaultEpisodes = 30;

/// Undiscounted return over the full horizon. Episode i is seeded with derive_seed(seed, i).
EvalResult rollout_eval(const Environment& env, const Policy& policy, int episodes, std::uint64_t seed);

/// 100 * (raw - random) / (expert - random).
double normalized_score(double raw, double random_ref, double expert_ref);

struct ReferenceScores {
    double random_ref = 0.0;
    double expert_ref = 0.0;
};

ReferenceScores reference_scores(const Environment& env, std::uint64_t seed, int episodes = kDefaultEpisodes);

/// Euclidean distance to the nearest point; throws on an empty point set.
double ood_distance(const Vec& query, const std::vector<Vec>& points);

/// Bucketed nearest-neighbor search over 2-D points; returns the same value as ood_distance.
class GridIndex {
public:
    explicit GridIndex(std::vector<Vec> points, double cell_size = 0.5);
    double distance(const Vec& query) const;

private:
    std::vector<Vec> points_;
    double cell_;
    double min_x_ = 0.0;
    double min_y_ = 0.0;
    int nx_ = 1;
    int ny_ = 1;
    std::vector<std::vector<int>> buckets_;
};

struct DrgSample {
    double ood_distance = 0.0;
    double drg = 0.0;
    Vec state;
};

/// Rolls out n_traj episodes (stopping at done) and emits, per transition (s, s'),
/// {dist(s), dist(s) - dist(s')} with distances measured on env.position().
std::vector<DrgSample> drg_analysis(const Environment& env, const Policy& policy,
                                    const std::vector<Vec>& expert_positions, int n_traj, std::uint64_t seed);

/// Mean drg over samples whose ood_distance is strictly above the median ood_distance.
std::optional<double> mean_drg_above_median(const std::vector<DrgSample>& samples);

struct BinRow {
    double lo = 0.0;
    double hi = 0.0;
    double center = 0.0;
    std::size_t count = 0;
    std::optional<double> mean_drg;
};

/// Equal-width bins over [0, max ood_distance].
std::vector<BinRow> binned_report(const std::vector<DrgSample>& samples, int n_bins);

std::string eval_csv(const EvalResult& r);
std::string drg_csv(const std::vector<DrgSample>& samples);
std::string binned_csv(const std::vector<BinRow>& rows);

/// %.17g, so values reload exactly.
std::string format_double(double v);

} // namespace bcdp::metrics
