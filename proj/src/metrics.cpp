#include "bcdp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "bcdp/error.hpp"

namespace bcdp::metrics {

Policy expert_policy(const Environment& env) {
    return [&env](const Vec& s, Rng&) { return env.expert_action(s); };
}

Policy random_policy(const Environment& env) {
    return [&env](const Vec&, Rng& rng) { return env.random_action(rng); };
}

EvalResult rollout_eval(const Environment& env, const Policy& policy, int episodes, std::uint64_t seed) {
    if (episodes < 1) throw ValidationError("episodes must be at least 1");
    EvalResult out;
    out.episodes = episodes;
    for (int i = 0; i < episodes; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        Vec s = env.reset(rng);
        double total = 0.0;
        for (int t = 0; t < env.horizon(); ++t) {
            EnvStep step = env.step(s, policy(s, rng));
            total += step.reward;
            s = std::move(step.next_state);
        }
        out.returns.push_back(total);
    }
    double sum = 0.0;
    for (double r : out.returns) sum += r;
    out.mean_return = sum / episodes;
    if (episodes > 1) {
        double sq = 0.0;
        for (double r : out.returns) sq += (r - out.mean_return) * (r - out.mean_return);
        out.std_error = std::sqrt(sq / (episodes - 1)) / std::sqrt(static_cast<double>(episodes));
    }
    return out;
}

double normalized_score(double raw, double random_ref, double expert_ref) {
    if (!(std::abs(expert_ref - random_ref) > 0.0)) throw ValidationError("expert and random references coincide");
    return 100.0 * (raw - random_ref) / (expert_ref - random_ref);
}

ReferenceScores reference_scores(const Environment& env, std::uint64_t seed, int episodes) {
    return {rollout_eval(env, random_policy(env), episodes, seed).mean_return,
            rollout_eval(env, expert_policy(env), episodes, seed).mean_return};
}

namespace {

double euclid(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw StructuralError("distance between vectors of different length");
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sq);
}

} // namespace

double ood_distance(const Vec& query, const std::vector<Vec>& points) {
    if (points.empty()) throw ValidationError("expert state list is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, euclid(query, p));
    return best;
}

GridIndex::GridIndex(std::vector<Vec> points, double cell_size) : points_(std::move(points)), cell_(cell_size) {
    if (points_.empty()) throw ValidationError("expert state list is empty");
    if (!(cell_ > 0.0)) throw ValidationError("cell size must be positive");
    double max_x = -std::numeric_limits<double>::infinity(), max_y = max_x;
    min_x_ = min_y_ = std::numeric_limits<double>::infinity();
    for (const auto& p : points_) {
        if (p.size() != 2) throw StructuralError("grid index needs 2-D points");
        min_x_ = std::min(min_x_, p[0]);
        min_y_ = std::min(min_y_, p[1]);
        max_x = std::max(max_x, p[0]);
        max_y = std::max(max_y, p[1]);
    }
    nx_ = static_cast<int>((max_x - min_x_) / cell_) + 1;
    ny_ = static_cast<int>((max_y - min_y_) / cell_) + 1;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const int bx = std::min(nx_ - 1, static_cast<int>((points_[i][0] - min_x_) / cell_));
        const int by = std::min(ny_ - 1, static_cast<int>((points_[i][1] - min_y_) / cell_));
        buckets_[static_cast<std::size_t>(by) * nx_ + bx].push_back(static_cast<int>(i));
    }
}

double GridIndex::distance(const Vec& query) const {
    if (query.size() != 2) throw StructuralError("grid index queries must be 2-D");
    // Bucket coordinates of the query, possibly outside the grid.
    const auto qx = static_cast<long>(std::floor((query[0] - min_x_) / cell_));
    const auto qy = static_cast<long>(std::floor((query[1] - min_y_) / cell_));
    double best = std::numeric_limits<double>::infinity();
    const long max_ring = std::max<long>({std::abs(qx) + nx_, std::abs(qy) + ny_}) + 1;
    for (long ring = 0; ring <= max_ring; ++ring) {
        for (long by = qy - ring; by <= qy + ring; ++by) {
            if (by < 0 || by >= ny_) continue;
            for (long bx = qx - ring; bx <= qx + ring; ++bx) {
                if (bx < 0 || bx >= nx_) continue;
                if (std::max(std::abs(bx - qx), std::abs(by - qy)) != ring) continue;
                for (int idx : buckets_[static_cast<std::size_t>(by) * nx_ + bx])
                    best = std::min(best, euclid(query, points_[static_cast<std::size_t>(idx)]));
            }
        }
        // Anything in a farther ring is at least ring * cell away.
        if (best <= static_cast<double>(ring) * cell_) break;
    }
    return best;
}

std::vector<DrgSample> drg_analysis(const Environment& env, const Policy& policy,
                                    const std::vector<Vec>& expert_positions, int n_traj, std::uint64_t seed) {
    if (n_traj < 1) throw ValidationError("n_traj must be at least 1");
    if (expert_positions.empty()) throw ValidationError("expert state list is empty");
    const bool planar = expert_positions.front().size() == 2;
    std::optional<GridIndex> index;
    if (planar) index.emplace(expert_positions);
    auto dist = [&](const Vec& s) {
        const Vec p = env.position(s);
        return index ? index->distance(p) : ood_distance(p, expert_positions);
    };
    std::vector<DrgSample> out;
    for (int i = 0; i < n_traj; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        Vec s = env.reset(rng);
        double d = dist(s);
        for (int t = 0; t < env.horizon(); ++t) {
            EnvStep step = env.step(s, policy(s, rng));
            const double d_next = dist(step.next_state);
            out.push_back({d, d - d_next, env.position(s)});
            s = std::move(step.next_state);
            d = d_next;
            if (step.done) break;
        }
    }
    return out;
}

std::optional<double> mean_drg_above_median(const std::vector<DrgSample>& samples) {
    if (samples.empty()) return std::nullopt;
    std::vector<double> d;
    for (const auto& s : samples) d.push_back(s.ood_distance);
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    const double median = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : samples)
        if (s.ood_distance > median) {
            sum += s.drg;
            ++count;
        }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

std::vector<BinRow> binned_report(const std::vector<DrgSample>& samples, int n_bins) {
    if (samples.empty()) throw ValidationError("no samples to bin");
    if (n_bins < 1) throw ValidationError("n_bins must be at least 1");
    double max_d = 0.0;
    for (const auto& s : samples) max_d = std::max(max_d, s.ood_distance);
    const double width = max_d > 0.0 ? max_d / n_bins : 1.0;
    std::vector<BinRow> rows(static_cast<std::size_t>(n_bins));
    std::vector<double> sums(static_cast<std::size_t>(n_bins), 0.0);
    for (int b = 0; b < n_bins; ++b) {
        auto& row = rows[static_cast<std::size_t>(b)];
        row.lo = b * width;
        row.hi = b + 1 == n_bins && max_d > 0.0 ? max_d : (b + 1) * width;
        row.center = 0.5 * (row.lo + row.hi);
    }
    for (const auto& s : samples) {
        const auto b = std::min(n_bins - 1, static_cast<int>(s.ood_distance / width));
        rows[static_cast<std::size_t>(b)].count++;
        sums[static_cast<std::size_t>(b)] += s.drg;
    }
    for (std::size_t b = 0; b < rows.size(); ++b)
        if (rows[b].count > 0) rows[b].mean_drg = sums[b] / static_cast<double>(rows[b].count);
    return rows;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string eval_csv(const EvalResult& r) {
    std::string out = "episodes,mean,stderr,normalized\n";
    out += std::to_string(r.episodes) + "," + format_double(r.mean_return) + "," + format_double(r.std_error) + ",";
    if (r.normalized) out += format_double(*r.normalized);
    out += "\n";
    return out;
}

std::string drg_csv(const std::vector<DrgSample>& samples) {
    std::string out = "ood_distance,drg\n";
    for (const auto& s : samples) out += format_double(s.ood_distance) + "," + format_double(s.drg) + "\n";
    return out;
}

std::string binned_csv(const std::vector<BinRow>& rows) {
    std::string out = "bin_lo,bin_hi,bin_center,count,mean_drg\n";
    for (const auto& r : rows) {
        out += format_double(r.lo) + "," + format_double(r.hi) + "," + format_double(r.center) + "," +
               std::to_string(r.count) + ",";
        if (r.mean_drg) out += format_double(*r.mean_drg);
        out += "\n";
    }
    return out;
}

} // namespace bcdp::metrics
