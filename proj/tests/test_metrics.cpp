#include <doctest.h>

#include <cmath>

#include "bcdp/error.hpp"
#include "bcdp/metrics.hpp"

using namespace bcdp;
using namespace bcdp::metrics;

TEST_CASE("normalized score maps the references to 0 and 100") {
    CHECK(normalized_score(10.0, 10.0, 50.0) == doctest::Approx(0.0));
    CHECK(normalized_score(50.0, 10.0, 50.0) == doctest::Approx(100.0));
    CHECK(normalized_score(30.0, 10.0, 50.0) == doctest::Approx(50.0));
    CHECK(normalized_score(70.0, 10.0, 50.0) == doctest::Approx(150.0));
    CHECK_THROWS(normalized_score(1.0, 5.0, 5.0));
}

TEST_CASE("OOD distance is the Euclidean nearest-neighbor distance") {
    const std::vector<Vec> pts{{0.0, 0.0}, {10.0, 10.0}};
    CHECK(ood_distance({3.0, 4.0}, pts) == doctest::Approx(5.0));
    CHECK(ood_distance({10.0, 10.0}, pts) == 0.0);
    CHECK_THROWS(ood_distance({1.0, 1.0}, {}));
}

TEST_CASE("grid index returns the brute-force distance") {
    Rng rng(2);
    std::vector<Vec> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({rng.uniform(0, 8), rng.uniform(0, 8)});
    const GridIndex index(pts, 0.5);
    for (int i = 0; i < 500; ++i) {
        const Vec q{rng.uniform(-3, 11), rng.uniform(-3, 11)};
        CHECK(index.distance(q) == ood_distance(q, pts));
    }
    const GridIndex single({{1.0, 1.0}});
    CHECK(single.distance({4.0, 5.0}) == doctest::Approx(5.0));
}

TEST_CASE("DRG telescopes along a trajectory") {
    const auto env = make_env("point-medium-sparse");
    const std::vector<Vec> expert_pts{{6.5, 6.5}};
    const auto samples = drg_analysis(*env, expert_policy(*env), expert_pts, 1, 3);
    REQUIRE(samples.size() > 1);
    double total = 0.0;
    for (const auto& s : samples) total += s.drg;
    const auto& last = samples.back();
    const double final_dist = last.ood_distance - last.drg;
    CHECK(total == doctest::Approx(samples.front().ood_distance - final_dist));
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        CHECK(samples[i].ood_distance - samples[i].drg == doctest::Approx(samples[i + 1].ood_distance));
    CHECK(total > 0.0);
}

TEST_CASE("mean DRG above the median uses a strict threshold") {
    std::vector<DrgSample> samples;
    for (int i = 1; i <= 5; ++i) samples.push_back({static_cast<double>(i), static_cast<double>(10 * i), {}});
    // median 3; above are 4 and 5
    CHECK(*mean_drg_above_median(samples) == doctest::Approx(45.0));
    CHECK_FALSE(mean_drg_above_median({}).has_value());
    std::vector<DrgSample> flat(4, DrgSample{1.0, 2.0, {}});
    CHECK_FALSE(mean_drg_above_median(flat).has_value());
}

TEST_CASE("binned report partitions samples into equal-width bins") {
    std::vector<DrgSample> samples{{0.0, 1.0, {}}, {0.4, 3.0, {}}, {1.0, -1.0, {}}, {2.0, 5.0, {}}};
    const auto rows = binned_report(samples, 4);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].lo == 0.0);
    CHECK(rows[3].hi == doctest::Approx(2.0));
    CHECK(rows[0].center == doctest::Approx(0.25));
    CHECK(rows[0].count == 2);
    CHECK(*rows[0].mean_drg == doctest::Approx(2.0));
    CHECK(rows[1].count == 0);
    CHECK_FALSE(rows[1].mean_drg.has_value());
    CHECK(rows[2].count == 1);
    CHECK(rows[3].count == 1);
    std::size_t total = 0;
    for (const auto& r : rows) total += r.count;
    CHECK(total == samples.size());
    const auto zero = binned_report({{0.0, 1.0, {}}}, 3);
    CHECK(zero.back().hi == doctest::Approx(3.0));
    CHECK(zero[0].count == 1);
    CHECK_THROWS(binned_report(samples, 0));
}

TEST_CASE("rollout evaluation is seeded and runs the full horizon") {
    const auto env = make_env("grid-medium-sparse");
    const auto a = rollout_eval(*env, random_policy(*env), 10, 4);
    const auto b = rollout_eval(*env, random_policy(*env), 10, 4);
    CHECK(a.returns == b.returns);
    CHECK(a.episodes == 10);
    const auto expert = rollout_eval(*env, expert_policy(*env), 5, 0);
    for (double r : expert.returns) CHECK(r > 0.0);
    // The goal is absorbing with unit reward, so the expert collects one per step after arrival.
    for (double r : expert.returns) CHECK(r <= env->horizon());
    const auto refs = reference_scores(*env, 0, 10);
    CHECK(refs.expert_ref > refs.random_ref);

    std::vector<double> rs = a.returns;
    double m = 0.0;
    for (double r : rs) m += r / rs.size();
    double v = 0.0;
    for (double r : rs) v += (r - m) * (r - m) / (rs.size() - 1);
    CHECK(a.mean_return == doctest::Approx(m));
    CHECK(a.std_error == doctest::Approx(std::sqrt(v / rs.size())));
}

TEST_CASE("CSV output is exact and stable") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    EvalResult r;
    r.mean_return = 2.5;
    r.std_error = 0.5;
    r.episodes = 4;
    r.returns = {1, 2, 3, 4};
    const auto csv = eval_csv(r);
    CHECK(csv.rfind("episodes,mean,stderr,normalized\n", 0) == 0);
    CHECK(csv.find("4,2.5,0.5,") != std::string::npos);
    CHECK(drg_csv({{1.0, 0.5, {2.0, 3.0}}}).find('\n') != std::string::npos);
}

TEST_CASE("corridor expert return counts every step from goal arrival to the horizon") {
    const auto env = make_env("grid-corridor-sparse");
    auto* grid = dynamic_cast<DiscreteMazeEnv*>(env.get());
    REQUIRE(grid != nullptr);
    const int distance = grid->layout().distance(grid->layout().start_cells().front());
    // Hand rollout: zero reward until the goal is entered at step `distance`, then one per step.
    const double by_hand = env->horizon() - distance + 1;
    const auto r = rollout_eval(*env, expert_policy(*env), 5, 3);
    CHECK(r.mean_return == doctest::Approx(by_hand));
    CHECK(r.std_error == 0.0);
    const auto refs = reference_scores(*env, 3);
    CHECK(refs.expert_ref == doctest::Approx(by_hand));
    CHECK(refs.expert_ref >= refs.random_ref);
}
