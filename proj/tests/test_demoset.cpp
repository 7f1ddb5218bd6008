#include <doctest.h>

#include <fstream>

#include "bcdp/demoset.hpp"
#include "bcdp/error.hpp"
#include "helpers.hpp"

using namespace bcdp;

TEST_CASE("expert datasets follow the expert and stop at done") {
    const auto env = make_env("grid-medium-sparse");
    const auto ds = generate_expert(*env, 4, 10);
    CHECK(ds.trajectories.size() == 4);
    CHECK(ds.policy_tag == "expert");
    CHECK(ds.encoding == "index");
    for (const auto& traj : ds.trajectories) {
        for (std::size_t t = 0; t < traj.size(); ++t) {
            CHECK(traj[t].a == env->expert_action(traj[t].s));
            CHECK(env->step(traj[t].s, traj[t].a).next_state == traj[t].s_next);
            if (t + 1 < traj.size()) CHECK(traj[t + 1].s == traj[t].s_next);
            CHECK_FALSE(traj[t].reward_label.has_value());
        }
        CHECK(traj.back().done);
    }
}

TEST_CASE("offline datasets are seeded and unlabeled") {
    const auto env = make_env("point-umaze-sparse");
    const auto a = generate_offline(*env, "random", 3, 5);
    const auto b = generate_offline(*env, "random", 3, 5);
    const auto c = generate_offline(*env, "random", 3, 6);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    CHECK_FALSE(a.labeled());
    CHECK_THROWS_AS(generate_offline(*env, "medium", 3, 5), ValidationError);
    CHECK_THROWS_AS(generate_offline(*env, "random", 0, 5), ValidationError);
}

TEST_CASE("serialization round trips exactly, including labels") {
    const auto env = make_env("point-medium-sparse");
    auto ds = generate_offline(*env, "random", 2, 1);
    ds.trajectories[0][0].reward_label = 0.125;
    const auto text = serialize_demoset(ds);
    CHECK(parse_demoset(text) == ds);
    CHECK(serialize_demoset(parse_demoset(text)) == text);
    const auto dir = testing::scratch_dir("demoset_io");
    save_demoset(ds, (dir / "d.jsonl").string());
    CHECK(load_demoset((dir / "d.jsonl").string()) == ds);
}

TEST_CASE("malformed files are rejected with line numbers") {
    const auto env = make_env("grid-umaze-sparse");
    const auto ds = generate_expert(*env, 1, 0);
    const auto text = serialize_demoset(ds);
    const auto truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
    CHECK_THROWS_AS(parse_demoset(truncated), ParseError);
    CHECK_THROWS_AS(parse_demoset("{not json}\n"), ParseError);
    CHECK_THROWS_AS(parse_demoset(""), ParseError);
    CHECK_THROWS_AS(parse_demoset(text + "{\"extra\":1}\n"), ParseError);

    auto bad_label = ds;
    bad_label.trajectories[0][0].reward_label = 1.5;
    CHECK_THROWS_AS(parse_demoset(serialize_demoset(bad_label)), ValidationError);
    auto bad_dim = ds;
    bad_dim.trajectories[0][0].s.push_back(0.0);
    CHECK_THROWS_AS(parse_demoset(serialize_demoset(bad_dim)), ValidationError);
    try {
        parse_demoset(truncated);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
    CHECK_THROWS_AS(load_demoset("/nonexistent/file.jsonl"), ValidationError);
}

TEST_CASE("stats, merge, and hashing") {
    const auto env = make_env("grid-medium-sparse");
    auto a = generate_expert(*env, 2, 0);
    const auto b = generate_offline(*env, "random", 3, 0);
    const auto merged = merge(a, b);
    CHECK(merged.trajectories.size() == 5);
    CHECK(merged.n_transitions() == a.n_transitions() + b.n_transitions());
    CHECK_THROWS_AS(merge(a, generate_expert(*make_env("point-medium-sparse"), 1, 0)), StructuralError);

    for (auto& t : a.trajectories)
        for (auto& r : t) r.reward_label = 0.5;
    const auto stats = dataset_stats(a);
    REQUIRE(stats.mean_reward_label.has_value());
    CHECK(*stats.mean_reward_label == doctest::Approx(0.5));
    CHECK(stats.mean_traj_len == doctest::Approx(a.n_transitions() / 2.0));
    CHECK_FALSE(dataset_stats(b).mean_reward_label.has_value());

    // Published FNV-1a 64-bit test vectors.
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}
