#include "bcdp/demoset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bcdp/error.hpp"

namespace bcdp {

using nlohmann::json;

std::size_t Demoset::n_transitions() const {
    std::size_t n = 0;
    for (const auto& t : trajectories) n += t.size();
    return n;
}

bool Demoset::labeled() const {
    for (const auto& t : trajectories)
        for (const auto& r : t)
            if (!r.reward_label) return false;
    return n_transitions() > 0;
}

void Demoset::validate() const {
    if (trajectories.empty()) throw ValidationError("dataset has no trajectories");
    for (const auto& traj : trajectories) {
        if (traj.empty()) throw ValidationError("dataset contains an empty trajectory");
        for (const auto& rec : traj) {
            if (static_cast<int>(rec.s.size()) != state_dim || static_cast<int>(rec.s_next.size()) != state_dim)
                throw ValidationError("state dimension differs from header");
            if (static_cast<int>(rec.a.size()) != action_dim) throw ValidationError("action dimension differs from header");
            if (rec.reward_label && !(*rec.reward_label >= 0.0 && *rec.reward_label <= 1.0))
                throw ValidationError("reward label outside [0, 1]");
        }
    }
}

Demoset Demoset::empty_like() const {
    Demoset out = *this;
    out.trajectories.clear();
    return out;
}

Demoset make_demoset(const Environment& env, std::string policy_tag, std::uint64_t seed) {
    Demoset ds;
    ds.env_id = env.id();
    ds.policy_tag = std::move(policy_tag);
    ds.seed = seed;
    ds.encoding = env.state_encoding();
    ds.state_dim = env.state_dim();
    ds.action_dim = env.action_dim();
    ds.n_actions = env.n_actions();
    ds.action_bound = env.action_bound();
    if (const auto* grid = dynamic_cast<const DiscreteMazeEnv*>(&env))
        ds.n_states = static_cast<int>(grid->layout().open_cells().size());
    return ds;
}

namespace {

template <typename ActionFn>
Trajectory rollout(const Environment& env, Rng& rng, ActionFn&& choose) {
    Trajectory traj;
    Vec state = env.reset(rng);
    for (int t = 0; t < env.horizon(); ++t) {
        Vec action = choose(state, rng);
        EnvStep step = env.step(state, action);
        traj.push_back({state, std::move(action), step.next_state, step.done, std::nullopt});
        state = std::move(step.next_state);
        if (step.done) break;
    }
    return traj;
}

} // namespace

Demoset generate_expert(const Environment& env, int n_traj, std::uint64_t seed) {
    if (n_traj < 1) throw ValidationError("n_traj must be at least 1");
    Demoset ds = make_demoset(env, "expert", seed);
    for (int i = 0; i < n_traj; ++i) {
        Rng rng(seed + static_cast<std::uint64_t>(i));
        ds.trajectories.push_back(rollout(env, rng, [&](const Vec& s, Rng&) { return env.expert_action(s); }));
    }
    return ds;
}

Demoset generate_offline(const Environment& env, const std::string& policy_tag, int n_traj, std::uint64_t seed) {
    if (n_traj < 1) throw ValidationError("n_traj must be at least 1");
    if (policy_tag != "random") throw ValidationError("only the 'random' behavior policy is available");
    Demoset ds = make_demoset(env, policy_tag, seed);
    for (int i = 0; i < n_traj; ++i) {
        Rng rng(seed + static_cast<std::uint64_t>(i));
        ds.trajectories.push_back(rollout(env, rng, [&](const Vec&, Rng& r) { return env.random_action(r); }));
    }
    return ds;
}

std::string serialize_demoset(const Demoset& ds) {
    std::vector<std::size_t> lens;
    for (const auto& t : ds.trajectories) lens.push_back(t.size());
    json header = {{"env_id", ds.env_id},
                   {"policy_tag", ds.policy_tag},
                   {"seed", ds.seed},
                   {"dims", {{"s", ds.state_dim}, {"a", ds.action_dim}}},
                   {"encoding", ds.encoding},
                   {"n_states", ds.n_states},
                   {"n_actions", ds.n_actions},
                   {"action_bound", ds.action_bound},
                   {"traj_lens", lens}};
    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& traj : ds.trajectories) {
        for (const auto& rec : traj) {
            json line = {{"s", rec.s}, {"a", rec.a}, {"sn", rec.s_next}, {"d", rec.done}};
            line["r"] = rec.reward_label ? json(*rec.reward_label) : json(nullptr);
            out += line.dump();
            out.push_back('\n');
        }
    }
    return out;
}

void save_demoset(const Demoset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path);
    out << serialize_demoset(ds);
    if (!out) throw ValidationError("write failed for " + path);
}

Demoset parse_demoset(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    auto parse_line = [&](const std::string& raw) {
        try {
            return json::parse(raw);
        } catch (const json::exception& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
    };

    if (!std::getline(in, line)) throw ParseError(1, "missing header line");
    ++line_no;
    Demoset ds;
    std::vector<std::size_t> lens;
    try {
        const json header = parse_line(line);
        ds.env_id = header.at("env_id").get<std::string>();
        ds.policy_tag = header.at("policy_tag").get<std::string>();
        ds.seed = header.at("seed").get<std::uint64_t>();
        ds.state_dim = header.at("dims").at("s").get<int>();
        ds.action_dim = header.at("dims").at("a").get<int>();
        ds.encoding = header.value("encoding", std::string("continuous"));
        ds.n_states = header.value("n_states", 0);
        ds.n_actions = header.value("n_actions", 0);
        ds.action_bound = header.value("action_bound", 1.0);
        lens = header.at("traj_lens").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw ParseError(line_no, std::string("bad header: ") + e.what());
    }

    for (std::size_t len : lens) {
        Trajectory traj;
        traj.reserve(len);
        for (std::size_t k = 0; k < len; ++k) {
            if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of file (truncated dataset)");
            ++line_no;
            const json obj = parse_line(line);
            TransitionRecord rec;
            try {
                rec.s = obj.at("s").get<Vec>();
                rec.a = obj.at("a").get<Vec>();
                rec.s_next = obj.at("sn").get<Vec>();
                rec.done = obj.at("d").get<bool>();
                const auto& r = obj.at("r");
                if (!r.is_null()) rec.reward_label = r.get<double>();
            } catch (const json::exception& e) {
                throw ParseError(line_no, std::string("bad transition: ") + e.what());
            }
            if (static_cast<int>(rec.s.size()) != ds.state_dim || static_cast<int>(rec.s_next.size()) != ds.state_dim ||
                static_cast<int>(rec.a.size()) != ds.action_dim)
                throw ValidationError("line " + std::to_string(line_no) + ": dimensions differ from header");
            if (rec.reward_label && !(*rec.reward_label >= 0.0 && *rec.reward_label <= 1.0))
                throw ValidationError("line " + std::to_string(line_no) + ": reward label outside [0, 1]");
            traj.push_back(std::move(rec));
        }
        ds.trajectories.push_back(std::move(traj));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty()) throw ParseError(line_no, "trailing content after the last trajectory");
    }
    ds.validate();
    return ds;
}

Demoset load_demoset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_demoset(buffer.str());
}

DatasetStats dataset_stats(const Demoset& ds) {
    DatasetStats stats;
    stats.n_transitions = ds.n_transitions();
    if (!ds.trajectories.empty())
        stats.mean_traj_len = static_cast<double>(stats.n_transitions) / static_cast<double>(ds.trajectories.size());
    if (ds.labeled()) {
        double sum = 0.0;
        for (const auto& t : ds.trajectories)
            for (const auto& r : t) sum += *r.reward_label;
        stats.mean_reward_label = sum / static_cast<double>(stats.n_transitions);
    }
    return stats;
}

Demoset merge(const Demoset& first, const Demoset& second) {
    if (first.state_dim != second.state_dim || first.action_dim != second.action_dim)
        throw StructuralError("cannot merge datasets with different dimensions");
    Demoset out = first;
    out.policy_tag = "custom";
    out.trajectories.insert(out.trajectories.end(), second.trajectories.begin(), second.trajectories.end());
    return out;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

} // namespace bcdp
