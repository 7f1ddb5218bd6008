#include "bcdp/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcdp/config.hpp"
#include "bcdp/demoset.hpp"
#include "bcdp/error.hpp"
#include "bcdp/maze.hpp"
#include "bcdp/metrics.hpp"
#include "bcdp/reward_labeler.hpp"
#include "bcdp/theory.hpp"
#include "bcdp/trainers.hpp"

namespace bcdp::cli {

namespace fs = std::filesystem;
using nlohmann::json;

double default_learning_rate(const std::string& env_id) {
    if (env_id.find("-large-") != std::string::npos) return 1e-5;
    if (env_id.find("-medium-") != std::string::npos) return 1e-4;
    return 1e-3;
}

namespace {

/// Files written by one command. Everything is removed again unless commit() is reached.
class OutputGuard {
public:
    explicit OutputGuard(fs::path dir) : dir_(std::move(dir)) {}
    OutputGuard(const OutputGuard&) = delete;
    OutputGuard& operator=(const OutputGuard&) = delete;

    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove(*it, ec);
        for (auto it = created_.rbegin(); it != created_.rend(); ++it)
            if (fs::is_directory(*it, ec) && fs::is_empty(*it, ec)) fs::remove(*it, ec);
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const fs::path& target, const std::string& content) {
        ensure_dir(target.parent_path());
        const fs::path tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw ValidationError("cannot write " + target.string());
            out << content;
            if (!out) throw ValidationError("write failed for " + target.string());
        }
        written_.push_back(tmp);
        fs::rename(tmp, target);
        written_.back() = target;
    }

    void write_named(const std::string& name, const std::string& content) { write(path(name), content); }

    void commit() { committed_ = true; }

private:
    void ensure_dir(const fs::path& dir) {
        if (dir.empty() || fs::exists(dir)) return;
        ensure_dir(dir.parent_path());
        fs::create_directory(dir);
        created_.push_back(dir);
    }

    fs::path dir_;
    std::vector<fs::path> written_;
    std::vector<fs::path> created_;
    bool committed_ = false;
};

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError(what + " path is required");
    if (!fs::is_regular_file(path)) throw ValidationError(what + " not found: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    if (text.empty() || text == "none") return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("bad " + what + " entry '" + item + "'");
        }
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError("bad seed '" + item + "'");
        }
    }
    if (out.empty()) throw ValidationError("seed list is empty");
    return out;
}

std::unique_ptr<Environment> env_for(const std::string& env_id, const std::string& layout) {
    return make_env(env_id, layout.empty() ? std::nullopt : std::optional<std::string>(layout));
}

// ---------------------------------------------------------------------------

struct GenDataOptions {
    std::string env = "point-medium-sparse";
    std::string layout;
    int expert_traj = 5;
    int offline_traj = 200;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_data(const GenDataOptions& o, std::ostream& out) {
    if (o.out.empty()) throw ValidationError("--out directory is required");
    const auto env = env_for(o.env, o.layout);
    const Demoset expert = generate_expert(*env, o.expert_traj, derive_seed(o.seed, 0));
    const Demoset offline = generate_offline(*env, "random", o.offline_traj, derive_seed(o.seed, 1));
    OutputGuard guard(o.out);
    guard.write_named("expert.jsonl", serialize_demoset(expert));
    guard.write_named("offline.jsonl", serialize_demoset(offline));
    guard.commit();
    out << "expert: " << expert.n_transitions() << " transitions, offline: " << offline.n_transitions()
        << " transitions -> " << o.out << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct LabelOptions {
    std::string expert;
    std::string offline;
    std::string out;
    std::string disc_out;
    int disc_steps = 2000;
    int disc_batch = 256;
    double disc_lr = 1e-3;
    std::string disc_hidden = "64,64";
    std::string rescale = "linear";
    std::uint64_t seed = 0;
};

DiscriminatorConfig disc_config(const LabelOptions& o) {
    DiscriminatorConfig c;
    c.steps = o.disc_steps;
    c.batch_size = o.disc_batch;
    c.lr = o.disc_lr;
    c.hidden = parse_int_list(o.disc_hidden, "disc-hidden");
    c.seed = o.seed;
    return c;
}

int cmd_label(const LabelOptions& o, std::ostream& out) {
    require_file(o.expert, "expert dataset");
    require_file(o.offline, "offline dataset");
    if (o.out.empty()) throw ValidationError("--out path is required");
    const Demoset expert = load_demoset(o.expert);
    const Demoset offline = load_demoset(o.offline);
    Discriminator disc = train_discriminator(expert, offline, disc_config(o));
    disc.rescale = parse_rescale_mode(o.rescale);
    const Demoset labeled = label_offline(disc, offline);
    OutputGuard guard(fs::path(o.out).parent_path());
    guard.write(fs::path(o.out), serialize_demoset(labeled));
    if (!o.disc_out.empty()) guard.write(fs::path(o.disc_out), to_json(disc).dump(1) + "\n");
    guard.commit();
    const auto stats = dataset_stats(labeled);
    out << "labeled " << stats.n_transitions << " transitions, mean label "
        << metrics::format_double(stats.mean_reward_label.value_or(0.0)) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct TrainOptions {
    std::string algo = "bcdp";
    std::string expert;
    std::string offline;
    std::string out;
    std::string layout;
    std::uint64_t seed = 0;
    std::string seeds;
    double gamma = 0.99;
    double tau = 0.005;
    int t_freq = 2;
    int batch_size = 256;
    std::optional<double> lr_actor;
    std::optional<double> lr_critic;
    std::string alpha_mode = "auto";
    double alpha = 1.0;
    double noise_std = 0.2;
    double noise_clip = 0.5;
    bool absorbing_terminal = false;
    int steps = 10000;
    std::string actor_hidden = "64,64";
    std::string critic_hidden = "64,64";
    int eval_every = 0;
    int eval_episodes = metrics::kDefaultEpisodes;
    LabelOptions disc;
};

json config_json(const TrainOptions& o, const BcdpConfig& c, std::uint64_t seed) {
    return {{"algo", o.algo},
            {"seed", seed},
            {"gamma", c.gamma},
            {"tau", c.tau},
            {"t_freq", c.t_freq},
            {"batch_size", c.batch_size},
            {"lr_actor", c.lr_actor},
            {"lr_critic", c.lr_critic},
            {"alpha_mode", to_string(c.alpha_mode)},
            {"alpha", c.alpha_value},
            {"noise_std", c.target_noise_std},
            {"noise_clip", c.target_noise_clip},
            {"absorbing_terminal", c.absorbing_terminal},
            {"steps", c.training_steps},
            {"actor_hidden", c.actor_hidden},
            {"critic_hidden", c.critic_hidden},
            {"eval_every", o.eval_every},
            {"eval_episodes", o.eval_episodes},
            {"layout", o.layout},
            {"disc_steps", o.disc.disc_steps},
            {"disc_batch", o.disc.disc_batch},
            {"disc_lr", o.disc.disc_lr},
            {"disc_hidden", o.disc.disc_hidden},
            {"rescale", o.disc.rescale}};
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
    static const std::vector<std::string> algos{"bcdp", "bc-exp", "bc-all", "uds"};
    if (std::find(algos.begin(), algos.end(), o.algo) == algos.end())
        throw ValidationError("unknown algorithm '" + o.algo + "'");
    require_file(o.expert, "expert dataset");
    if (o.algo != "bc-exp") require_file(o.offline, "offline dataset");
    if (o.out.empty()) throw ValidationError("--out directory is required");

    const std::string expert_text = read_file(o.expert);
    const Demoset expert = parse_demoset(expert_text);
    std::string offline_text;
    Demoset offline;
    if (!o.offline.empty() && o.algo != "bc-exp") {
        offline_text = read_file(o.offline);
        offline = parse_demoset(offline_text);
        if (offline.env_id != expert.env_id) throw ValidationError("expert and offline datasets come from different environments");
    }
    const auto env = env_for(expert.env_id, o.layout);
    const std::vector<std::uint64_t> seeds = o.seeds.empty() ? std::vector<std::uint64_t>{o.seed} : parse_seed_list(o.seeds);

    BcdpConfig base;
    base.gamma = o.gamma;
    base.tau = o.tau;
    base.t_freq = o.t_freq;
    base.batch_size = o.batch_size;
    base.lr_actor = o.lr_actor.value_or(default_learning_rate(expert.env_id));
    base.lr_critic = o.lr_critic.value_or(default_learning_rate(expert.env_id));
    base.alpha_mode = parse_alpha_mode(o.alpha_mode);
    base.alpha_value = o.alpha;
    base.target_noise_std = o.noise_std;
    base.target_noise_clip = o.noise_clip;
    base.absorbing_terminal = o.absorbing_terminal;
    base.training_steps = o.steps;
    base.actor_hidden = parse_int_list(o.actor_hidden, "actor-hidden");
    base.critic_hidden = parse_int_list(o.critic_hidden, "critic-hidden");
    base.validate();
    if (o.eval_episodes < 1) throw ValidationError("eval-episodes must be at least 1");

    OutputGuard guard(o.out);
    for (std::uint64_t seed : seeds) {
        BcdpConfig cfg = base;
        cfg.seed = seed;
        const std::uint64_t eval_seed = derive_seed(seed, 7);
        const auto refs = metrics::reference_scores(*env, eval_seed, o.eval_episodes);
        auto evaluator = [&](const Actor& actor) {
            return metrics::rollout_eval(*env, [&actor](const Vec& s, Rng&) { return actor.act(s); }, o.eval_episodes,
                                         eval_seed)
                .mean_return;
        };

        TrainResult result;
        json labeling = nullptr;
        if (o.algo == "bcdp") {
            Demoset labeled = offline;
            if (!offline.labeled()) {
                LabelOptions lo = o.disc;
                lo.seed = derive_seed(seed, 3);
                const Discriminator disc = [&] {
                    Discriminator d = train_discriminator(expert, offline, disc_config(lo));
                    d.rescale = parse_rescale_mode(lo.rescale);
                    return d;
                }();
                labeled = label_offline(disc, offline);
                labeling = {{"discriminator_seed", lo.seed},
                            {"mean_label", dataset_stats(labeled).mean_reward_label.value_or(0.0)}};
            }
            result = bcdp_train(expert, labeled, cfg, evaluator, o.eval_every);
        } else if (o.algo == "uds") {
            result = uds_train(expert, offline, cfg, evaluator, o.eval_every);
        } else {
            BcConfig bc;
            bc.batch_size = cfg.batch_size;
            bc.lr = cfg.lr_actor;
            bc.training_steps = cfg.training_steps;
            bc.seed = seed;
            bc.hidden = cfg.actor_hidden;
            result = o.algo == "bc-exp" ? bc_train(expert, std::nullopt, bc, evaluator, o.eval_every)
                                        : bc_train(merge(expert, offline), std::nullopt, bc, evaluator, o.eval_every);
        }

        auto final_eval = metrics::rollout_eval(
            *env, [&](const Vec& s, Rng&) { return result.actor.act(s); }, o.eval_episodes, eval_seed);
        final_eval.normalized = metrics::normalized_score(final_eval.mean_return, refs.random_ref, refs.expert_ref);

        const std::string prefix = seeds.size() > 1 ? "seed_" + std::to_string(seed) + "/" : "";
        const json checkpoint = {{"env_id", expert.env_id},
                                 {"layout", o.layout},
                                 {"algo", o.algo},
                                 {"actor", to_json(result.actor)},
                                 {"rng_state", result.rng_state}};
        json datasets = {{"expert", {{"path", o.expert}, {"fnv1a", hex64(fnv1a(expert_text))}}}};
        if (!offline_text.empty()) datasets["offline"] = {{"path", o.offline}, {"fnv1a", hex64(fnv1a(offline_text))}};
        const json manifest = {{"tool", kVersion},
                               {"command", "train"},
                               {"env_id", expert.env_id},
                               {"config", config_json(o, cfg, seed)},
                               {"datasets", datasets},
                               {"labeling", labeling},
                               {"final_eval",
                                {{"episodes", final_eval.episodes},
                                 {"mean", final_eval.mean_return},
                                 {"stderr", final_eval.std_error},
                                 {"normalized", *final_eval.normalized},
                                 {"random_ref", refs.random_ref},
                                 {"expert_ref", refs.expert_ref}}}};
        guard.write_named(prefix + "checkpoint.json", checkpoint.dump(1) + "\n");
        guard.write_named(prefix + "train_log.csv", result.log.to_csv());
        guard.write_named(prefix + "eval.csv", metrics::eval_csv(final_eval));
        guard.write_named(prefix + "manifest.json", manifest.dump(2) + "\n");
        out << o.algo << " seed " << seed << ": return " << metrics::format_double(final_eval.mean_return)
            << " normalized " << metrics::format_double(*final_eval.normalized) << "\n";
    }
    guard.commit();
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct LoadedCheckpoint {
    std::string env_id;
    std::string layout;
    Actor actor;
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
    require_file(path, "checkpoint");
    try {
        const json j = json::parse(read_file(path));
        return {j.at("env_id").get<std::string>(), j.value("layout", std::string()), actor_from_json(j.at("actor"))};
    } catch (const json::exception& e) {
        throw ValidationError("bad checkpoint " + path + ": " + e.what());
    }
}

struct EvaluateOptions {
    std::string checkpoint;
    std::string layout;
    int episodes = metrics::kDefaultEpisodes;
    std::uint64_t seed = 0;
    bool normalize = false;
    std::string out;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
    const LoadedCheckpoint ck = load_checkpoint(o.checkpoint);
    const auto env = env_for(ck.env_id, o.layout.empty() ? ck.layout : o.layout);
    auto result = metrics::rollout_eval(
        *env, [&](const Vec& s, Rng&) { return ck.actor.act(s); }, o.episodes, o.seed);
    if (o.normalize) {
        const auto refs = metrics::reference_scores(*env, o.seed, o.episodes);
        result.normalized = metrics::normalized_score(result.mean_return, refs.random_ref, refs.expert_ref);
    }
    if (!o.out.empty()) {
        OutputGuard guard(fs::path(o.out).parent_path());
        guard.write(fs::path(o.out), metrics::eval_csv(result));
        guard.commit();
    }
    out << metrics::eval_csv(result);
    return exit_ok;
}

// ---------------------------------------------------------------------------

struct TheoryOptions {
    int instances = 200;
    int states = 20;
    int actions = 4;
    double gamma = 0.9;
    double sparsity = 0.7;
    int expert_traj = 3;
    std::uint64_t seed = 1;
    std::string out;
    std::string dump_dir;
};

int cmd_verify_theory(const TheoryOptions& o, std::ostream& out) {
    if (o.out.empty()) throw ValidationError("--out path is required");
    if (o.instances < 1) throw ValidationError("--instances must be at least 1");
    theory::SuiteConfig suite;
    suite.instances = o.instances;
    suite.seed = o.seed;
    suite.params = {o.states, o.actions, o.gamma, o.sparsity, o.expert_traj};
    if (!(o.gamma > 0.0 && o.gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");

    std::string csv = theory::report_csv_header() + "\n";
    OutputGuard guard(fs::path(o.out).parent_path());
    const fs::path dump = o.dump_dir.empty() ? fs::path(o.out + ".violations") : fs::path(o.dump_dir);
    int failures = 0, flagged = 0;
    for (int i = 0; i < suite.instances; ++i) {
        const auto inst = theory::random_instance(suite.seed + static_cast<std::uint64_t>(i), suite.params);
        const auto report = theory::verify_instance(inst);
        csv += theory::report_csv_row(report) + "\n";
        if (report.beta_re_flag || report.beta_mis_re_flag) ++flagged;
        if (!theory::report_passes(report)) {
            ++failures;
            guard.write(dump / ("instance_" + std::to_string(inst.seed) + ".json"), theory::to_json(inst).dump(1) + "\n");
        }
    }
    guard.write(fs::path(o.out), csv);
    guard.commit();
    out << suite.instances << " instances, " << flagged << " flagged, " << failures << " violations\n";
    return failures == 0 ? exit_ok : exit_acceptance;
}

// ---------------------------------------------------------------------------

struct DrgOptions {
    std::string checkpoint;
    std::string expert;
    std::string layout;
    int n_traj = 100;
    int bins = 10;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_drg(const DrgOptions& o, std::ostream& out) {
    const LoadedCheckpoint ck = load_checkpoint(o.checkpoint);
    require_file(o.expert, "expert dataset");
    if (o.out.empty()) throw ValidationError("--out directory is required");
    const Demoset expert = load_demoset(o.expert);
    const auto env = env_for(ck.env_id, o.layout.empty() ? ck.layout : o.layout);
    std::vector<Vec> positions;
    for (const auto& traj : expert.trajectories)
        for (const auto& rec : traj) positions.push_back(env->position(rec.s));
    const auto samples = metrics::drg_analysis(
        *env, [&](const Vec& s, Rng&) { return ck.actor.act(s); }, positions, o.n_traj, o.seed);
    const auto rows = metrics::binned_report(samples, o.bins);
    OutputGuard guard(o.out);
    guard.write_named("drg_samples.csv", metrics::drg_csv(samples));
    guard.write_named("drg_binned.csv", metrics::binned_csv(rows));
    guard.commit();
    const auto above = metrics::mean_drg_above_median(samples);
    out << samples.size() << " transitions; mean DRG above median OOD distance: "
        << (above ? metrics::format_double(*above) : std::string("n/a")) << "\n";
    return exit_ok;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size())
            path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            path = args[i].substr(9);
        if (!path.empty()) return merge_config_args(args, load_config_file(path));
    }
    return args;
}

} // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavioral cloning with dynamic programming on maze tasks", "bcdp"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);
    std::string config_path;

    GenDataOptions gen;
    auto* c_gen = app.add_subcommand("gen-data", "Generate expert and random-policy datasets");
    c_gen->add_option("--env", gen.env, "Environment id, e.g. point-medium-sparse");
    c_gen->add_option("--layout", gen.layout, "Maze layout file replacing the named layout");
    c_gen->add_option("--expert-traj", gen.expert_traj, "Number of expert trajectories");
    c_gen->add_option("--offline-traj", gen.offline_traj, "Number of random-policy trajectories");
    c_gen->add_option("--seed", gen.seed);
    c_gen->add_option("--out", gen.out, "Output directory");
    c_gen->add_option("--config", config_path, "key=value config file");

    LabelOptions lab;
    auto add_disc_options = [](CLI::App* cmd, LabelOptions& l) {
        cmd->add_option("--disc-steps", l.disc_steps);
        cmd->add_option("--disc-batch", l.disc_batch);
        cmd->add_option("--disc-lr", l.disc_lr);
        cmd->add_option("--disc-hidden", l.disc_hidden);
        cmd->add_option("--rescale", l.rescale, "linear or log");
    };
    auto* c_label = app.add_subcommand("label", "Label an offline dataset with discriminator rewards");
    c_label->add_option("--expert", lab.expert);
    c_label->add_option("--offline", lab.offline);
    c_label->add_option("--out", lab.out, "Labeled dataset path");
    c_label->add_option("--disc-out", lab.disc_out, "Optional discriminator JSON path");
    c_label->add_option("--seed", lab.seed);
    c_label->add_option("--config", config_path);
    add_disc_options(c_label, lab);

    TrainOptions tr;
    auto* c_train = app.add_subcommand("train", "Train bcdp, bc-exp, bc-all or uds");
    c_train->add_option("--algo", tr.algo);
    c_train->add_option("--expert", tr.expert);
    c_train->add_option("--offline", tr.offline);
    c_train->add_option("--out", tr.out, "Run directory");
    c_train->add_option("--layout", tr.layout);
    c_train->add_option("--seed", tr.seed);
    c_train->add_option("--seeds", tr.seeds, "Comma-separated seeds; one subdirectory per seed");
    c_train->add_option("--gamma", tr.gamma);
    c_train->add_option("--tau", tr.tau);
    c_train->add_option("--t-freq", tr.t_freq);
    c_train->add_option("--batch-size", tr.batch_size);
    c_train->add_option("--lr-actor", tr.lr_actor);
    c_train->add_option("--lr-critic", tr.lr_critic);
    c_train->add_option("--alpha-mode", tr.alpha_mode, "auto, literal or fixed");
    c_train->add_option("--alpha", tr.alpha, "Balance factor when alpha-mode is fixed");
    c_train->add_option("--noise-std", tr.noise_std);
    c_train->add_option("--noise-clip", tr.noise_clip);
    c_train->add_flag("--absorbing-terminal", tr.absorbing_terminal, "Bootstrap done transitions as absorbing states");
    c_train->add_option("--steps", tr.steps);
    c_train->add_option("--actor-hidden", tr.actor_hidden);
    c_train->add_option("--critic-hidden", tr.critic_hidden);
    c_train->add_option("--eval-every", tr.eval_every);
    c_train->add_option("--eval-episodes", tr.eval_episodes);
    c_train->add_option("--config", config_path);
    add_disc_options(c_train, tr.disc);

    EvaluateOptions ev;
    auto* c_eval = app.add_subcommand("evaluate", "Roll out a trained actor");
    c_eval->add_option("--checkpoint", ev.checkpoint);
    c_eval->add_option("--layout", ev.layout);
    c_eval->add_option("--episodes", ev.episodes);
    c_eval->add_option("--seed", ev.seed);
    c_eval->add_flag("--normalize", ev.normalize, "Also report the normalized score");
    c_eval->add_option("--out", ev.out, "CSV path");
    c_eval->add_option("--config", config_path);

    TheoryOptions th;
    auto* c_theory = app.add_subcommand("verify-theory", "Check the performance bounds on random tabular MDPs");
    c_theory->add_option("--instances", th.instances);
    c_theory->add_option("--states", th.states);
    c_theory->add_option("--actions", th.actions);
    c_theory->add_option("--gamma", th.gamma);
    c_theory->add_option("--sparsity", th.sparsity);
    c_theory->add_option("--expert-traj", th.expert_traj);
    c_theory->add_option("--seed", th.seed);
    c_theory->add_option("--out", th.out, "Report CSV path");
    c_theory->add_option("--dump-dir", th.dump_dir, "Where violating instances are written");
    c_theory->add_option("--config", config_path);

    DrgOptions dr;
    auto* c_drg = app.add_subcommand("drg", "Distance reduction gain analysis");
    c_drg->add_option("--checkpoint", dr.checkpoint);
    c_drg->add_option("--expert", dr.expert);
    c_drg->add_option("--layout", dr.layout);
    c_drg->add_option("--n-traj", dr.n_traj);
    c_drg->add_option("--bins", dr.bins);
    c_drg->add_option("--seed", dr.seed);
    c_drg->add_option("--out", dr.out, "Output directory");
    c_drg->add_option("--config", config_path);

    try {
        std::vector<std::string> args = expand_config(raw_args);
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const bcdp::ParseError& e) {
        err << "config: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (*c_gen) return cmd_gen_data(gen, out);
        if (*c_label) return cmd_label(lab, out);
        if (*c_train) return cmd_train(tr, out);
        if (*c_eval) return cmd_evaluate(ev, out);
        if (*c_theory) return cmd_verify_theory(th, out);
        if (*c_drg) return cmd_drg(dr, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_validation;
    }
    return exit_usage;
}

} // namespace bcdp::cli
