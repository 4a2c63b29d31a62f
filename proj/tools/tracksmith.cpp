// Command-line shell: training, evaluation, sweeps, track generation,
// rendering and replay verification. Exit codes: 0 success, 2 bad
// configuration or arguments, 3 training halted on a non-finite gradient.

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tracksmith/checkpoint.hpp"
#include "tracksmith/config.hpp"
#include "tracksmith/evalharness.hpp"
#include "tracksmith/svg.hpp"
#include "tracksmith/track_io.hpp"

namespace ts = tracksmith;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNanHalt = 3;

// Single writer per output directory. Creation with O_EXCL is the atomic
// claim; the lock file is removed on clean exit only, so a stale lock after
// a crash needs manual removal (the error message says which file).
class DirLock {
public:
    DirLock() = default;
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

    void acquire(const std::string& dir) {
        std::filesystem::create_directories(dir);
        path_ = dir + "/.tracksmith.lock";
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw ts::ConfigError("output directory is locked by another run (remove " + path_ +
                                  " if that run is gone)");
        }
        std::string pid = std::to_string(::getpid()) + "\n";
        [[maybe_unused]] ssize_t n = ::write(fd_, pid.c_str(), pid.size());
    }

    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }

private:
    int fd_ = -1;
    std::string path_;
};

// TRACKSMITH_OUT beats both the config file and --out.
std::string resolve_out_dir(const std::string& flag_value, const std::string& config_value) {
    const char* env = std::getenv("TRACKSMITH_OUT");
    if (env && *env) return env;
    if (!flag_value.empty()) return flag_value;
    return config_value;
}

ts::TrainerConfig load_or_default_config(const std::string& config_path, const std::string& game) {
    if (!config_path.empty()) return ts::load_experiment_config(config_path);
    return ts::default_trainer_config(ts::game_from_string(game));
}

std::vector<double> parse_aux_list(const std::string& csv) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        std::size_t comma = csv.find(',', pos);
        std::string tok = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ts::ConfigError("bad aux value '" + tok + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ts::ConfigError("empty aux list");
    return out;
}

struct TrainArgs {
    std::string config, game = "platform", out, resume;
    std::optional<std::uint64_t> seed;
    std::optional<long long> total_steps;
    std::optional<int> threads;
};

int cmd_train(const TrainArgs& a) {
    std::unique_ptr<ts::Trainer> trainer;
    if (!a.resume.empty()) {
        trainer = ts::load_trainer(a.resume);
        if (a.seed) throw ts::ConfigError("--seed cannot override a resumed checkpoint");
    } else {
        ts::TrainerConfig cfg = load_or_default_config(a.config, a.game);
        if (a.seed) cfg.seed = *a.seed;
        if (a.total_steps) cfg.schedule.total_steps = *a.total_steps;
        if (a.threads) cfg.threads = *a.threads;
        cfg.output_dir = resolve_out_dir(a.out, cfg.output_dir);
        trainer = std::make_unique<ts::Trainer>(cfg);
    }
    if (!a.resume.empty()) {
        if (a.total_steps) trainer->cfg.schedule.total_steps = *a.total_steps;
        if (a.threads) trainer->cfg.threads = *a.threads;
        std::string out = resolve_out_dir(a.out, trainer->cfg.output_dir);
        trainer->cfg.output_dir = out;
        if (!out.empty()) std::filesystem::create_directories(out);
    }

    DirLock lock;
    if (!trainer->cfg.output_dir.empty()) lock.acquire(trainer->cfg.output_dir);
    if (!trainer->cfg.output_dir.empty()) {
        ts::save_experiment_config(trainer->cfg, trainer->cfg.output_dir + "/config.json");
    }

    std::fprintf(stderr, "[tracksmith] training: %s, seed %llu, %lld total steps, %d thread(s)\n",
                 ts::game_to_string(trainer->cfg.env.game).c_str(),
                 static_cast<unsigned long long>(trainer->cfg.seed),
                 trainer->cfg.schedule.total_steps, trainer->cfg.threads);
    ts::TrainStatus st = trainer->run();
    if (st == ts::TrainStatus::halted_nan) {
        std::fprintf(stderr, "[tracksmith] halted on non-finite gradient\n");
        return kExitNanHalt;
    }
    std::fprintf(stderr, "[tracksmith] done: %lld env steps, %lld episodes\n", trainer->env_steps,
                 trainer->episodes_run);
    return kExitOk;
}

struct EvalArgs {
    std::string solver, generator, config, game = "platform", source = "rule_pcg";
    std::string csv, label = "eval", record_replay;
    double aux = 0.0;
    int episodes = 100;
    int count = 5;
    std::optional<int> segments;
    std::uint64_t seed = 1;
    int threads = 1;
};

void write_csv_row(const std::string& csv_path, const ts::EvalReport& r, const std::string& label) {
    bool fresh = !std::filesystem::exists(csv_path) ||
                 std::filesystem::file_size(csv_path) == 0;
    std::ofstream f(csv_path, std::ios::app);
    if (!f) throw ts::ConfigError("cannot write csv: " + csv_path);
    if (fresh) f << ts::eval_report_csv_header() << "\n";
    f << ts::eval_report_csv_row(r, label) << "\n";
}

void record_one_replay(const std::string& path, const ts::MlpPolicy& solver,
                       const ts::MlpPolicy* generator, const ts::TrackSource& src,
                       const ts::EnvConfig& env) {
    ts::Rng rng = ts::Rng::stream(src.seed, 0);
    ts::ReplayLog log;
    ts::EpisodeParams p;
    p.mode = ts::EpisodeMode::eval;
    p.solver = &solver;
    p.replay = &log;
    ts::TrackState local;
    if (src.kind == ts::TrackSource::Kind::generator) {
        p.generator = generator;
        p.aux = ts::AuxVector({src.aux});
        p.goals = ts::randomize_goal(rng, env.game, env);
    } else {
        ts::Rng trng = ts::Rng::stream(src.seed, 0xF15EDULL);
        local = ts::generate_rule_pcg(trng, env.game, env.track, src.rule_segments,
                                      src.rule_max_abs_angle_deg);
        p.static_track = &local;
        p.goals = {ts::static_track_goal(local)};
    }
    ts::run_episode(p, env, rng);
    ts::save_replay(log, path);
    std::fprintf(stderr, "[tracksmith] replay written to %s\n", path.c_str());
}

int cmd_evaluate(const EvalArgs& a) {
    ts::TrainerConfig cfg = load_or_default_config(a.config, a.game);
    cfg.threads = a.threads;

    ts::MlpPolicy solver = ts::load_policy_any(a.solver, "solver");
    std::optional<ts::MlpPolicy> generator;
    ts::TrackSource src;
    src.seed = a.seed;
    src.count = a.count;
    src.aux = a.aux;
    src.rule_segments = a.segments ? *a.segments : cfg.rule_segments;
    src.rule_max_abs_angle_deg = cfg.rule_max_abs_angle_deg;
    if (a.source == "generator") {
        if (a.generator.empty()) throw ts::ConfigError("--source generator needs --generator");
        src.kind = ts::TrackSource::Kind::generator;
        generator = ts::load_policy_any(a.generator, "generator");
        src.generator = &*generator;
    } else if (a.source == "rule_pcg") {
        src.kind = ts::TrackSource::Kind::rule_pcg;
    } else if (a.source == "fixed_set") {
        src.kind = ts::TrackSource::Kind::fixed_set;
    } else {
        throw ts::ConfigError("unknown --source '" + a.source + "'");
    }

    ts::EvalReport r = ts::evaluate_solver(solver, src, a.episodes, cfg.env, a.threads);
    std::printf("%s\n%s\n", ts::eval_report_csv_header().c_str(),
                ts::eval_report_csv_row(r, a.label).c_str());
    if (!a.csv.empty()) write_csv_row(a.csv, r, a.label);
    if (!a.record_replay.empty()) {
        record_one_replay(a.record_replay, solver, generator ? &*generator : nullptr, src, cfg.env);
    }
    return kExitOk;
}

struct SweepArgs {
    std::string ckpt, config, game = "platform", csv, aux_csv = "1,0.5,0,-0.5,-1";
    int trials = 100;
    std::uint64_t seed = 1;
    int threads = 1;
};

int cmd_sweep_aux(const SweepArgs& a) {
    ts::TrainerConfig cfg = load_or_default_config(a.config, a.game);
    ts::MlpPolicy generator = ts::load_policy_any(a.ckpt, "generator");
    ts::MlpPolicy solver = ts::load_policy_any(a.ckpt, "solver");
    std::vector<double> aux = parse_aux_list(a.aux_csv);

    std::vector<ts::EvalReport> reports =
        ts::sweep_aux(generator, solver, aux, a.trials, cfg.env, a.seed, a.threads);
    std::printf("%s\n", ts::eval_report_csv_header().c_str());
    for (const ts::EvalReport& r : reports) {
        char label[32];
        std::snprintf(label, sizeof label, "aux_%+.2f", r.aux);
        std::printf("%s\n", ts::eval_report_csv_row(r, label).c_str());
        if (!a.csv.empty()) write_csv_row(a.csv, r, label);
    }
    return kExitOk;
}

struct GenerateArgs {
    std::string ckpt, config, game = "platform", out = ".";
    double aux = 0.0;
    int count = 5;
    std::optional<int> segments;
    std::uint64_t seed = 1;
};

// Open-loop unroll: the generator extends from the frontier a fixed number of
// times toward a randomized goal, no solver in the loop.
int cmd_generate(const GenerateArgs& a) {
    ts::TrainerConfig cfg = load_or_default_config(a.config, a.game);
    ts::MlpPolicy generator = ts::load_policy_any(a.ckpt, "generator");
    std::string out = resolve_out_dir(a.out, ".");
    DirLock lock;
    lock.acquire(out);

    int segments = a.segments ? *a.segments : cfg.rule_segments;
    std::vector<double> aux(static_cast<std::size_t>(cfg.n_aux), a.aux);
    for (int t = 0; t < a.count; ++t) {
        ts::Rng rng = ts::Rng::stream(a.seed, static_cast<std::uint64_t>(t));
        ts::TrackState track = cfg.env.game == ts::GameKind::platform
                                   ? ts::make_platform_track(cfg.env.track)
                                   : ts::make_race_track(cfg.env.track);
        std::vector<ts::Vec3> goals = ts::randomize_goal(rng, cfg.env.game, cfg.env);
        track.goal = goals.back();
        for (int i = 0; i < segments && !track.terminated_by_collision; ++i) {
            std::vector<double> obs = ts::build_generator_obs(track, aux, cfg.env.track);
            ts::HeadOut head = generator.forward(obs);
            ts::ActionSample act = ts::sample_action(head, generator.spec(), rng);
            if (cfg.env.game == ts::GameKind::platform) {
                ts::PlatformSegmentSpec s{act.env[0], act.env[1], act.env[2], act.env[3]};
                ts::append_platform_segment(track, s, ts::platform_bearing(track, 0.0));
            } else {
                ts::RaceSegmentSpec s{act.env[0], act.env[1], act.env[2]};
                ts::extend_race_track(track, s, cfg.env.track);
            }
        }
        char name[64];
        std::snprintf(name, sizeof name, "/track_%03d", t);
        char title[64];
        std::snprintf(title, sizeof title, "aux=%+.2f seed=%llu", a.aux,
                      static_cast<unsigned long long>(a.seed));
        ts::save_track(track, cfg.env.track, out + name + ".json", a.seed);
        ts::save_track_svg(track, cfg.env.track, out + name + ".svg", goals, title);
        std::fprintf(stderr, "[tracksmith] wrote %s.json (+.svg)\n", (out + name).c_str());
    }
    return kExitOk;
}

int cmd_render(const std::string& track_path, std::string out_path) {
    ts::TrackConfig cfg;
    ts::TrackState track = ts::load_track(track_path, &cfg);
    if (out_path.empty()) {
        out_path = track_path;
        std::size_t dot = out_path.rfind('.');
        if (dot != std::string::npos) out_path.resize(dot);
        out_path += ".svg";
    }
    ts::save_track_svg(track, cfg, out_path);
    std::fprintf(stderr, "[tracksmith] wrote %s\n", out_path.c_str());
    return kExitOk;
}

int cmd_replay(const std::string& log_path) {
    ts::ReplayVerifyResult r = ts::verify_replay(log_path);
    if (r.ok) {
        std::printf("replay verified: every state matches the re-simulation\n");
        return kExitOk;
    }
    std::fprintf(stderr, "replay mismatch at step %lld: %s\n", r.first_mismatch,
                 r.message.c_str());
    return kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tracksmith: adversarial track generation trainer"};
    app.require_subcommand(1);

    TrainArgs train;
    CLI::App* t = app.add_subcommand("train", "Run or resume alternating self-play training");
    t->add_option("--config", train.config, "Experiment config JSON");
    t->add_option("--game", train.game, "Game when no config is given (platform|racing)");
    t->add_option("--seed", train.seed, "Override config seed");
    t->add_option("--out", train.out, "Output directory (env TRACKSMITH_OUT overrides)");
    t->add_option("--resume", train.resume, "Resume from a trainer checkpoint");
    t->add_option("--total-steps", train.total_steps, "Override schedule total env steps");
    t->add_option("--threads", train.threads, "Worker threads for PPO minibatches");

    EvalArgs ev;
    CLI::App* e = app.add_subcommand("evaluate", "Evaluate a solver on a track source");
    e->add_option("--solver", ev.solver, "Solver policy or trainer checkpoint")->required();
    e->add_option("--generator", ev.generator, "Generator policy (for --source generator)");
    e->add_option("--source", ev.source, "Track source: generator|rule_pcg|fixed_set");
    e->add_option("--aux", ev.aux, "Aux value for generator tracks");
    e->add_option("--episodes", ev.episodes, "Episode count");
    e->add_option("--count", ev.count, "Fixed-set track count");
    e->add_option("--segments", ev.segments, "Segments per rule/fixed track");
    e->add_option("--config", ev.config, "Experiment config JSON (env settings)");
    e->add_option("--game", ev.game, "Game when no config is given");
    e->add_option("--seed", ev.seed, "Evaluation seed");
    e->add_option("--csv", ev.csv, "Append the report row to this CSV");
    e->add_option("--label", ev.label, "Row label for the CSV");
    e->add_option("--record-replay", ev.record_replay, "Write one episode's replay log here");
    e->add_option("--threads", ev.threads, "Parallel episode workers");

    SweepArgs sw;
    CLI::App* s = app.add_subcommand("sweep-aux", "Success/geometry sweep over aux values");
    s->add_option("--ckpt", sw.ckpt, "Trainer checkpoint with both policies")->required();
    s->add_option("--aux", sw.aux_csv, "Comma-separated aux values");
    s->add_option("--trials", sw.trials, "Episodes per aux value");
    s->add_option("--config", sw.config, "Experiment config JSON (env settings)");
    s->add_option("--game", sw.game, "Game when no config is given");
    s->add_option("--seed", sw.seed, "Evaluation seed");
    s->add_option("--csv", sw.csv, "Append report rows to this CSV");
    s->add_option("--threads", sw.threads, "Parallel episode workers");

    GenerateArgs gen;
    CLI::App* g = app.add_subcommand("generate", "Emit tracks from a generator checkpoint");
    g->add_option("--ckpt", gen.ckpt, "Generator policy or trainer checkpoint")->required();
    g->add_option("--aux", gen.aux, "Aux value");
    g->add_option("--count", gen.count, "Number of tracks");
    g->add_option("--segments", gen.segments, "Segments per track");
    g->add_option("--config", gen.config, "Experiment config JSON (env settings)");
    g->add_option("--game", gen.game, "Game when no config is given");
    g->add_option("--seed", gen.seed, "Generation seed");
    g->add_option("--out", gen.out, "Output directory (env TRACKSMITH_OUT overrides)");

    std::string render_track, render_out;
    CLI::App* r = app.add_subcommand("render", "Track JSON to plan-view SVG");
    r->add_option("--track", render_track, "Track JSON file")->required();
    r->add_option("--out", render_out, "Output SVG path (default: alongside the track)");

    std::string replay_log;
    CLI::App* p = app.add_subcommand("replay", "Re-simulate a replay log and verify bit-equality");
    p->add_option("--log", replay_log, "Replay JSONL file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e2) {
        return app.exit(e2);
    } catch (const CLI::ParseError& e2) {
        app.exit(e2);
        return kExitConfig;
    }

    try {
        if (t->parsed()) return cmd_train(train);
        if (e->parsed()) return cmd_evaluate(ev);
        if (s->parsed()) return cmd_sweep_aux(sw);
        if (g->parsed()) return cmd_generate(gen);
        if (r->parsed()) return cmd_render(render_track, render_out);
        if (p->parsed()) return cmd_replay(replay_log);
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return kExitConfig;
    }
    return kExitConfig;
}
