#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracksmith/checkpoint.hpp"
#include "tracksmith/config.hpp"
#include "tracksmith/track_io.hpp"

using namespace tracksmith;
namespace fs = std::filesystem;
using nlohmann::json;

#ifndef TRACKSMITH_BIN
#error "TRACKSMITH_BIN must point at the cli executable"
#endif

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

bool contains(const std::string& s, const std::string& needle) {
    return s.find(needle) != std::string::npos;
}

std::string unique_path(const char* tag) {
    static int counter = 0;
    return (fs::temp_directory_path() /
            (std::string("tracksmith_cli_") + tag + "_" + std::to_string(++counter)))
        .string();
}

// Runs the cli via the shell; env_prefix lets a case prepend VAR=value.
CmdResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string so = unique_path("stdout");
    const std::string se = unique_path("stderr");
    std::string cmd = env_prefix.empty() ? std::string() : env_prefix + " ";
    cmd += std::string(TRACKSMITH_BIN) + " " + args + " >" + so + " 2>" + se;
    int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : 127;
    r.out = read_file(so);
    r.err = read_file(se);
    fs::remove(so);
    fs::remove(se);
    return r;
}

// Small racing experiment: bounded episodes, tiny nets, two full phase kinds.
std::string write_tiny_config(long long total_steps = 600) {
    TrainerConfig c = default_trainer_config(GameKind::racing);
    c.hidden = {8};
    c.rollout_steps = 64;
    c.schedule = {150, 50, total_steps};
    c.env.phys.max_steps_racing = 40;
    c.checkpoint_every_steps = 150;
    const std::string path = unique_path("cfg") + ".json";
    save_experiment_config(c, path);
    return path;
}

// Scripted policy with pinned pre-squash means (see test_selfplay).
MlpPolicy scripted(PolicySpec spec, const std::vector<double>& mean_bias, double log_std = -40.0) {
    MlpPolicy p(spec);
    std::vector<double>& th = p.params();
    int trunk = 0;
    int prev = spec.obs_dim;
    for (int h : spec.hidden) {
        trunk += h * prev + h;
        prev = h;
    }
    const int mean_b = trunk + spec.n_continuous * prev;
    for (int i = 0; i < spec.n_continuous; ++i) th[mean_b + i] = mean_bias[i];
    for (int i = 0; i < spec.n_continuous; ++i) {
        th[th.size() - spec.n_continuous + i] = log_std;
    }
    return p;
}

std::string record_racing_replay_file() {
    EnvConfig env;
    env.game = GameKind::racing;
    MlpPolicy gen = scripted(generator_policy_spec(GameKind::racing, 1, env.track, {6}),
                             {20.0, 0.0, 0.0});
    MlpPolicy sol = scripted(solver_policy_spec(GameKind::racing, env.track, {6}), {20.0, 0.0});
    ReplayLog log;
    EpisodeParams p;
    p.mode = EpisodeMode::eval;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector(std::vector<double>{0.5});
    p.goals = {Vec3{60.0, 0.0, 0.0}, Vec3{200.0, 0.0, 0.0}};
    p.replay = &log;
    Rng rng(33);
    EpisodeResult ep = run_episode(p, env, rng);
    REQUIRE(ep.success);
    const std::string path = unique_path("replay") + ".jsonl";
    save_replay(log, path);
    return path;
}

std::vector<std::string> periodic_checkpoints(const std::string& dir) {
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (name.rfind("checkpoint_0", 0) == 0) found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    return found;
}

}  // namespace

TEST_CASE("bad invocations exit 2") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("launch").code == 2);
    CHECK(run_cli("train --config /nonexistent/exp.json").code == 2);
    CHECK(run_cli("render").code == 2);  // missing required --track

    CmdResult r = run_cli("train --config /nonexistent/exp.json");
    CHECK(contains(r.err, "error:"));
    CHECK(contains(r.err, "cannot open"));

    CmdResult help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(contains(help.out, "train"));
    CHECK(contains(help.out, "replay"));
    CHECK(contains(help.out, "sweep-aux"));
}

TEST_CASE("train writes artifacts and identical seeds give identical checkpoints") {
    const std::string cfg = write_tiny_config();
    const std::string dir = unique_path("train_a");
    const std::string dir_c = unique_path("train_c");

    CmdResult a = run_cli("train --config " + cfg + " --seed 7 --out " + dir);
    REQUIRE(a.code == 0);
    CHECK(fs::exists(dir + "/config.json"));
    CHECK(fs::exists(dir + "/metrics.csv"));
    CHECK(fs::exists(dir + "/checkpoint_final.json"));
    CHECK(!fs::exists(dir + "/.tracksmith.lock"));  // released on clean exit
    CHECK(contains(a.err, "training: racing"));
    CHECK(!periodic_checkpoints(dir).empty());

    const std::string snapshot = unique_path("final_snapshot") + ".json";
    fs::copy_file(dir + "/checkpoint_final.json", snapshot);
    const std::string metrics_a = read_file(dir + "/metrics.csv");

    // Same config, same seed, same output directory: byte-identical result.
    CmdResult b = run_cli("train --config " + cfg + " --seed 7 --out " + dir);
    REQUIRE(b.code == 0);
    CHECK(file_hash_hex(dir + "/checkpoint_final.json") == file_hash_hex(snapshot));

    // The second run appended the same metrics rows after the first run's.
    const std::string metrics_b = read_file(dir + "/metrics.csv");
    REQUIRE(metrics_b.rfind(metrics_a, 0) == 0);
    CHECK(metrics_b.substr(metrics_a.size()) == metrics_a.substr(metrics_a.find('\n') + 1));

    CmdResult c = run_cli("train --config " + cfg + " --seed 8 --out " + dir_c);
    REQUIRE(c.code == 0);
    std::unique_ptr<Trainer> ta = load_trainer(snapshot);
    std::unique_ptr<Trainer> tc = load_trainer(dir_c + "/checkpoint_final.json");
    CHECK(ta->solver.params() != tc->solver.params());

    fs::remove(cfg);
    fs::remove(snapshot);
    fs::remove_all(dir);
    fs::remove_all(dir_c);
}

TEST_CASE("TRACKSMITH_OUT overrides the --out flag") {
    const std::string cfg = write_tiny_config(200);
    const std::string flag_dir = unique_path("flag_out");
    const std::string env_dir = unique_path("env_out");

    CmdResult r = run_cli("train --config " + cfg + " --seed 3 --out " + flag_dir,
                          "TRACKSMITH_OUT=" + env_dir);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(env_dir + "/checkpoint_final.json"));
    CHECK(!fs::exists(flag_dir));

    fs::remove(cfg);
    fs::remove_all(env_dir);
}

TEST_CASE("the lock file enforces a single writer per output directory") {
    const std::string cfg = write_tiny_config(200);
    const std::string dir = unique_path("locked");
    fs::create_directories(dir);
    write_file(dir + "/.tracksmith.lock", "12345\n");

    CmdResult r = run_cli("train --config " + cfg + " --seed 3 --out " + dir);
    CHECK(r.code == 2);
    CHECK(contains(r.err, "locked by another run"));
    CHECK(fs::exists(dir + "/.tracksmith.lock"));  // a failed claim leaves it

    fs::remove(dir + "/.tracksmith.lock");
    CmdResult again = run_cli("train --config " + cfg + " --seed 3 --out " + dir);
    CHECK(again.code == 0);
    CHECK(!fs::exists(dir + "/.tracksmith.lock"));

    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("train resumes from a checkpoint and refuses a seed override") {
    const std::string cfg = write_tiny_config();
    const std::string dir = unique_path("resume");

    CmdResult full = run_cli("train --config " + cfg + " --seed 7 --out " + dir);
    REQUIRE(full.code == 0);
    const std::string ref_hash = file_hash_hex(dir + "/checkpoint_final.json");
    std::vector<std::string> mids = periodic_checkpoints(dir);
    REQUIRE(!mids.empty());

    CmdResult no = run_cli("train --resume " + mids.front() + " --seed 9");
    CHECK(no.code == 2);
    CHECK(contains(no.err, "cannot override"));

    CmdResult resumed = run_cli("train --resume " + mids.front());
    REQUIRE(resumed.code == 0);
    CHECK(file_hash_hex(dir + "/checkpoint_final.json") == ref_hash);

    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("train overrides total steps from the flag") {
    const std::string cfg = write_tiny_config();
    const std::string dir = unique_path("short");

    CmdResult r = run_cli("train --config " + cfg + " --seed 5 --total-steps 200 --out " + dir);
    REQUIRE(r.code == 0);
    std::unique_ptr<Trainer> t = load_trainer(dir + "/checkpoint_final.json");
    CHECK(t->env_steps >= 200);
    CHECK(t->env_steps < 600);
    TrainerConfig saved = load_experiment_config(dir + "/config.json");
    CHECK(saved.schedule.total_steps == 200);

    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("training halted by non-finite gradients exits 3") {
    TrainerConfig c = default_trainer_config(GameKind::racing);
    c.hidden = {8};
    c.rollout_steps = 64;
    c.schedule = {600, 0, 600};
    c.env.phys.max_steps_racing = 40;
    c.solver_hyper.learning_rate = 1e18;  // one update detonates the params
    const std::string cfg = unique_path("nan_cfg") + ".json";
    save_experiment_config(c, cfg);
    const std::string dir = unique_path("nan_out");

    CmdResult r = run_cli("train --config " + cfg + " --seed 4 --out " + dir);
    CHECK(r.code == 3);
    CHECK(contains(r.err, "non-finite"));
    CHECK(fs::exists(dir + "/nan_halt.json"));
    CHECK(fs::exists(dir + "/checkpoint_final.json"));  // written even on halt
    CHECK(!fs::exists(dir + "/.tracksmith.lock"));
    CHECK(load_trainer(dir + "/checkpoint_final.json")->status == TrainStatus::halted_nan);

    fs::remove(cfg);
    fs::remove_all(dir);
}

TEST_CASE("generate emits track json and svg files from a policy checkpoint") {
    EnvConfig env;
    env.game = GameKind::racing;
    MlpPolicy gen = scripted(generator_policy_spec(GameKind::racing, 1, env.track, {6}),
                             {20.0, 0.0, 0.0});
    const std::string ckpt = unique_path("genpol") + ".json";
    save_policy(gen, ckpt);
    const std::string dir = unique_path("tracks");

    CmdResult r = run_cli("generate --ckpt " + ckpt +
                          " --game racing --count 3 --segments 5 --aux -1 --seed 5 --out " + dir);
    REQUIRE(r.code == 0);
    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "/track_%03d", i);
        const std::string jpath = dir + name + ".json";
        const std::string spath = dir + name + ".svg";
        REQUIRE(fs::exists(jpath));
        REQUIRE(fs::exists(spath));
        TrackState t = load_track(jpath);
        CHECK(t.game == GameKind::racing);
        CHECK(t.arcs.size() == 6);  // spawn straight + 5 emitted segments
        CHECK(contains(read_file(jpath), "\"seed\": 5"));
        CHECK(read_file(spath).rfind("<svg", 0) == 0);
    }
    CHECK(!fs::exists(dir + "/.tracksmith.lock"));

    fs::remove(ckpt);
    fs::remove_all(dir);
}

TEST_CASE("render converts a track file to svg") {
    TrackConfig cfg;
    TrackState t = make_race_track(cfg);
    extend_race_track(t, {25.0, 15.0, 1.0}, cfg);
    t.goal = t.arcs.back().end.position;
    const std::string track = unique_path("render_in") + ".json";
    save_track(t, cfg, track);

    CmdResult r = run_cli("render --track " + track);
    REQUIRE(r.code == 0);
    std::string sibling = track.substr(0, track.size() - 5) + ".svg";
    CHECK(fs::exists(sibling));
    CHECK(read_file(sibling).rfind("<svg", 0) == 0);

    const std::string out = unique_path("render_out") + ".svg";
    CHECK(run_cli("render --track " + track + " --out " + out).code == 0);
    CHECK(fs::exists(out));

    CHECK(run_cli("render --track " + track + ".missing").code == 2);

    fs::remove(track);
    fs::remove(sibling);
    fs::remove(out);
}

TEST_CASE("replay verification exits 0 clean and 1 on tampering") {
    const std::string path = record_racing_replay_file();

    CmdResult ok = run_cli("replay --log " + path);
    CHECK(ok.code == 0);
    CHECK(contains(ok.out, "replay verified"));

    // Nudge one recorded coordinate by 1e-9 and expect a nonzero exit.
    std::ifstream in(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    REQUIRE(lines.size() > 12);
    std::size_t k = 0;
    for (std::size_t i = 1; i < lines.size() && k == 0; ++i) {
        json j = json::parse(lines[i]);
        if (!j.at("g").get<bool>()) k = i;
    }
    REQUIRE(k > 0);
    json j = json::parse(lines[k]);
    j["p"][0] = j["p"][0].get<double>() + 1e-9;
    lines[k] = j.dump();
    const std::string tampered = unique_path("tampered") + ".jsonl";
    std::ofstream out(tampered);
    for (const std::string& l : lines) out << l << "\n";
    out.close();

    CmdResult bad = run_cli("replay --log " + tampered);
    CHECK(bad.code == 1);
    CHECK(contains(bad.err, "replay mismatch at step"));

    CHECK(run_cli("replay --log " + path + ".missing").code == 1);

    fs::remove(path);
    fs::remove(tampered);
}

TEST_CASE("evaluate prints a csv report and appends rows to a file") {
    EnvConfig env;
    env.game = GameKind::racing;
    MlpPolicy sol = scripted(solver_policy_spec(GameKind::racing, env.track, {6}), {20.0, 0.0});
    const std::string solver = unique_path("evalsol") + ".json";
    save_policy(sol, solver);
    const std::string csv = unique_path("eval") + ".csv";

    CmdResult r = run_cli("evaluate --solver " + solver +
                          " --game racing --source rule_pcg --episodes 6 --segments 5 --seed 3" +
                          " --csv " + csv + " --label base");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("label,aux,episodes,success_mean", 0) == 0);
    CHECK(contains(r.out, "\nbase,"));

    CmdResult r2 = run_cli("evaluate --solver " + solver +
                           " --game racing --source rule_pcg --episodes 6 --segments 5 --seed 4" +
                           " --csv " + csv + " --label again");
    REQUIRE(r2.code == 0);
    std::istringstream rows(read_file(csv));
    std::vector<std::string> csv_lines;
    std::string l;
    while (std::getline(rows, l)) csv_lines.push_back(l);
    REQUIRE(csv_lines.size() == 3);  // one header, two appended rows
    CHECK(csv_lines[0].rfind("label,aux", 0) == 0);
    CHECK(csv_lines[1].rfind("base,", 0) == 0);
    CHECK(csv_lines[2].rfind("again,", 0) == 0);

    // generator source requires a generator checkpoint
    CHECK(run_cli("evaluate --solver " + solver + " --game racing --source generator").code == 2);
    CHECK(run_cli("evaluate --solver " + solver + " --game racing --source mystery").code == 2);

    // --record-replay writes a verifiable episode log
    const std::string rec = unique_path("recorded") + ".jsonl";
    CmdResult r3 = run_cli("evaluate --solver " + solver +
                           " --game racing --source rule_pcg --episodes 2 --segments 5 --seed 3" +
                           " --record-replay " + rec);
    REQUIRE(r3.code == 0);
    REQUIRE(fs::exists(rec));
    CHECK(verify_replay(rec).ok);

    fs::remove(solver);
    fs::remove(csv);
    fs::remove(rec);
}

TEST_CASE("sweep-aux reports one row per aux value") {
    TrainerConfig c = default_trainer_config(GameKind::racing);
    c.hidden = {8};
    c.env.phys.max_steps_racing = 60;
    c.seed = 2;
    Trainer t(c);
    const std::string ckpt = unique_path("sweep_ckpt") + ".json";
    save_trainer(t, ckpt);
    const std::string cfg = unique_path("sweep_cfg") + ".json";
    save_experiment_config(c, cfg);
    const std::string csv = unique_path("sweep") + ".csv";

    CmdResult r = run_cli("sweep-aux --ckpt " + ckpt + " --config " + cfg +
                          " --aux 1,0,-1 --trials 4 --seed 2 --csv " + csv);
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "aux_+1.00,"));
    CHECK(contains(r.out, "aux_+0.00,"));
    CHECK(contains(r.out, "aux_-1.00,"));

    std::istringstream rows(read_file(csv));
    int n = 0;
    std::string l;
    while (std::getline(rows, l)) ++n;
    CHECK(n == 4);  // header + three aux rows

    CHECK(run_cli("sweep-aux --ckpt " + ckpt + " --aux nope").code == 2);

    fs::remove(ckpt);
    fs::remove(cfg);
    fs::remove(csv);
}
