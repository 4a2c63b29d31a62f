#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tracksmith/selfplay.hpp"

using namespace tracksmith;
namespace fs = std::filesystem;

namespace {

bool bits_equal(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool params_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!bits_equal(a[i], b[i])) return false;
    }
    return true;
}

// Scripted policy: zero weights, chosen pre-squash mean biases, and a tiny
// sigma so sampled actions sit on the biases too. Bias +-20 drives tanh to
// exactly +-1, pinning the action at the range edge.
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

EnvConfig racing_env() {
    EnvConfig env;
    env.game = GameKind::racing;
    return env;
}

EnvConfig platform_env() {
    EnvConfig env;
    env.game = GameKind::platform;
    return env;
}

// Straight-road racing stub pair: generator emits 30 m straights, solver
// holds full throttle with zero steer.
MlpPolicy straight_generator(const EnvConfig& env, const std::vector<int>& hidden) {
    return scripted(generator_policy_spec(GameKind::racing, 1, env.track, hidden),
                    {20.0, 0.0, 0.0});
}

MlpPolicy full_throttle_solver(const EnvConfig& env, const std::vector<int>& hidden) {
    return scripted(solver_policy_spec(GameKind::racing, env.track, hidden), {20.0, 0.0});
}

// Exact mirror of the vehicle's longitudinal recurrence on a straight road:
// accel*dt = 0.25 per step at full throttle, v capped at 25, waypoint hit
// when the planar distance drops to the radius.
int straight_drive_oracle(const std::vector<double>& goal_x, double radius) {
    double v = 0.0, x = 0.0;
    int steps = 0;
    for (double g : goal_x) {
        while (std::abs(g - x) > radius) {
            v = std::min(25.0, v + 0.25);
            x += v * 0.05;
            ++steps;
        }
    }
    return steps;
}

std::string unique_dir(const char* tag) {
    static int counter = 0;
    return (fs::temp_directory_path() /
            (std::string("tracksmith_") + tag + "_" + std::to_string(++counter)))
        .string();
}

}  // namespace

TEST_CASE("aux multiset frequencies converge to (1/3, 1/6, 1/6, 1/3)") {
    const std::vector<double> multiset{-1.0, -1.0, -0.5, 0.5, 1.0, 1.0};
    Rng rng(60000);
    std::map<double, int> counts;
    const int n = 60000;
    for (int i = 0; i < n; ++i) counts[sample_aux_value(rng, multiset)] += 1;

    REQUIRE(counts.size() == 4);
    CHECK(std::abs(counts[-1.0] / double(n) - 1.0 / 3.0) < 0.01);
    CHECK(std::abs(counts[-0.5] / double(n) - 1.0 / 6.0) < 0.01);
    CHECK(std::abs(counts[0.5] / double(n) - 1.0 / 6.0) < 0.01);
    CHECK(std::abs(counts[1.0] / double(n) - 1.0 / 3.0) < 0.01);

    // Seeded draws reproduce.
    Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_aux_value(a, multiset) == sample_aux_value(b, multiset));
    }
}

TEST_CASE("randomize_goal respects the configured ranges") {
    EnvConfig env;
    Rng rng(777);

    double min_d = 1e9, max_d = 0.0, min_h = 1e9, max_h = -1e9;
    for (int i = 0; i < 10000; ++i) {
        std::vector<Vec3> g = randomize_goal(rng, GameKind::platform, env);
        REQUIRE(g.size() == 1);
        const double planar = std::hypot(g[0].x, g[0].y);
        REQUIRE(planar >= env.goal_dist_min);
        REQUIRE(planar <= env.goal_dist_max);
        REQUIRE(g[0].z >= env.goal_height_min);
        REQUIRE(g[0].z <= env.goal_height_max);
        min_d = std::min(min_d, planar);
        max_d = std::max(max_d, planar);
        min_h = std::min(min_h, g[0].z);
        max_h = std::max(max_h, g[0].z);
    }
    // The draws cover the ranges, not just sit inside them.
    CHECK(min_d < 31.0);
    CHECK(max_d > 79.0);
    CHECK(min_h < -9.0);
    CHECK(max_h > 19.0);

    std::map<std::size_t, int> k_counts;
    for (int i = 0; i < 10000; ++i) {
        std::vector<Vec3> g = randomize_goal(rng, GameKind::racing, env);
        REQUIRE(g.size() >= std::size_t(env.waypoints_min));
        REQUIRE(g.size() <= std::size_t(env.waypoints_max));
        k_counts[g.size()] += 1;
        Vec3 prev{0.0, 0.0, 0.0};
        double prev_bearing = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const Vec3 leg = g[k] - prev;
            const double gap = std::hypot(leg.x, leg.y);
            REQUIRE(gap >= env.waypoint_gap_min - 1e-9);
            REQUIRE(gap <= env.waypoint_gap_max + 1e-9);
            const double bearing = rad_to_deg(std::atan2(leg.y, leg.x));
            if (k == 0) {
                REQUIRE(std::abs(bearing) <= 45.0 + 1e-9);
            } else {
                REQUIRE(std::abs(wrap_degrees(bearing - prev_bearing)) <=
                        env.waypoint_turn_max_deg + 1e-9);
            }
            prev = g[k];
            prev_bearing = bearing;
        }
    }
    for (int k = env.waypoints_min; k <= env.waypoints_max; ++k) {
        CHECK(k_counts[std::size_t(k)] > 0);
    }

    Rng r1(4), r2(4);
    for (int i = 0; i < 50; ++i) {
        std::vector<Vec3> a = randomize_goal(r1, GameKind::racing, env);
        std::vector<Vec3> b = randomize_goal(r2, GameKind::racing, env);
        REQUIRE(a.size() == b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(bits_equal(a[k].x, b[k].x));
            CHECK(bits_equal(a[k].y, b[k].y));
            CHECK(bits_equal(a[k].z, b[k].z));
        }
    }
}

TEST_CASE("append_episode computes per-episode gae with zero bootstrap") {
    std::vector<StepRecord> traj(3);
    for (int i = 0; i < 3; ++i) {
        traj[i].obs = {double(i), 1.0};
        traj[i].act.u = {0.1 * i};
        traj[i].act.bin = {};
        traj[i].act.log_prob = -1.0 - i;
        traj[i].reward = 1.0 + i;  // 1, 2, 3
        traj[i].value = 0.5;
    }
    traj[2].done = true;

    RolloutBatch batch;
    append_episode(batch, traj, 0.9, 0.8);
    REQUIRE(batch.size() == 3);
    CHECK(batch.obs_dim == 2);
    CHECK(batch.n_continuous == 1);
    CHECK(batch.n_binary == 0);

    std::vector<double> adv, ret;
    gae({1.0, 2.0, 3.0}, {0.5, 0.5, 0.5}, {0, 0, 1}, 0.0, 0.9, 0.8, &adv, &ret);
    for (int i = 0; i < 3; ++i) {
        CHECK(bits_equal(batch.advantages[i], adv[i]));
        CHECK(bits_equal(batch.returns[i], ret[i]));
        CHECK(batch.old_log_prob[i] == -1.0 - i);
    }

    // A second episode appends flat and gets its own GAE, uncoupled from the
    // first one's rewards.
    std::vector<StepRecord> tail(2);
    tail[0].obs = {9.0, 9.0};
    tail[0].act.u = {0.0};
    tail[0].reward = -1.0;
    tail[0].value = 0.25;
    tail[1] = tail[0];
    tail[1].done = true;
    append_episode(batch, tail, 0.9, 0.8);
    REQUIRE(batch.size() == 5);
    std::vector<double> adv2, ret2;
    gae({-1.0, -1.0}, {0.25, 0.25}, {0, 1}, 0.0, 0.9, 0.8, &adv2, &ret2);
    CHECK(bits_equal(batch.advantages[3], adv2[0]));
    CHECK(bits_equal(batch.advantages[4], adv2[1]));

    // Empty trajectory: no-op.
    append_episode(batch, {}, 0.9, 0.8);
    CHECK(batch.size() == 5);
}

TEST_CASE("policy spec helpers expose the action ranges") {
    TrackConfig track;
    PolicySpec pg = generator_policy_spec(GameKind::platform, 1, track, {16});
    CHECK(pg.obs_dim == 11);
    CHECK(pg.n_continuous == 4);
    CHECK(pg.n_binary == 0);
    CHECK(pg.act_lo == std::vector<double>{5.0, -180.0, 4.0, -2.0});
    CHECK(pg.act_hi == std::vector<double>{10.0, 180.0, 6.0, 2.0});

    PolicySpec rg = generator_policy_spec(GameKind::racing, 2, track, {16});
    CHECK(rg.obs_dim == 5 + 2 + 16);
    CHECK(rg.n_continuous == 3);
    CHECK(rg.act_lo == std::vector<double>{20.0, -30.0, -5.0});
    CHECK(rg.act_hi == std::vector<double>{30.0, 30.0, 5.0});

    PolicySpec ps = solver_policy_spec(GameKind::platform, track, {16});
    CHECK(ps.obs_dim == 33);
    CHECK(ps.n_continuous == 2);
    CHECK(ps.n_binary == 1);

    PolicySpec rs = solver_policy_spec(GameKind::racing, track, {16});
    CHECK(rs.obs_dim == 27);
    CHECK(rs.n_binary == 0);
}

TEST_CASE("scripted racing episode finishes at the hand-computed step") {
    EnvConfig env = racing_env();
    const std::vector<int> hidden{8};
    MlpPolicy gen = straight_generator(env, hidden);
    MlpPolicy sol = full_throttle_solver(env, hidden);

    EpisodeParams p;
    p.mode = EpisodeMode::eval;  // greedy solver
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{0.5}};
    p.goals = {{150.0, 0.0, 0.0}};
    p.keep_track = true;

    Rng rng(11);
    EpisodeResult ep = run_episode(p, env, rng);
    CHECK(ep.success);
    CHECK(ep.steps == straight_drive_oracle({150.0}, env.phys.waypoint_radius));
    CHECK(ep.collision == false);
    CHECK(ep.aux_used == 0.5);
    // The generator kept ahead of the car: the final road runs past the goal
    // trigger point minus at most one frontier margin.
    CHECK(ep.final_track.total_road_length() > 150.0 - env.phys.waypoint_radius);
}

TEST_CASE("waypoints retarget without ending the episode") {
    EnvConfig env = racing_env();
    const std::vector<int> hidden{8};
    MlpPolicy gen = straight_generator(env, hidden);
    MlpPolicy sol = full_throttle_solver(env, hidden);

    EpisodeParams p;
    p.mode = EpisodeMode::eval;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{0.0}};
    p.goals = {{60.0, 0.0, 0.0}, {200.0, 0.0, 0.0}};

    Rng rng(12);
    EpisodeResult ep = run_episode(p, env, rng);
    CHECK(ep.success);
    const int two_leg = straight_drive_oracle({60.0, 200.0}, env.phys.waypoint_radius);
    const int one_leg = straight_drive_oracle({60.0}, env.phys.waypoint_radius);
    CHECK(ep.steps == two_leg);
    CHECK(ep.steps > one_leg);  // did not stop at the first waypoint
}

TEST_CASE("the generator stays ahead of the solver") {
    EnvConfig env = racing_env();
    const std::vector<int> hidden{8};
    MlpPolicy gen = straight_generator(env, hidden);
    MlpPolicy sol = full_throttle_solver(env, hidden);

    EpisodeParams p;
    p.mode = EpisodeMode::eval;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{0.0}};
    p.goals = {{250.0, 0.0, 0.0}};
    ReplayLog replay;
    p.replay = &replay;

    Rng rng(13);
    EpisodeResult ep = run_episode(p, env, rng);
    REQUIRE(ep.success);

    // Walk the replay: before every solver step the remaining road exceeds
    // the frontier margin minus one step of travel, so the car never runs
    // onto missing geometry.
    double road = env.track.start_road_length;
    const double max_step_travel = env.phys.speed_max * env.phys.dt;
    int emissions = 0;
    for (const ReplayStep& s : replay.steps) {
        if (s.generator) {
            road += s.action_env[0];
            ++emissions;
        } else {
            CHECK(road - s.position.x >= env.phys.frontier_margin - max_step_travel - 1e-9);
        }
    }
    CHECK(emissions > 5);
    CHECK(replay.success);
    CHECK(replay.goals.size() == 1);
}

TEST_CASE("a solver that never moves times out") {
    EnvConfig env = platform_env();
    env.phys.max_steps_platform = 50;
    const std::vector<int> hidden{8};
    // Zero-bias solver in greedy mode: move 0, turn 0 (it does jump in place,
    // which cannot reach anything).
    MlpPolicy gen = scripted(generator_policy_spec(GameKind::platform, 1, env.track, hidden),
                             {0.0, 0.0, 0.0, 0.0});
    MlpPolicy sol = scripted(solver_policy_spec(GameKind::platform, env.track, hidden), {0.0, 0.0});

    EpisodeParams p;
    p.mode = EpisodeMode::eval;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{1.0}};
    p.goals = {{40.0, 0.0, 0.0}};

    Rng rng(21);
    EpisodeResult ep = run_episode(p, env, rng);
    CHECK(!ep.success);
    CHECK(ep.steps == 50);
    CHECK(std::abs(ep.distance_completed) < 3.0);
}

TEST_CASE("a flat generator cannot serve a goal 20 m overhead") {
    EnvConfig env = platform_env();
    env.phys.max_steps_platform = 60;
    const std::vector<int> hidden{8};
    // Flat straight hops: distance mid-range, heights pinned to 0.
    MlpPolicy gen = scripted(generator_policy_spec(GameKind::platform, 1, env.track, hidden),
                             {0.0, 0.0, 0.0, 0.0});
    MlpPolicy sol = scripted(solver_policy_spec(GameKind::platform, env.track, hidden), {20.0, 0.0});

    EpisodeParams p;
    p.mode = EpisodeMode::eval;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{1.0}};
    p.goals = {{0.0, 0.0, 20.0}};
    p.keep_track = true;

    Rng rng(22);
    EpisodeResult ep = run_episode(p, env, rng);
    CHECK(!ep.success);
    // Sampled heights sit within sigma = e^-40 of the scripted zero.
    for (const PlatformBlock& b : ep.final_track.blocks) CHECK(std::abs(b.center.z) < 1e-12);

    // The geometry itself can climb when heights max out: +2 m per segment
    // reaches the goal's z tolerance band after nine emissions.
    TrackState climb = make_platform_track(env.track);
    for (int i = 0; i < 9; ++i) {
        PlatformSegmentSpec s;
        s.distance = 5.0;
        s.angle = 45.0;  // spiral footprint, stays near the goal column
        s.size = 6.0;
        s.height_delta = 2.0;
        append_platform_segment(climb, s, platform_bearing(climb, 0.0));
    }
    CHECK(climb.blocks.back().center.z == 18.0);  // within goal_z_tolerance of 20
}

TEST_CASE("episodes are reproducible under a fixed seed") {
    EnvConfig env = platform_env();
    env.phys.max_steps_platform = 120;
    const std::vector<int> hidden{16};
    PolicySpec gs = generator_policy_spec(GameKind::platform, 1, env.track, hidden);
    PolicySpec ss = solver_policy_spec(GameKind::platform, env.track, hidden);
    MlpPolicy gen(gs), sol(ss);
    Rng wr(303);
    gen.init_weights(wr);
    sol.init_weights(wr);

    auto run = [&](std::uint64_t seed) {
        EpisodeParams p;
        p.mode = EpisodeMode::train_solver;
        p.generator = &gen;
        p.solver = &sol;
        p.aux = AuxVector{{-0.5}};
        p.goals = {{35.0, 10.0, 0.0}};
        Rng rng(seed);
        return run_episode(p, env, rng);
    };

    EpisodeResult a = run(99);
    EpisodeResult b = run(99);
    EpisodeResult c = run(100);
    CHECK(a.steps == b.steps);
    CHECK(a.success == b.success);
    CHECK(bits_equal(a.final_agent.position.x, b.final_agent.position.x));
    CHECK(bits_equal(a.final_agent.position.z, b.final_agent.position.z));
    REQUIRE(a.solver_traj.size() == b.solver_traj.size());
    for (std::size_t i = 0; i < a.solver_traj.size(); ++i) {
        CHECK(bits_equal(a.solver_traj[i].reward, b.solver_traj[i].reward));
        CHECK(bits_equal(a.solver_traj[i].act.log_prob, b.solver_traj[i].act.log_prob));
    }
    // A different seed takes a different path.
    bool same = a.steps == c.steps;
    if (same && !a.solver_traj.empty() && !c.solver_traj.empty()) {
        same = bits_equal(a.solver_traj[0].act.u[0], c.solver_traj[0].act.u[0]);
    }
    CHECK(!same);

    // train_solver records solver steps only; train_generator the reverse.
    CHECK(!a.solver_traj.empty());
    CHECK(a.generator_traj.empty());
}

TEST_CASE("a colliding emission ends the episode and eats the penalty") {
    // Short start road so the first curl is emitted at spawn, and a wide
    // ribbon so the second curl's probe reaches back to the start straight:
    // arc 2 begins ~18.6 m from the start ribbon's end face, inside the
    // 20 m probe range. Deterministic two-emission collision.
    EnvConfig env = racing_env();
    env.track.start_road_length = 6.0;
    env.track.road_half_width = 20.0;
    const std::vector<int> hidden{8};
    MlpPolicy gen = scripted(generator_policy_spec(GameKind::racing, 1, env.track, hidden),
                             {-20.0, 20.0, 0.0});  // length 20, curve +30, flat
    MlpPolicy sol = scripted(solver_policy_spec(GameKind::racing, env.track, hidden), {20.0, 0.0});

    EpisodeParams p;
    p.mode = EpisodeMode::train_generator;
    p.generator = &gen;
    p.solver = &sol;
    p.aux = AuxVector{{-1.0}};
    p.goals = {{300.0, 0.0, 0.0}};
    p.keep_track = true;

    Rng rng(31);
    EpisodeResult ep = run_episode(p, env, rng);
    CHECK(ep.collision);
    CHECK(!ep.success);
    CHECK(ep.steps > 0);  // the car drove to trigger the second emission
    CHECK(ep.final_track.terminated_by_collision);
    CHECK(ep.solver_traj.empty());  // generator mode records its own side
    REQUIRE(ep.generator_traj.size() == 2);
    // The colliding emission is the freshest record and carries only the
    // flat collision penalty; its predecessor accrued the drive's rewards.
    CHECK(ep.generator_traj.back().reward == -10.0);
    CHECK(ep.generator_traj.back().done);
    CHECK(std::isfinite(ep.generator_traj.front().reward));
}

TEST_CASE("trainer zeroed generator phase degenerates to solver training") {
    TrainerConfig cfg;
    cfg.env = platform_env();
    cfg.env.phys.max_steps_platform = 60;
    cfg.hidden = {16, 16};
    cfg.schedule = {300, 0, 600};
    cfg.rollout_steps = 128;
    cfg.gen_hyper.minibatch_size = 64;
    cfg.solver_hyper.minibatch_size = 64;
    cfg.gen_hyper.epochs = 2;
    cfg.solver_hyper.epochs = 2;
    cfg.seed = 5;

    Trainer t(cfg);
    const std::vector<double> gen_before = t.generator.params();
    const std::vector<double> sol_before = t.solver.params();
    REQUIRE(t.run() == TrainStatus::ok);
    CHECK(t.env_steps >= 600);
    CHECK(params_equal(t.generator.params(), gen_before));  // never trained
    CHECK(!params_equal(t.solver.params(), sol_before));
}

TEST_CASE("frozen opponent stays bit-identical through the other phase") {
    TrainerConfig base;
    base.env = platform_env();
    base.env.phys.max_steps_platform = 60;
    base.hidden = {16, 16};
    base.rollout_steps = 64;
    base.gen_hyper.minibatch_size = 64;
    base.solver_hyper.minibatch_size = 64;
    base.gen_hyper.epochs = 2;
    base.solver_hyper.epochs = 2;
    base.seed = 6;

    // One solver phase only: generator must come out untouched.
    TrainerConfig first = base;
    first.schedule = {200, 100, 200};
    Trainer a(first);
    const std::vector<double> gen_init = a.generator.params();
    REQUIRE(a.run() == TrainStatus::ok);
    CHECK(params_equal(a.generator.params(), gen_init));
    CHECK(a.phase_index >= 1);

    // Let the schedule reach a generator phase: now it moves.
    TrainerConfig second = base;
    second.schedule = {200, 100, 400};
    Trainer b(second);
    REQUIRE(b.run() == TrainStatus::ok);
    CHECK(!params_equal(b.generator.params(), gen_init));

    // Explicit freeze switches.
    TrainerConfig frozen = base;
    frozen.schedule = {150, 80, 300};
    frozen.train_generator = false;
    Trainer c(frozen);
    const std::vector<double> cg = c.generator.params();
    REQUIRE(c.run() == TrainStatus::ok);
    CHECK(params_equal(c.generator.params(), cg));
}

TEST_CASE("micro training runs are bit-deterministic across repeats and threads") {
    TrainerConfig cfg;
    cfg.env = racing_env();
    cfg.env.phys.max_steps_racing = 100;
    cfg.hidden = {16, 16};
    cfg.schedule = {150, 50, 400};
    cfg.rollout_steps = 64;
    cfg.gen_hyper.minibatch_size = 64;
    cfg.solver_hyper.minibatch_size = 64;
    cfg.gen_hyper.epochs = 2;
    cfg.solver_hyper.epochs = 2;
    cfg.seed = 7;
    cfg.threads = 1;

    Trainer a(cfg);
    REQUIRE(a.run() == TrainStatus::ok);

    Trainer b(cfg);
    REQUIRE(b.run() == TrainStatus::ok);

    TrainerConfig threaded = cfg;
    threaded.threads = 2;
    Trainer c(threaded);
    REQUIRE(c.run() == TrainStatus::ok);

    CHECK(a.env_steps == b.env_steps);
    CHECK(a.episodes_run == b.episodes_run);
    CHECK(params_equal(a.generator.params(), b.generator.params()));
    CHECK(params_equal(a.solver.params(), b.solver.params()));

    CHECK(a.env_steps == c.env_steps);
    CHECK(params_equal(a.generator.params(), c.generator.params()));
    CHECK(params_equal(a.solver.params(), c.solver.params()));
}

TEST_CASE("fixed aux override reaches every episode and the metrics log") {
    const std::string dir = unique_dir("aux");
    TrainerConfig cfg;
    cfg.env = platform_env();
    cfg.env.phys.max_steps_platform = 60;
    cfg.hidden = {16, 16};
    cfg.schedule = {150, 50, 300};
    cfg.rollout_steps = 64;
    cfg.gen_hyper.minibatch_size = 64;
    cfg.solver_hyper.minibatch_size = 64;
    cfg.gen_hyper.epochs = 2;
    cfg.solver_hyper.epochs = 2;
    cfg.seed = 8;
    cfg.fixed_aux = 0.25;
    cfg.output_dir = dir;

    Trainer t(cfg);
    REQUIRE(t.run() == TrainStatus::ok);

    std::ifstream f(dir + "/metrics.csv");
    REQUIRE(f.good());
    std::string line;
    std::getline(f, line);  // header
    CHECK(line.find("aux_mean") != std::string::npos);
    int rows = 0;
    bool saw_solver = false, saw_generator = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        ++rows;
        if (line.find(",solver,") != std::string::npos) saw_solver = true;
        if (line.find(",generator,") != std::string::npos) saw_generator = true;
        // aux_mean is the last column; the override pins it to 0.25 exactly.
        const std::size_t comma = line.rfind(',');
        REQUIRE(comma != std::string::npos);
        CHECK(line.substr(comma + 1) == "0.2500");
    }
    CHECK(rows >= 2);
    CHECK(saw_solver);
    CHECK(saw_generator);
    fs::remove_all(dir);
}

TEST_CASE("nan rewards halt the phase and dump a diagnostic") {
    const std::string dir = unique_dir("nan");
    TrainerConfig cfg;
    cfg.env = platform_env();
    cfg.env.phys.max_steps_platform = 40;
    cfg.hidden = {16};
    cfg.schedule = {60, 60, 240};
    cfg.rollout_steps = 32;
    cfg.gen_hyper.minibatch_size = 32;
    cfg.solver_hyper.minibatch_size = 32;
    cfg.seed = 9;
    cfg.fixed_aux = std::numeric_limits<double>::quiet_NaN();
    cfg.output_dir = dir;

    Trainer t(cfg);
    CHECK(t.run() == TrainStatus::halted_nan);
    CHECK(t.status == TrainStatus::halted_nan);
    CHECK(fs::exists(dir + "/nan_halt.json"));
    fs::remove_all(dir);
}

TEST_CASE("fixed track set is stable for a given seed") {
    TrainerConfig cfg;
    cfg.env = racing_env();
    cfg.hidden = {8};
    cfg.solver_source = TrackSourceKind::fixed_set;
    cfg.fixed_set_size = 4;
    cfg.seed = 10;

    Trainer a(cfg);
    Trainer b(cfg);
    REQUIRE(a.fixed_tracks().size() == 4);
    REQUIRE(b.fixed_tracks().size() == 4);
    for (int i = 0; i < 4; ++i) {
        const TrackState& ta = a.fixed_tracks()[i];
        const TrackState& tb = b.fixed_tracks()[i];
        REQUIRE(ta.arcs.size() == tb.arcs.size());
        CHECK(bits_equal(ta.arcs.back().end.position.x, tb.arcs.back().end.position.x));
        CHECK(bits_equal(ta.arcs.back().end.position.y, tb.arcs.back().end.position.y));
    }
}
