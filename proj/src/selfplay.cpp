#include "tracksmith/selfplay.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tracksmith/checkpoint.hpp"
#include "tracksmith/evalharness.hpp"

namespace tracksmith {

std::vector<Vec3> randomize_goal(Rng& rng, GameKind game, const EnvConfig& cfg) {
    std::vector<Vec3> goals;
    if (game == GameKind::platform) {
        double ang = rng.uniform(0.0, 360.0);
        double dist = rng.uniform(cfg.goal_dist_min, cfg.goal_dist_max);
        double h = rng.uniform(cfg.goal_height_min, cfg.goal_height_max);
        goals.push_back(heading_unit(ang) * dist + Vec3{0.0, 0.0, h});
    } else {
        int k = cfg.waypoints_min +
                static_cast<int>(rng.uniform_int(
                    static_cast<std::uint64_t>(cfg.waypoints_max - cfg.waypoints_min + 1)));
        Vec3 p{0.0, 0.0, 0.0};
        double bearing = rng.uniform(-45.0, 45.0);  // initial road heads +x
        for (int i = 0; i < k; ++i) {
            double gap = rng.uniform(cfg.waypoint_gap_min, cfg.waypoint_gap_max);
            p = p + heading_unit(bearing) * gap;
            goals.push_back(p);
            bearing += rng.uniform(-cfg.waypoint_turn_max_deg, cfg.waypoint_turn_max_deg);
        }
    }
    return goals;
}

Vec3 static_track_goal(const TrackState& track) {
    if (track.game == GameKind::platform) return track.blocks.back().center;
    return track.arcs.back().end.position;
}

PolicySpec generator_policy_spec(GameKind game, int n_aux, const TrackConfig& cfg,
                                 const std::vector<int>& hidden) {
    PolicySpec s;
    s.hidden = hidden;
    s.obs_dim = generator_obs_dim(game, n_aux, cfg);
    if (game == GameKind::platform) {
        s.n_continuous = 4;
        s.act_lo = {5.0, -180.0, 4.0, -2.0};
        s.act_hi = {10.0, 180.0, 6.0, 2.0};
    } else {
        s.n_continuous = 3;
        s.act_lo = {20.0, -30.0, -5.0};
        s.act_hi = {30.0, 30.0, 5.0};
    }
    s.n_binary = 0;
    return s;
}

PolicySpec solver_policy_spec(GameKind game, const TrackConfig& cfg, const std::vector<int>& hidden) {
    PolicySpec s;
    s.hidden = hidden;
    s.obs_dim = solver_obs_dim(game, cfg);
    s.n_continuous = 2;
    s.act_lo = {-1.0, -1.0};
    s.act_hi = {1.0, 1.0};
    s.n_binary = game == GameKind::platform ? 1 : 0;
    return s;
}

double sample_aux_value(Rng& rng, const std::vector<double>& multiset) {
    assert(!multiset.empty());
    return multiset[rng.uniform_int(multiset.size())];
}

namespace {

bool frontier_now(const TrackState& track, const AgentState& agent, const EnvConfig& env) {
    if (env.game == GameKind::platform) {
        const PlatformBlock& b = track.blocks.back();
        Obb f{b.center, 0.5 * b.size, 0.5 * b.size, 1.0, b.yaw_deg};
        return f.contains_xy(agent.position);
    }
    RoadSample s = project_to_road(track, agent.position, agent.road_hint);
    return track.total_road_length() - s.s_total < env.phys.frontier_margin;
}

}  // namespace

int pack_replay_events(const StepEvents& ev) {
    return (ev.fell ? kReplayFell : 0) | (ev.off_track ? kReplayOffTrack : 0) |
           (ev.reached_goal ? kReplayReachedGoal : 0) | (ev.timed_out ? kReplayTimedOut : 0) |
           (ev.airtime_step ? kReplayAirtime : 0);
}

EpisodeResult run_episode(const EpisodeParams& params, const EnvConfig& env, Rng& rng) {
    assert(params.solver && !params.goals.empty());
    EpisodeResult res;
    res.aux_used = params.aux.values.empty() ? 0.0 : params.aux.values[0];

    bool dynamic = params.static_track == nullptr;
    assert(dynamic ? params.generator != nullptr : true);
    TrackState track = dynamic ? (env.game == GameKind::platform ? make_platform_track(env.track)
                                                                 : make_race_track(env.track))
                               : *params.static_track;
    const std::vector<Vec3>& goals = params.goals;
    std::size_t wp = 0;
    track.goal = goals[wp];

    AgentState agent;
    if (env.game == GameKind::platform) {
        Vec3 s = track.blocks.front().center;
        double bearing = rad_to_deg(std::atan2(goals[0].y - s.y, goals[0].x - s.x));
        agent = spawn_platform_agent(track, bearing);
    } else {
        agent = spawn_race_agent(track);
    }
    double d_start = distance(agent.position, goals.back());

    bool record_solver = params.mode == EpisodeMode::train_solver;
    bool record_gen = params.mode == EpisodeMode::train_generator;
    bool greedy_solver = params.mode == EpisodeMode::eval;

    if (params.replay) {
        params.replay->game = env.game;
        params.replay->aux = params.aux.values;
        params.replay->goals = goals;
        params.replay->initial_track = track;
        params.replay->track_cfg = env.track;
        params.replay->phys_cfg = env.phys;
        params.replay->steps.clear();
    }

    int gen_emissions = 0;
    int last_gen = -1;
    bool frontier = dynamic && frontier_now(track, agent, env);
    bool done = false;

    while (!done) {
        while (dynamic && frontier && gen_emissions < env.max_segments && !done) {
            track.goal = goals[wp];
            std::vector<double> gobs = build_generator_obs(track, params.aux.values, env.track);
            HeadOut out = params.generator->forward(gobs);
            ActionSample act = sample_action(out, params.generator->spec(), rng);
            if (env.game == GameKind::platform) {
                PlatformSegmentSpec s{act.env[0], act.env[1], act.env[2], act.env[3]};
                append_platform_segment(track, s, platform_bearing(track, 0.0));
            } else {
                RaceSegmentSpec s{act.env[0], act.env[1], act.env[2]};
                extend_race_track(track, s, env.track);
            }
            ++gen_emissions;
            if (record_gen) {
                res.generator_traj.push_back({std::move(gobs), act, 0.0, out.value, false});
                last_gen = static_cast<int>(res.generator_traj.size()) - 1;
            }
            if (params.replay) {
                params.replay->steps.push_back({true, act.env, agent.position, agent.heading_deg,
                                                agent.speed, agent.vertical_velocity, agent.airborne,
                                                track.terminated_by_collision ? kReplayCollision : 0});
            }
            if (track.terminated_by_collision) {
                res.collision = true;
                if (last_gen >= 0) {
                    res.generator_traj[last_gen].reward += generator_collision_reward(env.reward);
                }
                done = true;
                break;
            }
            frontier = frontier_now(track, agent, env);
        }
        if (done) break;

        std::vector<double> sobs = build_solver_obs(track, agent, goals[wp], env.track, env.phys);
        HeadOut out = params.solver->forward(sobs);
        ActionSample act = greedy_solver ? greedy_action(out, params.solver->spec())
                                         : sample_action(out, params.solver->spec(), rng);
        AgentState next;
        StepEvents ev;
        if (env.game == GameKind::platform) {
            PlatformAction a{act.env[0], act.env[1], act.env[2] > 0.5};
            std::tie(next, ev) = step_platform(agent, a, track, goals[wp], env.phys, env.track);
        } else {
            VehicleAction a{act.env[0], act.env[1]};
            std::tie(next, ev) = step_vehicle(agent, a, track, goals[wp], env.phys, env.track);
        }
        if (ev.reached_goal && wp + 1 < goals.size()) {
            ev.reached_goal = false;  // intermediate waypoint, not terminal
            ++wp;
            track.goal = goals[wp];
        }
        double sr = solver_step_reward(ev, env.reward);
        agent = next;
        ++res.steps;
        if (record_solver) res.solver_traj.push_back({std::move(sobs), act, sr, out.value, false});
        if (record_gen && last_gen >= 0) {
            res.generator_traj[last_gen].reward +=
                generator_step_reward(ev, params.aux, env.reward, env.game);
        }
        if (params.replay) {
            params.replay->steps.push_back({false, act.env, agent.position, agent.heading_deg,
                                            agent.speed, agent.vertical_velocity, agent.airborne,
                                            pack_replay_events(ev)});
        }
        if (ev.terminal()) {
            res.success = ev.reached_goal;
            done = true;
        } else {
            frontier = dynamic && ev.reached_segment_frontier;
        }
    }

    if (!res.solver_traj.empty()) res.solver_traj.back().done = true;
    if (!res.generator_traj.empty()) res.generator_traj.back().done = true;

    if (env.game == GameKind::platform) {
        res.distance_completed = d_start - distance(agent.position, goals.back());
    } else {
        RoadSample s = project_to_road(track, agent.position, agent.road_hint);
        res.distance_completed = s.s_total;
    }
    res.final_agent = agent;
    if (params.keep_track) res.final_track = std::move(track);
    if (params.replay) params.replay->success = res.success;
    return res;
}

void append_episode(RolloutBatch& batch, const std::vector<StepRecord>& traj, double gamma,
                    double lambda) {
    if (traj.empty()) return;
    if (batch.obs_dim == 0) {
        batch.obs_dim = static_cast<int>(traj[0].obs.size());
        batch.n_continuous = static_cast<int>(traj[0].act.u.size());
        batch.n_binary = static_cast<int>(traj[0].act.bin.size());
    }
    std::size_t n = traj.size();
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = traj[i].reward;
        v[i] = traj[i].value;
        d[i] = traj[i].done ? 1 : 0;
    }
    std::vector<double> adv, ret;
    gae(r, v, d, 0.0, gamma, lambda, &adv, &ret);
    for (std::size_t i = 0; i < n; ++i) {
        batch.obs.insert(batch.obs.end(), traj[i].obs.begin(), traj[i].obs.end());
        batch.act_u.insert(batch.act_u.end(), traj[i].act.u.begin(), traj[i].act.u.end());
        batch.act_bin.insert(batch.act_bin.end(), traj[i].act.bin.begin(), traj[i].act.bin.end());
        batch.old_log_prob.push_back(traj[i].act.log_prob);
        batch.advantages.push_back(adv[i]);
        batch.returns.push_back(ret[i]);
    }
}

Trainer::Trainer(const TrainerConfig& c)
    : cfg(c),
      generator(generator_policy_spec(c.env.game, c.n_aux, c.env.track, c.hidden)),
      solver(solver_policy_spec(c.env.game, c.env.track, c.hidden)),
      env_rng(Rng::stream(c.seed, 0)),
      update_rng(Rng::stream(c.seed, 1)) {
    Rng init_rng = Rng::stream(c.seed, 2);
    generator.init_weights(init_rng);
    solver.init_weights(init_rng);
    if (cfg.solver_source == TrackSourceKind::fixed_set) {
        Rng track_rng = Rng::stream(c.seed, 3);
        for (int i = 0; i < cfg.fixed_set_size; ++i) {
            fixed_tracks_.push_back(generate_rule_pcg(track_rng, cfg.env.game, cfg.env.track,
                                                      cfg.rule_segments, cfg.rule_max_abs_angle_deg));
        }
    }
    if (!cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);
}

std::vector<Trainer::PhaseKind> Trainer::phase_cycle() const {
    std::vector<PhaseKind> c;
    if (cfg.train_solver && cfg.schedule.solver_phase_steps > 0) {
        c.push_back({false, cfg.schedule.solver_phase_steps});
    }
    if (cfg.train_generator && cfg.schedule.generator_phase_steps > 0) {
        c.push_back({true, cfg.schedule.generator_phase_steps});
    }
    return c;
}

TrainStatus Trainer::run() {
    std::vector<PhaseKind> cycle = phase_cycle();
    if (!cycle.empty()) {
        while (env_steps < cfg.schedule.total_steps && status == TrainStatus::ok) {
            PhaseKind pk = cycle[phase_index % cycle.size()];
            long long budget = std::min(pk.length - in_phase_steps,
                                        cfg.schedule.total_steps - env_steps);
            if (budget > 0 && !run_phase(pk.generator_phase, budget)) break;
            if (in_phase_steps >= pk.length || env_steps >= cfg.schedule.total_steps) {
                ++phase_index;
                in_phase_steps = 0;
            }
        }
    }
    if (status == TrainStatus::ok && cfg.fine_tune_solver_steps > 0 && cfg.train_solver) {
        long long done = std::max(0LL, env_steps - cfg.schedule.total_steps);
        long long rem = cfg.fine_tune_solver_steps - done;
        if (rem > 0) run_phase(false, rem);
    }
    if (!cfg.output_dir.empty()) {
        save_trainer(*this, cfg.output_dir + "/checkpoint_final.json");
    }
    return status;
}

bool Trainer::run_phase(bool generator_phase, long long remaining) {
    MlpPolicy& pol = generator_phase ? generator : solver;
    Adam& opt = generator_phase ? gen_opt : solver_opt;
    const PpoHyper& hyper = generator_phase ? cfg.gen_hyper : cfg.solver_hyper;

    while (remaining > 0 && status == TrainStatus::ok) {
        long long target = std::min<long long>(cfg.rollout_steps, remaining);
        RolloutBatch batch;
        long long got = 0;
        int eps = 0, succ = 0;
        double rew_sum = 0.0, aux_sum = 0.0;
        while (got < target) {
            EpisodeResult ep = roll_one(generator_phase, &batch);
            const std::vector<StepRecord>& traj =
                generator_phase ? ep.generator_traj : ep.solver_traj;
            for (const StepRecord& s : traj) rew_sum += s.reward;
            long long s = std::max(1, ep.steps);  // collision-only episodes still advance
            got += s;
            env_steps += s;
            ++eps;
            succ += ep.success ? 1 : 0;
            aux_sum += ep.aux_used;
        }
        remaining -= got;
        in_phase_steps += got;

        TrainStats ts = ppo_update(pol, opt, batch, hyper, update_rng, cfg.threads);
        if (ts.nan_abort) {
            status = TrainStatus::halted_nan;
            std::fprintf(stderr, "[tracksmith] non-finite gradient at step %lld, halting phase\n",
                         env_steps);
            if (!cfg.output_dir.empty()) {
                std::ofstream f(cfg.output_dir + "/nan_halt.json");
                f << "{\"env_steps\": " << env_steps << ", \"phase_index\": " << phase_index
                  << ", \"role\": \"" << (generator_phase ? "generator" : "solver") << "\"}\n";
            }
            return false;
        }
        write_metrics_row(generator_phase ? "generator" : "solver", ts, eps,
                          eps > 0 ? static_cast<double>(succ) / eps : 0.0,
                          eps > 0 ? rew_sum / eps : 0.0, 0.0, eps > 0 ? aux_sum / eps : 0.0);
        maybe_periodic_checkpoint();
        maybe_eval();
    }
    return status == TrainStatus::ok;
}

EpisodeResult Trainer::roll_one(bool generator_phase, RolloutBatch* batch) {
    EpisodeParams p;
    p.mode = generator_phase ? EpisodeMode::train_generator : EpisodeMode::train_solver;
    p.generator = &generator;
    p.solver = &solver;
    double aux = cfg.fixed_aux ? *cfg.fixed_aux : sample_aux_value(env_rng, cfg.aux_multiset);
    p.aux = AuxVector(std::vector<double>(static_cast<std::size_t>(cfg.n_aux), aux));

    TrackState static_track;
    if (!generator_phase && cfg.solver_source != TrackSourceKind::generator) {
        if (cfg.solver_source == TrackSourceKind::rule_pcg) {
            static_track = generate_rule_pcg(env_rng, cfg.env.game, cfg.env.track,
                                             cfg.rule_segments, cfg.rule_max_abs_angle_deg);
        } else {
            static_track = fixed_tracks_[env_rng.uniform_int(fixed_tracks_.size())];
        }
        p.static_track = &static_track;
        p.goals = {static_track_goal(static_track)};
    } else {
        p.goals = randomize_goal(env_rng, cfg.env.game, cfg.env);
    }

    EpisodeResult ep = run_episode(p, cfg.env, env_rng);
    if (batch) {
        const PpoHyper& h = generator_phase ? cfg.gen_hyper : cfg.solver_hyper;
        append_episode(*batch, generator_phase ? ep.generator_traj : ep.solver_traj, h.gamma,
                       h.gae_lambda);
    }
    ++episodes_run;
    return ep;
}

void Trainer::write_metrics_row(const std::string& role, const TrainStats& ts, int episodes,
                                double success, double train_rew, double other_rew,
                                double aux_mean) {
    (void)other_rew;
    if (cfg.output_dir.empty()) return;
    std::string path = cfg.output_dir + "/metrics.csv";
    bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream f(path, std::ios::app);
    if (fresh) {
        f << "env_steps,phase,role,episodes,success,train_reward,policy_loss,value_loss,"
             "entropy,approx_kl,clip_fraction,aux_mean\n";
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%lld,%lld,%s,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.4f\n",
                  env_steps, phase_index, role.c_str(), episodes, success, train_rew,
                  ts.policy_loss, ts.value_loss, ts.entropy, ts.approx_kl, ts.clip_fraction,
                  aux_mean);
    f << buf;
}

void Trainer::maybe_periodic_checkpoint() {
    if (cfg.checkpoint_every_steps <= 0 || cfg.output_dir.empty()) return;
    if (env_steps - last_checkpoint_steps < cfg.checkpoint_every_steps) return;
    last_checkpoint_steps = env_steps;
    char name[64];
    std::snprintf(name, sizeof name, "/checkpoint_%012lld.json", env_steps);
    save_trainer(*this, cfg.output_dir + name);
}

void Trainer::maybe_eval() {
    if (cfg.eval_every_steps <= 0 || env_steps - last_eval_steps < cfg.eval_every_steps) return;
    last_eval_steps = env_steps;
    // Own stream keyed by progress; consumes no training randomness so that
    // resumed runs stay bit-identical.
    Rng eval_rng = Rng::stream(cfg.seed + 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(env_steps));
    int succ = 0;
    double aux_sum = 0.0;
    for (int i = 0; i < cfg.eval_episodes; ++i) {
        EpisodeParams p;
        p.mode = EpisodeMode::eval;
        p.generator = &generator;
        p.solver = &solver;
        double aux = cfg.fixed_aux ? *cfg.fixed_aux : sample_aux_value(eval_rng, cfg.aux_multiset);
        p.aux = AuxVector(std::vector<double>(static_cast<std::size_t>(cfg.n_aux), aux));
        TrackState static_track;
        if (cfg.solver_source != TrackSourceKind::generator) {
            if (cfg.solver_source == TrackSourceKind::rule_pcg) {
                static_track = generate_rule_pcg(eval_rng, cfg.env.game, cfg.env.track,
                                                 cfg.rule_segments, cfg.rule_max_abs_angle_deg);
            } else {
                static_track = fixed_tracks_[eval_rng.uniform_int(fixed_tracks_.size())];
            }
            p.static_track = &static_track;
            p.goals = {static_track_goal(static_track)};
        } else {
            p.goals = randomize_goal(eval_rng, cfg.env.game, cfg.env);
        }
        EpisodeResult ep = run_episode(p, cfg.env, eval_rng);
        succ += ep.success ? 1 : 0;
        aux_sum += ep.aux_used;
    }
    TrainStats empty;
    write_metrics_row("eval", empty, cfg.eval_episodes,
                      cfg.eval_episodes > 0 ? static_cast<double>(succ) / cfg.eval_episodes : 0.0,
                      0.0, 0.0, cfg.eval_episodes > 0 ? aux_sum / cfg.eval_episodes : 0.0);
}

}  // namespace tracksmith
